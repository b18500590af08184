// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/corpus_io.hpp"

#include <fstream>
#include <map>

#include "gpm/binary_io.hpp"
#include "gpm/error.hpp"

namespace gpm {
namespace fs = std::filesystem;

namespace {

void write_split(const fs::path& dir, const std::string& split, const std::vector<VideoSample>& videos,
                 nlohmann::json& manifest) {
    const fs::path split_dir = dir / split;
    fs::create_directories(split_dir / "depth");
    std::vector<FrameAnnotation> all;
    nlohmann::json entries = nlohmann::json::array();
    for (const VideoSample& v : videos) {
        const std::string rel = split + "/depth/" + v.id + ".gpmt";
        io::write_video_file(dir / rel, v.frames);
        all.insert(all.end(), v.annotations.begin(), v.annotations.end());
        entries.push_back({{"id", v.id},
                           {"file", rel},
                           {"modality", "depth"},
                           {"seed", v.seed},
                           {"shape", {v.frames.extent(1), v.frames.extent(0), v.frames.extent(2), v.frames.extent(3)}},
                           {"segments", v.annotations.size()}});
        manifest["files"].push_back(rel);
    }
    const std::string ann = split + "/annotations.csv";
    write_annotations(dir / ann, all);
    manifest["files"].push_back(ann);
    manifest["splits"][split] = {{"annotations", ann}, {"videos", std::move(entries)}};
}

} // namespace

void write_corpus(const fs::path& dir, const Corpus& corpus, const GeneratorConfig& config,
                  const std::vector<GestureSpec>& specs, bool force) {
    if (fs::exists(dir / kManifestName) || fs::exists(dir / "train") || fs::exists(dir / "test")) {
        if (!force) throw DataError("a corpus already exists in " + dir.string() + "; pass --force to overwrite it");
        fs::remove_all(dir / "train");
        fs::remove_all(dir / "test");
        fs::remove(dir / kManifestName);
    }
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "gpm-detect corpus";
    manifest["version"] = 1;
    manifest["generator"] = config;
    manifest["classes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < config.num_classes; ++i) {
        manifest["classes"].push_back({{"id", specs[i].class_id}, {"name", specs[i].name}});
    }
    manifest["modalities"] = {{"stored", {"depth"}}, {"derived", {"color", "flow"}}};
    manifest["files"] = nlohmann::json::array();
    write_split(dir, "train", corpus.train, manifest);
    write_split(dir, "test", corpus.test, manifest);
    std::ofstream os(dir / kManifestName, std::ios::trunc);
    if (!os) throw DataError("cannot write " + (dir / kManifestName).string());
    os << manifest.dump(2) << '\n';
}

nlohmann::json read_manifest(const fs::path& dir) {
    const fs::path path = dir / kManifestName;
    std::ifstream is(path);
    if (!is) throw DataError("no corpus at " + dir.string() + " (missing " + kManifestName + ")");
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<VideoSample> read_split(const fs::path& dir, const std::string& split) {
    const nlohmann::json manifest = read_manifest(dir);
    if (!manifest.contains("splits") || !manifest["splits"].contains(split)) {
        throw DataError(dir.string() + ": manifest has no split '" + split + "'");
    }
    const auto& entry = manifest["splits"][split];
    std::map<std::string, std::vector<FrameAnnotation>> by_video;
    for (auto& a : read_annotations(dir / entry.at("annotations").get<std::string>())) {
        by_video[a.video_id].push_back(std::move(a));
    }
    std::vector<VideoSample> out;
    for (const auto& v : entry.at("videos")) {
        VideoSample s;
        s.id = v.at("id").get<std::string>();
        s.seed = v.at("seed").get<std::uint64_t>();
        s.frames = io::read_video_file(dir / v.at("file").get<std::string>());
        if (auto it = by_video.find(s.id); it != by_video.end()) s.annotations = std::move(it->second);
        try {
            validate_annotations(s.annotations, s.length());
        } catch (const DataError& e) {
            throw DataError(dir.string() + "/" + split + ": " + e.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

GeneratorConfig corpus_generator_config(const fs::path& dir) {
    const nlohmann::json manifest = read_manifest(dir);
    GeneratorConfig c;
    try {
        manifest.at("generator").get_to(c);
    } catch (const std::exception& e) {
        throw DataError(dir.string() + ": bad generator block in manifest: " + e.what());
    }
    return c;
}

} // namespace gpm
