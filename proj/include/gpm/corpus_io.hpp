// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpm/synth.hpp"

// On-disk corpus layout:
//   <dir>/manifest.json
//   <dir>/<split>/annotations.csv
//   <dir>/<split>/depth/<video_id>.gpmt   (frame-major tensor file)
// Color and flow are derived from depth when loaded.
namespace gpm {

inline constexpr const char* kManifestName = "manifest.json";

/// Refuses to touch an existing corpus unless `force` is set.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, const GeneratorConfig& config,
                  const std::vector<GestureSpec>& specs, bool force);

nlohmann::json read_manifest(const std::filesystem::path& dir);

/// Loads the depth videos of one split ("train" or "test") with annotations.
std::vector<VideoSample> read_split(const std::filesystem::path& dir, const std::string& split);

GeneratorConfig corpus_generator_config(const std::filesystem::path& dir);

} // namespace gpm
