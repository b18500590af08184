// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "gpm/error.hpp"
#include "gpm/json_util.hpp"

namespace gpm {
namespace {

nlohmann::json optimizer_json(const SgdConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},         {"weight_decay", c.weight_decay},
            {"clip_low", c.clip_low},           {"clip_high", c.clip_high},       {"decay_factor", c.decay_factor},
            {"decay_interval_epochs", c.decay_interval_epochs}};
}

void read_optimizer(const nlohmann::json& j, SgdConfig& c) {
    constexpr std::string_view s = "training.optimizer";
    check_keys(j, s,
               {"learning_rate", "momentum", "weight_decay", "clip_low", "clip_high", "decay_factor",
                "decay_interval_epochs"});
    read_key(j, s, "learning_rate", c.learning_rate);
    read_key(j, s, "momentum", c.momentum);
    read_key(j, s, "weight_decay", c.weight_decay);
    read_key(j, s, "clip_low", c.clip_low);
    read_key(j, s, "clip_high", c.clip_high);
    read_key(j, s, "decay_factor", c.decay_factor);
    read_key(j, s, "decay_interval_epochs", c.decay_interval_epochs);
}

void read_training(const nlohmann::json& j, TrainConfig& c) {
    constexpr std::string_view s = "training";
    check_keys(j, s,
               {"epochs", "batch_size", "lambda", "clip_frames", "augment", "class_weighting", "optimizer",
                "augmentation"});
    read_key(j, s, "epochs", c.epochs);
    read_key(j, s, "batch_size", c.batch_size);
    read_key(j, s, "lambda", c.lambda);
    read_key(j, s, "clip_frames", c.clip_frames);
    read_key(j, s, "augment", c.augment);
    read_key(j, s, "class_weighting", c.class_weighting);
    if (j.contains("optimizer")) read_optimizer(j["optimizer"], c.optimizer);
    if (j.contains("augmentation")) j["augmentation"].get_to(c.augmentation);
}

std::optional<double> parse_tau(const std::string& text) {
    if (text == "none" || text == "global") return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("--tau expects a number in [0, 1] or 'none', got '" + text + "'");
    }
    return v;
}

/// Settings that differ between the desk and paper scales.
void apply_preset(RunConfig& c) {
    if (c.model.preset != Preset::paper) return;
    c.training.optimizer.learning_rate = 1e-3;
    c.training.optimizer.decay_interval_epochs = 100;
    c.training.clip_frames = 80;
    c.generator.frames = 160;
    c.generator.height = 128;
    c.generator.width = 128;
    c.generator.num_classes = 8;
    c.model.num_classes = 8;
}

} // namespace

void RunConfig::finalize() {
    generator.seed = seed;
    training.seed = seed;
    generator.validate();
    model.num_classes = generator.num_classes;
    if (modalities.empty()) throw ConfigError("at least one modality is required");
    model.validate();
    training.validate();
    detector.validate();
    if (grid_points < 2) throw ConfigError("evaluation.grid_points must be at least 2");
    for (double x : nttd_targets)
        if (!(x > 0.0 && x <= 1.0)) throw ConfigError("evaluation.nttd_targets must lie in (0, 1]");
    if (!(fusion_resolution > 0.0 && fusion_resolution <= 1.0)) throw ConfigError("evaluation.fusion_resolution must lie in (0, 1]");
    if (model.height > generator.height || model.width > generator.width) {
        throw ConfigError("model frame " + std::to_string(model.height) + "x" + std::to_string(model.width) +
                          " is larger than generated frames " + std::to_string(generator.height) + "x" +
                          std::to_string(generator.width));
    }
}

EvalSettings RunConfig::eval_settings() const {
    EvalSettings s;
    s.epsilon = detector.epsilon;
    s.tau = detector.tau;
    s.refractory = detector.refractory;
    s.grid_points = grid_points;
    s.nttd_targets = nttd_targets;
    return s;
}

std::vector<Modality> parse_modality_list(const std::string& value) {
    if (value == "all") return {Modality::depth, Modality::color, Modality::flow};
    std::vector<Modality> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t pos = std::min(value.find(',', start), value.size());
        const Modality m = parse_modality(value.substr(start, pos - start));
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
        start = pos + 1;
    }
    return out;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    check_keys(j, "config", {"seed", "modalities", "generator", "model", "training", "detector", "evaluation", "paths"});
    RunConfig c;
    read_key(j, "config", "seed", c.seed);
    if (j.contains("model")) j["model"].get_to(c.model);
    apply_preset(c);
    if (j.contains("modalities")) {
        std::vector<std::string> names;
        read_key(j, "config", "modalities", names);
        c.modalities.clear();
        for (const auto& n : names) {
            for (Modality m : parse_modality_list(n))
                if (std::find(c.modalities.begin(), c.modalities.end(), m) == c.modalities.end()) c.modalities.push_back(m);
        }
    }
    if (j.contains("generator")) {
        if (j["generator"].contains("seed")) throw ConfigError("generator: set the run seed at the top level");
        j["generator"].get_to(c.generator);
    }
    if (j.contains("training")) read_training(j["training"], c.training);
    if (j.contains("detector")) {
        const auto& d = j["detector"];
        check_keys(d, "detector", {"epsilon", "tau", "refractory", "noise_floor"});
        read_key(d, "detector", "epsilon", c.detector.epsilon);
        if (d.contains("tau")) {
            if (d["tau"].is_null()) c.detector.tau.reset();
            else if (d["tau"].is_string()) c.detector.tau = parse_tau(d["tau"].get<std::string>());
            else {
                double tau = 0.0;
                read_key(d, "detector", "tau", tau);
                c.detector.tau = tau;
            }
        }
        read_key(d, "detector", "refractory", c.detector.refractory);
        read_key(d, "detector", "noise_floor", c.detector.noise_floor);
    }
    if (j.contains("evaluation")) {
        const auto& e = j["evaluation"];
        check_keys(e, "evaluation", {"grid_points", "nttd_targets", "fusion_resolution"});
        read_key(e, "evaluation", "grid_points", c.grid_points);
        read_key(e, "evaluation", "nttd_targets", c.nttd_targets);
        read_key(e, "evaluation", "fusion_resolution", c.fusion_resolution);
    }
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        check_keys(p, "paths", {"corpus", "checkpoints", "reports"});
        std::string s;
        if (p.contains("corpus")) c.paths.corpus = (read_key(p, "paths", "corpus", s), s);
        if (p.contains("checkpoints")) c.paths.checkpoints = (read_key(p, "paths", "checkpoints", s), s);
        if (p.contains("reports")) c.paths.reports = (read_key(p, "paths", "reports", s), s);
    }
    return c;
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["modalities"] = nlohmann::json::array();
    for (Modality m : c.modalities) j["modalities"].push_back(to_string(m));
    j["generator"] = c.generator;
    j["generator"].erase("seed");
    j["model"] = c.model;
    j["training"] = {{"epochs", c.training.epochs},
                     {"batch_size", c.training.batch_size},
                     {"lambda", c.training.lambda},
                     {"clip_frames", c.training.clip_frames},
                     {"augment", c.training.augment},
                     {"class_weighting", c.training.class_weighting},
                     {"optimizer", optimizer_json(c.training.optimizer)},
                     {"augmentation", c.training.augmentation}};
    j["detector"] = {{"epsilon", c.detector.epsilon},
                     {"tau", c.detector.tau ? nlohmann::json(*c.detector.tau) : nlohmann::json(nullptr)},
                     {"refractory", c.detector.refractory},
                     {"noise_floor", c.detector.noise_floor}};
    j["evaluation"] = {{"grid_points", c.grid_points},
                       {"nttd_targets", c.nttd_targets},
                       {"fusion_resolution", c.fusion_resolution}};
    j["paths"] = {{"corpus", c.paths.corpus.string()},
                  {"checkpoints", c.paths.checkpoints.string()},
                  {"reports", c.paths.reports.string()}};
    return j;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const Overrides& overrides) {
    RunConfig c;
    if (path) {
        std::ifstream is(*path);
        if (!is) throw ConfigError("cannot open config file " + path->string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(is);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path->string() + ": " + e.what());
        }
        c = run_config_from_json(j);
    }
    if (overrides.seed) c.seed = *overrides.seed;
    if (overrides.modality) c.modalities = parse_modality_list(*overrides.modality);
    if (overrides.epsilon) c.detector.epsilon = *overrides.epsilon;
    if (overrides.tau) c.detector.tau = parse_tau(*overrides.tau);
    c.finalize();
    return c;
}

} // namespace gpm
