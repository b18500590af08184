// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpm/detector.hpp"
#include "gpm/metrics.hpp"
#include "gpm/model.hpp"
#include "gpm/synth.hpp"
#include "gpm/trainer.hpp"

namespace gpm {

struct PathsConfig {
    std::filesystem::path corpus = "corpus";
    std::filesystem::path checkpoints = "checkpoints";
    std::filesystem::path reports = "reports";
};

struct RunConfig {
    std::uint64_t seed = 20240601;
    std::vector<Modality> modalities{Modality::depth};
    GeneratorConfig generator;
    ModelConfig model;
    TrainConfig training;
    DetectorConfig detector{0.5, 0.75, 8, 0.0};
    std::size_t grid_points = 101;
    std::vector<double> nttd_targets{0.25, 0.5, 0.75};
    double fusion_resolution = 0.05;
    PathsConfig paths;

    /// Propagates the run seed and validates every section.
    void finalize();
    EvalSettings eval_settings() const;
};

/// Command-line values that override the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> modality; // depth, color, flow or all
    std::optional<double> epsilon;
    std::optional<std::string> tau;      // number or "none"
};

/// Defaults, then the file (if any), then the overrides. Throws ConfigError.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const Overrides& overrides = {});
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

std::vector<Modality> parse_modality_list(const std::string& value);

} // namespace gpm
