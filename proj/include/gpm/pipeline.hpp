// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "gpm/detector.hpp"
#include "gpm/metrics.hpp"
#include "gpm/run_config.hpp"

namespace gpm {

inline constexpr const char* kEffectiveConfigName = "effective_config.json";

void write_effective_config(const RunConfig& config, const std::filesystem::path& dir);

/// Generates the corpus into `out` and writes its manifest.
void cmd_generate(const RunConfig& config, const std::filesystem::path& out, bool force);

/// Trains one checkpoint per requested modality into `out` (<modality>.ckpt plus
/// train_log_<modality>.csv). With several modalities depth is trained first
/// and inflated to initialize color and flow. Progress goes to `progress`.
void cmd_train(const RunConfig& config, const std::filesystem::path& corpus, const std::filesystem::path& out,
               std::ostream& progress);

/// Scores the test split with <checkpoints>/<modality>.ckpt and writes the
/// report files, per-video traces and online events into `out`. With several
/// modalities a fused report is added whose weights are fitted on the train
/// split. `dump_inputs` also writes each preprocessed test clip under
/// inputs/<modality>/ as a frame-major tensor file.
MetricsReport cmd_eval(const RunConfig& config, const std::filesystem::path& corpus,
                       const std::filesystem::path& checkpoints, const std::filesystem::path& out, bool dump_inputs);

/// Reads frame-major frames from `in` and prints one line per online trigger.
/// Returns the number of events.
std::size_t cmd_stream(const Model& model, const DetectorConfig& detector, std::istream& in, std::ostream& out);

/// frame_index,class_id,gpm_value,prob_0,...,prob_N
std::string format_event(const DetectionEvent& event);

} // namespace gpm
