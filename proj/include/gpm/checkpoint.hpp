// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gpm/model.hpp"
#include "gpm/optimizer.hpp"

namespace gpm {

struct NamedTensor {
    std::string name;
    Tensor value;
};

struct NamedStats {
    std::string name;
    kernels::BatchNormStats stats;
};

struct OptimizerSnapshot {
    SgdConfig config;
    int epoch = 0;
    std::uint64_t steps = 0;
    std::vector<Tensor> velocity; // in parameter order
};

struct Checkpoint {
    ModelConfig config;
    std::vector<NamedTensor> parameters;
    std::vector<NamedStats> batchnorm;
    std::optional<OptimizerSnapshot> optimizer;
};

inline constexpr std::string_view kCheckpointMagic = "GPMDCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

Checkpoint capture(const Model& model, const SgdOptimizer* optimizer = nullptr);

/// Rebuilds the model. Throws DataError when a stored tensor is missing or its
/// shape disagrees with the embedded config.
Model restore_model(const Checkpoint& ckpt);
/// Restores momentum buffers, epoch and step count into `optimizer`.
void restore_optimizer(const Checkpoint& ckpt, Model& model, SgdOptimizer& optimizer);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws DataError naming both counts when the checkpoint was trained for a
/// different number of gesture classes.
void require_class_count(const Checkpoint& ckpt, std::size_t num_classes);

/// Replicates the first-layer kernels of a single-channel checkpoint across
/// `target_channels` inputs and divides them by that count, so a
/// channel-replicated input reproduces the source activations. Optimizer state
/// is dropped.
Checkpoint inflate_weights(const Checkpoint& source, std::size_t target_channels);

} // namespace gpm
