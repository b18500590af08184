// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpm/tensor.hpp"

namespace gpm {

struct SgdConfig {
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double weight_decay = 5e-3;
    double clip_low = -10.0;
    double clip_high = 10.0;
    double decay_factor = 0.1;
    int decay_interval_epochs = 100;

    void validate() const;
};

/// SGD with elementwise gradient clipping, L2 weight decay and heavy-ball
/// momentum:
///   g <- clip(g, low, high) + weight_decay * w
///   v <- momentum * v + g
///   w <- w - lr(epoch) * v
/// with lr(epoch) = learning_rate * decay_factor^floor(epoch / interval).
class SgdOptimizer {
public:
    SgdOptimizer() = default;
    SgdOptimizer(SgdConfig config, std::span<Parameter* const> params);

    const SgdConfig& config() const { return config_; }
    double current_learning_rate() const;

    void set_epoch(int epoch) { epoch_ = epoch; }
    int epoch() const { return epoch_; }
    std::uint64_t steps() const { return steps_; }

    /// Applies one update from the gradients in each parameter's grad slot.
    void step(std::span<Parameter* const> params);

    const std::vector<Tensor>& momentum_buffers() const { return velocity_; }

    /// Restores serialized state. Buffer shapes must match the parameters.
    void restore(SgdConfig config, int epoch, std::uint64_t steps, std::vector<Tensor> velocity,
                 std::span<Parameter* const> params);

private:
    SgdConfig config_;
    std::vector<Tensor> velocity_;
    int epoch_ = 0;
    std::uint64_t steps_ = 0;
};

void zero_grads(std::span<Parameter* const> params);

} // namespace gpm
