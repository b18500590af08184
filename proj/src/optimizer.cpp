// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpm {

void SgdConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be non-negative");
    if (!(clip_low < clip_high)) throw std::invalid_argument("gradient clip bounds must satisfy low < high");
    if (!(decay_factor > 0.0) || decay_interval_epochs <= 0) {
        throw std::invalid_argument("learning-rate decay needs a positive factor and interval");
    }
}

SgdOptimizer::SgdOptimizer(SgdConfig config, std::span<Parameter* const> params) : config_(config) {
    config_.validate();
    velocity_.reserve(params.size());
    for (const Parameter* p : params) velocity_.emplace_back(p->value.shape());
}

double SgdOptimizer::current_learning_rate() const {
    return config_.learning_rate * std::pow(config_.decay_factor, epoch_ / config_.decay_interval_epochs);
}

void SgdOptimizer::step(std::span<Parameter* const> params) {
    if (params.size() != velocity_.size()) {
        throw std::invalid_argument("optimizer was built for " + std::to_string(velocity_.size()) +
                                    " parameters, got " + std::to_string(params.size()));
    }
    const double lr = current_learning_rate();
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& w = params[k]->value;
        auto g = w.grad();
        auto v = velocity_[k].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = std::clamp(g[i], config_.clip_low, config_.clip_high) + config_.weight_decay * w[i];
            v[i] = config_.momentum * v[i] + gi;
            w[i] -= lr * v[i];
        }
    }
    ++steps_;
}

void SgdOptimizer::restore(SgdConfig config, int epoch, std::uint64_t steps, std::vector<Tensor> velocity,
                           std::span<Parameter* const> params) {
    config.validate();
    if (velocity.size() != params.size()) {
        throw std::invalid_argument("optimizer state holds " + std::to_string(velocity.size()) +
                                    " momentum buffers for " + std::to_string(params.size()) + " parameters");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (velocity[k].shape() != params[k]->value.shape()) {
            throw std::invalid_argument("momentum buffer " + shape_string(velocity[k].shape()) + " does not match " +
                                        params[k]->name + " " + shape_string(params[k]->value.shape()));
        }
    }
    config_ = config;
    epoch_ = epoch;
    steps_ = steps;
    velocity_ = std::move(velocity);
}

void zero_grads(std::span<Parameter* const> params) {
    for (Parameter* p : params) p->value.zero_grad();
}

} // namespace gpm
