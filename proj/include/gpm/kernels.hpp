// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gpm/tensor.hpp"

// Forward and backward kernels for the layers of the gesture network. All
// functions are pure; the tape in autodiff.hpp strings them together.
namespace gpm::kernels {

using Rng = std::mt19937_64;

/// Zero padding per axis. Time may be padded asymmetrically; height and width
/// are padded symmetrically.
struct Padding3d {
    std::size_t time_front = 0;
    std::size_t time_back = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    static Padding3d symmetric(std::size_t t, std::size_t h, std::size_t w) { return {t, t, h, w}; }
    /// Preserves every extent and lets output frame t see input frames <= t only.
    static Padding3d causal(const Shape& kernel_shape);
};

/// Cross-correlation of an N x C x T x H x W input with an O x C x kT x kH x kW
/// kernel plus a per-output-channel bias.
Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const Padding3d& pad);

/// Accumulates into the provided gradient buffers. `grad_input` may be empty
/// when the input gradient is not needed.
void conv3d_backward(const Tensor& input, const Tensor& kernel, const Padding3d& pad,
                     std::span<const double> grad_output, std::span<double> grad_input,
                     std::span<double> grad_kernel, std::span<double> grad_bias);

struct PoolResult {
    Tensor output;
    std::vector<std::uint32_t> argmax; // flat input index per output element
};

/// 1 x 2 x 2 max pooling; ties go to the first element in scan order.
PoolResult maxpool_spatial(const Tensor& input);
void maxpool_spatial_backward(const std::vector<std::uint32_t>& argmax, std::span<const double> grad_output,
                              std::span<double> grad_input);

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

struct BatchNormStats {
    std::vector<double> mean;
    std::vector<double> variance;

    explicit BatchNormStats(std::size_t channels = 0) : mean(channels, 0.0), variance(channels, 1.0) {}
};

struct BatchNormCache {
    std::vector<double> normalized;
    std::vector<double> inv_std;
    std::vector<double> batch_mean;
    std::vector<double> batch_variance; // biased
    std::size_t count = 0;              // elements per channel
};

/// Channel axis is 1; statistics are taken over every other axis.
Tensor batchnorm_train(const Tensor& input, std::span<const double> scale, std::span<const double> shift,
                       BatchNormCache& cache);
Tensor batchnorm_eval(const Tensor& input, std::span<const double> scale, std::span<const double> shift,
                      const BatchNormStats& running);
void batchnorm_train_backward(const Shape& shape, const BatchNormCache& cache, std::span<const double> scale,
                              std::span<const double> grad_output, std::span<double> grad_input,
                              std::span<double> grad_scale, std::span<double> grad_shift);
void batchnorm_eval_backward(const Tensor& input, std::span<const double> scale, const BatchNormStats& running,
                             std::span<const double> grad_output, std::span<double> grad_input,
                             std::span<double> grad_scale, std::span<double> grad_shift);
/// Exponential moving average update; the running variance uses the unbiased
/// batch estimate.
void update_running_stats(BatchNormStats& running, const BatchNormCache& cache);

/// x (M x K) times w (K x N) plus bias (N).
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);
void linear_backward(const Tensor& input, const Tensor& weight, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weight, std::span<double> grad_bias);

double sigmoid(double x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Softmax over the last axis of a rank-2 tensor.
Tensor softmax_rows(const Tensor& x);

/// Per-element keep mask scaled by 1/(1-p). Throws for p outside [0, 1).
std::vector<double> dropout_mask(std::size_t count, double p, Rng& rng);
/// Mask for an N x C x ... tensor that keeps or drops whole C-slices.
std::vector<double> volumetric_dropout_mask(const Shape& shape, double p, Rng& rng);

/// GRU weights laid out as in g U + f W: U is input_dim x units, W is
/// units x units. No biases.
struct GruWeights {
    const Tensor* update_input = nullptr;    // U^z
    const Tensor* reset_input = nullptr;     // U^r
    const Tensor* candidate_input = nullptr; // U^h
    const Tensor* update_hidden = nullptr;   // W^z
    const Tensor* reset_hidden = nullptr;    // W^r
    const Tensor* candidate_hidden = nullptr; // W^h

    std::size_t input_dim() const { return update_input->extent(0); }
    std::size_t units() const { return update_input->extent(1); }
};

struct GruWeightGrads {
    std::span<double> update_input, reset_input, candidate_input;
    std::span<double> update_hidden, reset_hidden, candidate_hidden;
};

/// One recurrent step. `hidden` is f_t; the other fields are retained for the
/// backward pass.
struct GruState {
    Tensor hidden;      // f_t, batch x units
    Tensor input;       // g_t
    Tensor prev_hidden; // f_{t-1}
    Tensor update;      // z_t
    Tensor reset;       // r_t
    Tensor candidate;   // s_t
};

GruState gru_initial_state(std::size_t batch, std::size_t units);
GruState gru_step(const Tensor& input, const GruState& prev, const GruWeights& weights);
/// `grad_input` may be empty. Gradients are accumulated.
void gru_step_backward(const GruState& step, const GruWeights& weights, std::span<const double> grad_hidden,
                       std::span<double> grad_input, std::span<double> grad_prev_hidden, GruWeightGrads& grads);

} // namespace gpm::kernels
