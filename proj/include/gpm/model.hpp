// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gpm/autodiff.hpp"
#include "gpm/kernels.hpp"
#include "gpm/tensor.hpp"

namespace gpm {

enum class Variant { conv3d_gru, conv3d_linear, conv2d_gru };
enum class Preset { desk, paper };

std::string to_string(Variant v);
std::string to_string(Preset p);
/// Accepts "3DCNN-GRU", "3DCNN-Linear", "2DCNN-GRU" (case-insensitive).
Variant parse_variant(std::string_view name);
Preset parse_preset(std::string_view name);

struct ModelConfig {
    Preset preset = Preset::desk;
    Variant variant = Variant::conv3d_gru;
    std::size_t in_channels = 1;
    std::size_t height = 32;
    std::size_t width = 32;
    std::vector<std::size_t> conv_widths{8, 16, 32};
    std::size_t linear_width = 128;
    std::size_t recurrent_units = 64;
    std::size_t num_classes = 8; // gestures; class 0 is no-gesture
    double conv_dropout = 0.0;
    double linear_dropout = 0.2;

    static ModelConfig desk();
    /// Full-size network. Per-block conv widths are an assumption.
    static ModelConfig paper();

    std::size_t head_width() const { return num_classes + 1; }
    std::size_t pooled_height() const { return height >> conv_widths.size(); }
    std::size_t pooled_width() const { return width >> conv_widths.size(); }
    /// Per-frame feature size entering the first linear layer.
    std::size_t feature_dim() const { return conv_widths.back() * pooled_height() * pooled_width(); }
    std::size_t temporal_kernel() const { return variant == Variant::conv2d_gru ? 1 : 3; }

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

struct ConvBlock {
    Parameter kernel;
    Parameter bias;
    Parameter bn_scale;
    Parameter bn_shift;
    kernels::BatchNormStats running;
    kernels::Padding3d padding;
};

struct Dense {
    Parameter weight;
    Parameter bias;
};

/// Per-clip outputs: P_t, per-frame class distributions and their argmax.
struct ModelOutput {
    std::vector<double> gpm;
    Tensor probabilities; // T x (N+1)
    std::vector<int> classes;

    std::size_t frames() const { return gpm.size(); }
    std::span<const double> probs(std::size_t t) const {
        return probabilities.data().subspan(t * probabilities.extent(1), probabilities.extent(1));
    }
};

struct ForwardResult {
    ad::Var gpm;           // (N*T) x 1
    ad::Var probabilities; // (N*T) x (N+1)
    ad::Var class_logits;
    std::vector<kernels::BatchNormCache> batch_stats;
};

class Model {
public:
    Model(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    std::vector<ConvBlock>& conv_blocks() { return conv_; }
    const std::vector<ConvBlock>& conv_blocks() const { return conv_; }

    /// Throws ConfigError unless `shape` is N x C x T x H x W with the
    /// configured channels and spatial extents and T >= 1.
    void check_input(const Shape& shape) const;

    /// Records the network on `tape` with every parameter differentiable.
    /// Running statistics are not touched; see commit_batch_stats.
    ForwardResult forward(ad::Tape& tape, const Tensor& batch, ad::Mode mode, kernels::Rng& rng);
    void commit_batch_stats(const ForwardResult& result);

    /// Eval-mode outputs for each clip in an N x C x T x H x W batch.
    std::vector<ModelOutput> predict(const Tensor& batch) const;
    /// Eval-mode outputs for one C x T x H x W clip.
    ModelOutput predict_clip(const Tensor& video) const;

private:
    friend class StreamingEncoder;

    template <typename Bind>
    ForwardResult build(ad::Tape& tape, const Tensor& batch, ad::Mode mode, kernels::Rng& rng, Bind bind) const;

    ModelConfig config_;
    std::vector<ConvBlock> conv_;
    Dense fc1_, fc2_;
    Parameter gru_uz_, gru_ur_, gru_uh_, gru_wz_, gru_wr_, gru_wh_;
    Dense aggregate_; // stands in for the GRU in the 3DCNN-Linear variant
    Dense gpm_head_, class_head_;
};

struct FramePrediction {
    double gpm = 0.0;
    std::vector<double> probabilities;
    int predicted_class = 0;
};

/// Runs a model one frame at a time. Each conv block keeps the last kT-1 of its
/// inputs; with causal temporal padding this reproduces the whole-clip
/// eval-mode outputs exactly.
class StreamingEncoder {
public:
    explicit StreamingEncoder(const Model& model);

    /// `frame` is C x H x W. Throws ConfigError on a shape mismatch without
    /// changing the encoder state.
    FramePrediction push(const Tensor& frame);
    void reset();
    std::size_t frames_seen() const { return frames_; }

private:
    const Model* model_;
    std::vector<std::vector<Tensor>> history_;
    Tensor hidden_;
    std::size_t frames_ = 0;
};

} // namespace gpm
