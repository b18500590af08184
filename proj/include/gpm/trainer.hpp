// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gpm/checkpoint.hpp"
#include "gpm/model.hpp"
#include "gpm/optimizer.hpp"
#include "gpm/synth.hpp"

namespace gpm {

struct TrainConfig {
    std::uint64_t seed = 20240601;
    std::size_t epochs = 30;
    std::size_t batch_size = 4;
    double lambda = 1.0;
    std::size_t clip_frames = 16;
    bool augment = true;
    bool class_weighting = true;
    SgdConfig optimizer = desk_optimizer();
    AugmentationConfig augmentation;

    static SgdConfig desk_optimizer();
    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    double gpm_loss = 0.0;   // mean over batches
    double class_loss = 0.0;
    double loss = 0.0;
    /// L2 norm of the class-head weight gradient accumulated over the epoch.
    double class_head_grad_norm = 0.0;
};

struct TrainResult {
    Model model;
    SgdOptimizer optimizer;
    std::vector<EpochLog> log;
    std::vector<double> class_weights;
};

/// Network input for one clip: raw depth -> modality -> center crop -> subsample.
VideoSample prepare_eval(const VideoSample& raw_depth, Modality modality, std::size_t crop_height,
                         std::size_t crop_width, std::size_t clip_frames);

/// Stacks equally shaped C x T x H x W clips into N x C x T x H x W.
Tensor stack_clips(std::span<const VideoSample* const> clips);

/// Trains on raw depth videos converted to `modality`. Starts from `init` when
/// given (e.g. an inflated depth checkpoint), otherwise from a seeded random
/// initialization.
TrainResult train(const std::vector<VideoSample>& raw_train, Modality modality, const ModelConfig& model_config,
                  const TrainConfig& config, const std::optional<Checkpoint>& init = std::nullopt,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Eval-mode outputs for raw depth videos prepared as in prepare_eval.
std::vector<ModelOutput> predict_videos(const Model& model, const std::vector<VideoSample>& raw, Modality modality,
                                        std::size_t clip_frames, std::vector<std::vector<FrameAnnotation>>* annotations = nullptr);

} // namespace gpm
