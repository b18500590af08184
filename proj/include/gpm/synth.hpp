// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gpm/kernels.hpp"
#include "gpm/objectives.hpp"
#include "gpm/tensor.hpp"

namespace gpm {

enum class GestureKind { swipe_left, swipe_right, swipe_up, swipe_down, circle_cw, circle_ccw, push, tap };

struct GestureSpec {
    int class_id = 1;
    GestureKind kind = GestureKind::swipe_right;
    std::string name;
    std::size_t min_frames = 12;
    std::size_t max_frames = 24;
    double radius = 4.0;
    double intensity = 1.0;
};

/// The first `count` (<= 8) gesture kinds as classes 1..count.
std::vector<GestureSpec> default_gestures(std::size_t count);

enum class Modality { depth, color, flow };

std::string to_string(Modality m);
Modality parse_modality(std::string_view name);
std::size_t channel_count(Modality m);

struct VideoSample {
    std::string id;
    Modality modality = Modality::depth;
    Tensor frames; // C x T x H x W
    std::vector<FrameAnnotation> annotations;
    std::uint64_t seed = 0;

    std::size_t length() const { return frames.extent(1); }
};

struct GeneratorConfig {
    std::uint64_t seed = 20240601;
    std::size_t num_classes = 8;
    std::size_t train_per_class = 40;
    std::size_t test_per_class = 20;
    std::size_t frames = 48;
    std::size_t height = 48;
    std::size_t width = 48;
    std::size_t max_train_gestures = 3;
    std::size_t min_gap = 2;
    double distractor_rate = 0.3;
    double noise = 0.02;

    void validate() const;
};

struct Corpus {
    std::vector<VideoSample> train;
    std::vector<VideoSample> test;
};

std::uint64_t splitmix64(std::uint64_t x);
/// Independent stream seed for (base, stream, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

/// One depth video holding the given gesture classes in order, separated by
/// background. Throws ConfigError when the gestures cannot be packed.
VideoSample generate_video(const GeneratorConfig& config, const std::vector<GestureSpec>& specs,
                           const std::vector<int>& classes, std::uint64_t seed, std::string id);

/// Train videos carry 1..max_train_gestures gestures (one of them cycles
/// through the classes); test videos carry exactly one.
Corpus generate(const GeneratorConfig& config, const std::vector<GestureSpec>& specs);

inline constexpr double kColorGains[3] = {1.0, 0.7, 0.4};

/// Color scales depth by kColorGains per channel. Flow places the displacement
/// of the foreground centroid between consecutive frames on the foreground
/// pixels; the first frame has zero flow.
VideoSample derive_modality(const VideoSample& depth, Modality target);

/// Output frame i is input frame round(i (T_in - 1) / (T_out - 1)); segment
/// endpoints go through the same scaling and are kept nonempty and disjoint.
VideoSample subsample_nearest(const VideoSample& video, std::size_t target_frames);

struct AugmentationConfig {
    double rotation_degrees = 25.0;
    double spatial_scale = 0.2;
    double temporal_scale = 0.2;
    bool nonlinear_warp = true;
    int temporal_shift = 5;
    std::size_t crop_height = 32;
    std::size_t crop_width = 32;

    void validate() const;
};

/// One draw of every augmentation parameter for a video.
struct AugmentationParams {
    double rotation_degrees = 0.0;
    double spatial_scale = 1.0;
    double temporal_scale = 1.0;
    double knot = 0.5;        // fraction of the timeline
    double slope_ratio = 1.0; // slope after the knot over slope before it
    int temporal_shift = 0;
    std::size_t crop_y = 0;
    std::size_t crop_x = 0;
};

/// Source time sampled by output frame `v` under the temporal part of `p`.
double warp_source_time(const AugmentationParams& p, std::size_t frames, double v);

AugmentationParams sample_augmentation(const AugmentationConfig& config, const VideoSample& video, kernels::Rng& rng);

/// Applies `p` and crops to crop_height x crop_width. Frames sampled from
/// outside the clip repeat the nearest edge frame; pixels mapped outside the
/// frame are zero.
VideoSample apply_augmentation(const VideoSample& video, const AugmentationParams& p, std::size_t crop_height,
                               std::size_t crop_width);

/// Samples parameters, redrawing the temporal ones when a segment would be
/// pushed past the clip boundary and falling back to no temporal change after
/// a few attempts.
VideoSample augment(const VideoSample& video, const AugmentationConfig& config, kernels::Rng& rng);

VideoSample center_crop(const VideoSample& video, std::size_t height, std::size_t width);

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const AugmentationConfig& c);
void from_json(const nlohmann::json& j, AugmentationConfig& c);

} // namespace gpm
