// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gpm/model.hpp"

namespace gpm {

struct DetectionEvent {
    std::size_t frame = 0;
    int predicted_class = 1;
    double gpm = 0.0;
    std::optional<double> nttd;
    std::vector<double> probabilities;
};

struct DetectorConfig {
    double epsilon = 0.5;
    /// Consensus ratio; absent means global voting over all frames.
    std::optional<double> tau = 1.0;
    std::size_t refractory = 8;
    /// Offline peaks must exceed this GPM value.
    double noise_floor = 0.0;

    void validate() const;
};

/// Index of the most probable gesture class (1..N), ignoring no-gesture.
/// Ties go to the lower index.
int gesture_argmax(std::span<const double> probabilities);

enum class RegionMode {
    /// One candidate per maximal run of frames whose argmax is a gesture.
    class_runs,
    /// The whole clip is a single candidate.
    whole_clip,
};

/// Triggers at the earliest frame of maximal P_t inside each candidate region.
std::vector<DetectionEvent> detect_offline(const ModelOutput& output, RegionMode mode = RegionMode::class_runs,
                                           double noise_floor = 0.0);

/// Class at the earliest frame of maximal P_t over the whole clip.
int classify_peak(const ModelOutput& output);

/// Frames taking part in the vote: P_t > tau * max P; tau = 1 keeps only the
/// earliest maximum and tau = 0 keeps every frame.
std::vector<std::size_t> consensus_frames(const ModelOutput& output, double tau);

/// Gesture argmax of the summed probability vectors of the consensus frames,
/// or of all frames when tau is absent.
int classify_consensus(const ModelOutput& output, std::optional<double> tau);

/// Online threshold trigger with refractory period and re-arm hysteresis.
class TriggerState {
public:
    TriggerState(double epsilon, std::size_t refractory);

    /// Feeds P_t; returns true when this frame fires.
    bool update(double gpm);
    void reset();
    bool armed() const { return armed_; }

private:
    double epsilon_;
    std::size_t refractory_;
    bool armed_ = true;
    std::size_t cooldown_ = 0;
};

/// Frame-by-frame detector over a single stream.
class StreamSession {
public:
    StreamSession(const Model& model, const DetectorConfig& config);

    /// Throws ConfigError on a frame of the wrong shape; the session stays usable.
    std::optional<DetectionEvent> step(const Tensor& frame);
    void reset();

    std::size_t frames_seen() const { return encoder_.frames_seen(); }
    double last_gpm() const { return last_gpm_; }
    const FramePrediction& last_prediction() const { return last_; }

private:
    StreamingEncoder encoder_;
    TriggerState trigger_;
    FramePrediction last_;
    double last_gpm_ = 0.0;
};

/// Runs the online trigger over precomputed per-frame outputs.
std::vector<DetectionEvent> replay_online(const ModelOutput& output, double epsilon, std::size_t refractory);

/// Per-frame convex combination of probability vectors and GPM values. Weights
/// are normalized internally.
ModelOutput fuse(std::span<const ModelOutput* const> outputs, std::span<const double> weights);

struct FusionFit {
    std::vector<double> weights;
    double accuracy = 0.0;       // frame-level accuracy of the fused argmax
    double mean_log_prob = 0.0;  // of the true class, clamped at 1e-12
};

/// Grid search over the weight simplex at `resolution`. Candidates are ranked
/// by fused frame accuracy, then by mean log probability of the true class;
/// the uniform weighting is scored first and kept on exact ties.
/// `outputs[m][v]` is modality m on video v; `labels[v]` holds per-frame classes.
FusionFit fit_fusion_weights(const std::vector<std::vector<ModelOutput>>& outputs,
                             const std::vector<std::vector<int>>& labels, double resolution = 0.05);

} // namespace gpm
