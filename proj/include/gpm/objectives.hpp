// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gpm/autodiff.hpp"
#include "gpm/tensor.hpp"

namespace gpm {

/// One strongly segmented gesture: frames start_frame..end_frame inclusive.
/// class_id is in 1..N; 0 is reserved for no-gesture.
struct FrameAnnotation {
    std::string video_id;
    int class_id = 0;
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;

    std::size_t length() const { return end_frame - start_frame + 1; }
    bool operator==(const FrameAnnotation&) const = default;
};

/// Throws DataError unless every segment satisfies start <= end < frames and
/// no two segments overlap.
void validate_annotations(std::span<const FrameAnnotation> annotations, std::size_t frames);

/// Progression target: (t - t_s) / (t_e - t_s) inside a segment, 1 for a
/// one-frame segment, 0 on background.
std::vector<double> gpm_target(std::span<const FrameAnnotation> annotations, std::size_t frames);

/// Per-frame class labels, 0 on background.
std::vector<int> frame_labels(std::span<const FrameAnnotation> annotations, std::size_t frames);

/// Mean squared error over frames.
double gpm_loss(std::span<const double> predicted, std::span<const double> target);

/// w_k = total / (K * count_k). Throws DataError naming the empty class.
std::vector<double> class_weights(std::span<const std::size_t> counts, std::span<const std::string> class_names = {});

inline constexpr double kLogClamp = 1e-12;

/// -(1/T) sum_t w[label_t] log max(p_t[label_t], 1e-12) for T x K probabilities.
double class_loss(const Tensor& probabilities, std::span<const int> labels, std::span<const double> weights);

double joint_loss(double gpm, double cls, double lambda);

/// Tape versions over a whole batch; rows follow the frames_to_rows layout.
ad::Var gpm_loss(ad::Tape& tape, ad::Var predicted, std::span<const double> target);
ad::Var class_loss(ad::Tape& tape, ad::Var probabilities, std::span<const int> labels, std::span<const double> weights);

/// `video_id,class_id,start_frame,end_frame` table with a header row.
void write_annotations(const std::filesystem::path& path, std::span<const FrameAnnotation> annotations);
std::vector<FrameAnnotation> read_annotations(const std::filesystem::path& path);

} // namespace gpm
