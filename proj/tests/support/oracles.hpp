// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpm/model.hpp"
#include "gpm/objectives.hpp"

// Brute-force reference implementations and fuzz drivers comparing the
// library against them.
namespace gpm::testing {

struct FuzzReport {
    std::size_t cases = 0;
    std::size_t mismatches = 0;
    std::string first_failure;
    /// Largest deviation seen, for suites compared with a tolerance.
    double max_error = 0.0;

    bool ok() const { return cases > 0 && mismatches == 0; }
    void fail(const std::string& what);
};

Tensor conv3d_oracle(const Tensor& input, const Tensor& kernel, const Tensor& bias, const kernels::Padding3d& pad);
Tensor maxpool_oracle(const Tensor& input);
double nttd_oracle(std::size_t trigger, std::size_t start, std::size_t end);
double auc_mann_whitney(const std::vector<double>& positive_scores, const std::vector<double>& negative_scores);

/// Integer-valued inputs make every partial sum exact, so results must match
/// bit for bit; a second real-valued instance per case is held to 1e-12.
FuzzReport fuzz_conv3d(std::uint64_t seed, std::size_t cases);
FuzzReport fuzz_maxpool(std::uint64_t seed, std::size_t cases);
FuzzReport fuzz_nttd(std::uint64_t seed, std::size_t cases);
FuzzReport fuzz_frame_rates(std::uint64_t seed, std::size_t cases);
FuzzReport fuzz_jaccard(std::uint64_t seed, std::size_t cases);
/// Consensus classes against a direct vote, and tau = 0 against the global vote.
FuzzReport fuzz_consensus(std::uint64_t seed, std::size_t cases);
/// ROC AUC on the 101-point grid against the pairwise-rank statistic;
/// max_error holds the largest gap.
FuzzReport fuzz_roc_auc(std::uint64_t seed, std::size_t cases, double tolerance = 0.01);
/// GPM target invariants on random annotation sets, and again after a random
/// augmentation and subsampling of a small video carrying those annotations.
FuzzReport fuzz_gpm_targets(std::uint64_t seed, std::size_t cases);

/// Checks range, zero background, endpoints and strict increase within segments.
bool gpm_invariants_hold(const std::vector<FrameAnnotation>& annotations, std::size_t frames, std::string* why = nullptr);

/// Random non-overlapping single-frame-or-longer segments on `frames` frames.
std::vector<FrameAnnotation> random_annotations(kernels::Rng& rng, std::size_t frames, std::size_t max_segments,
                                                int num_classes);

/// Random model output of T frames over num_classes + 1 columns.
ModelOutput random_output(kernels::Rng& rng, std::size_t frames, std::size_t num_classes);

} // namespace gpm::testing
