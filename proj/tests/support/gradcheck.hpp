// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpm/autodiff.hpp"
#include "gpm/model.hpp"

namespace gpm::testing {

struct GradReport {
    double max_relative_error = 0.0;
    std::string worst; // "<tensor>[<index>]"
    std::size_t coordinates = 0;
};

/// Builds a scalar from one tape variable per checked tensor.
using ScalarBuilder = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

/// Central differences against reverse mode on up to `max_coords` randomly
/// chosen coordinates per tensor. The relative error of a coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradReport check_gradients(const std::vector<std::pair<std::string, Tensor*>>& tensors, const ScalarBuilder& build,
                           std::uint64_t seed, std::size_t max_coords = 40, double step = 1e-5, double floor = 1e-4);

/// Names accepted by op_gradcheck.
std::vector<std::string> gradcheck_ops();

/// Checks one differentiable operation on random shapes and values drawn from `seed`.
GradReport op_gradcheck(const std::string& op, std::uint64_t seed);

/// Joint loss of a small model in train mode, differentiated end to end with
/// respect to every parameter.
GradReport model_gradcheck(Variant variant, std::uint64_t seed);

} // namespace gpm::testing
