// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gpm/kernels.hpp"
#include "gpm/tensor.hpp"

namespace gpm::ad {

enum class Mode { train, eval };

/// Handle to a value recorded on a Tape.
struct Var {
    std::uint32_t index = 0;
};

/// Wengert list. Nodes are appended in evaluation order; backward() walks them
/// in reverse and calls each node's backward closure once.
class Tape {
public:
    /// Called with the tape and the handle of the node being differentiated.
    using Backward = std::function<void(Tape&, Var)>;

    /// Owned value that never receives a gradient.
    Var constant(Tensor value);
    /// Borrowed value that never receives a gradient. Must outlive the tape.
    Var input(const Tensor& value);
    /// Borrowed learned tensor; backward() accumulates into its grad slot.
    Var parameter(Tensor& param);
    /// Result of a differentiable op. Requires a gradient when any input does.
    Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.index].requires_grad; }
    /// Gradient that reached v during backward(); empty if none did.
    std::span<const double> grad(Var v) const;
    /// Accumulation buffer for v, or an empty span when v needs no gradient.
    std::span<double> grad_sink(Var v);

    /// Seeds d(root)/d(root) = 1 and propagates. Root must hold one element.
    void backward(Var root);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* borrowed = nullptr;
        Tensor* sink = nullptr;
        bool requires_grad = false;
        Backward backward;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
};

using kernels::Padding3d;
using kernels::Rng;

Var conv3d(Tape& tape, Var input, Var kernel, Var bias, const Padding3d& pad);
Var maxpool_spatial(Tape& tape, Var input);

/// Train mode normalizes with batch statistics and, if `batch_stats` is given,
/// copies them out for the running-average update. Eval mode uses `running`.
Var batchnorm(Tape& tape, Var input, Var scale, Var shift, Mode mode, const kernels::BatchNormStats& running,
              kernels::BatchNormCache* batch_stats = nullptr);

Var linear(Tape& tape, Var input, Var weight, Var bias);
Var relu(Tape& tape, Var input);
Var sigmoid(Tape& tape, Var input);
Var softmax_rows(Tape& tape, Var input);
Var dropout(Tape& tape, Var input, double p, Mode mode, Rng& rng);
/// Drops whole feature maps (C-slices across T x H x W).
Var volumetric_dropout(Tape& tape, Var input, double p, Mode mode, Rng& rng);

/// N x C x T x H x W -> (N*T) x (C*H*W); row n*T + t holds frame t of clip n.
Var frames_to_rows(Tape& tape, Var input);

struct GruVars {
    Var update_input, reset_input, candidate_input;
    Var update_hidden, reset_hidden, candidate_hidden;
};

/// Runs the recurrent cell over rows laid out as in frames_to_rows, starting
/// from a zero hidden state; backward is truncated only at the clip start.
Var gru_sequence(Tape& tape, Var rows, std::size_t batch, std::size_t frames, const GruVars& weights);

/// a + weight * b for scalar a and b.
Var weighted_sum(Tape& tape, Var a, Var b, double weight);

} // namespace gpm::ad
