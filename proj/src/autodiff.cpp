// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/autodiff.hpp"

#include <memory>
#include <stdexcept>

namespace gpm::ad {

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
}

Var Tape::input(const Tensor& value) {
    Node n;
    n.borrowed = &value;
    return push(std::move(n));
}

Var Tape::parameter(Tensor& param) {
    Node n;
    n.borrowed = &param;
    n.sink = &param;
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    Node n;
    n.owned = std::move(value);
    for (Var v : inputs) n.requires_grad = n.requires_grad || nodes_[v.index].requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

const Tensor& Tape::value(Var v) const {
    const Node& n = nodes_[v.index];
    return n.borrowed ? *n.borrowed : n.owned;
}

std::span<const double> Tape::grad(Var v) const {
    const Node& n = nodes_[v.index];
    const Tensor& t = n.sink ? *n.sink : n.owned;
    return t.has_grad() ? t.grad() : std::span<const double>{};
}

std::span<double> Tape::grad_sink(Var v) {
    Node& n = nodes_[v.index];
    if (!n.requires_grad) return {};
    return n.sink ? n.sink->grad() : n.owned.grad();
}

void Tape::backward(Var root) {
    if (value(root).size() != 1) {
        throw std::invalid_argument("backward needs a scalar root, got " + shape_string(value(root).shape()));
    }
    if (!requires_grad(root)) return;
    grad_sink(root)[0] += 1.0;
    for (std::size_t i = root.index + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward || !n.owned.has_grad()) continue;
        n.backward(*this, Var{static_cast<std::uint32_t>(i)});
    }
}

Var conv3d(Tape& tape, Var input, Var kernel, Var bias, const Padding3d& pad) {
    Tensor out = kernels::conv3d(tape.value(input), tape.value(kernel), tape.value(bias), pad);
    return tape.record(std::move(out), {input, kernel, bias}, [=](Tape& t, Var result) {
        auto gk = t.grad_sink(kernel);
        auto gb = t.grad_sink(bias);
        std::vector<double> scratch_k, scratch_b;
        if (gk.empty()) {
            scratch_k.assign(t.value(kernel).size(), 0.0);
            gk = scratch_k;
        }
        if (gb.empty()) {
            scratch_b.assign(t.value(bias).size(), 0.0);
            gb = scratch_b;
        }
        kernels::conv3d_backward(t.value(input), t.value(kernel), pad, t.grad(result), t.grad_sink(input), gk, gb);
    });
}

Var maxpool_spatial(Tape& tape, Var input) {
    auto pooled = kernels::maxpool_spatial(tape.value(input));
    auto argmax = std::make_shared<std::vector<std::uint32_t>>(std::move(pooled.argmax));
    return tape.record(std::move(pooled.output), {input}, [=](Tape& t, Var result) {
        kernels::maxpool_spatial_backward(*argmax, t.grad(result), t.grad_sink(input));
    });
}

Var batchnorm(Tape& tape, Var input, Var scale, Var shift, Mode mode, const kernels::BatchNormStats& running,
              kernels::BatchNormCache* batch_stats) {
    const auto& x = tape.value(input);
    const auto& g = tape.value(scale);
    const auto& b = tape.value(shift);
    auto sinks = [scale, shift](Tape& t, std::vector<double>& sg, std::vector<double>& sb) {
        auto gs = t.grad_sink(scale);
        auto gh = t.grad_sink(shift);
        if (gs.empty()) {
            sg.assign(t.value(scale).size(), 0.0);
            gs = sg;
        }
        if (gh.empty()) {
            sb.assign(t.value(shift).size(), 0.0);
            gh = sb;
        }
        return std::pair{gs, gh};
    };
    if (mode == Mode::train) {
        auto cache = std::make_shared<kernels::BatchNormCache>();
        Tensor out = kernels::batchnorm_train(x, g.data(), b.data(), *cache);
        if (batch_stats) {
            batch_stats->batch_mean = cache->batch_mean;
            batch_stats->batch_variance = cache->batch_variance;
            batch_stats->count = cache->count;
        }
        const Shape shape = x.shape();
        return tape.record(std::move(out), {input, scale, shift}, [=](Tape& t, Var result) {
            std::vector<double> sg, sb;
            auto [gs, gh] = sinks(t, sg, sb);
            kernels::batchnorm_train_backward(shape, *cache, t.value(scale).data(), t.grad(result),
                                              t.grad_sink(input), gs, gh);
        });
    }
    auto stats = std::make_shared<kernels::BatchNormStats>(running);
    Tensor out = kernels::batchnorm_eval(x, g.data(), b.data(), *stats);
    return tape.record(std::move(out), {input, scale, shift}, [=](Tape& t, Var result) {
        std::vector<double> sg, sb;
        auto [gs, gh] = sinks(t, sg, sb);
        kernels::batchnorm_eval_backward(t.value(input), t.value(scale).data(), *stats, t.grad(result),
                                         t.grad_sink(input), gs, gh);
    });
}

Var linear(Tape& tape, Var input, Var weight, Var bias) {
    Tensor out = kernels::linear(tape.value(input), tape.value(weight), tape.value(bias));
    return tape.record(std::move(out), {input, weight, bias}, [=](Tape& t, Var result) {
        kernels::linear_backward(t.value(input), t.value(weight), t.grad(result), t.grad_sink(input),
                                 t.grad_sink(weight), t.grad_sink(bias));
    });
}

Var relu(Tape& tape, Var input) {
    return tape.record(kernels::relu(tape.value(input)), {input}, [=](Tape& t, Var result) {
        const auto& x = t.value(input);
        auto dy = t.grad(result);
        auto dx = t.grad_sink(input);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] > 0.0) dx[i] += dy[i];
        }
    });
}

Var sigmoid(Tape& tape, Var input) {
    return tape.record(kernels::sigmoid(tape.value(input)), {input}, [=](Tape& t, Var result) {
        const auto& y = t.value(result);
        auto dy = t.grad(result);
        auto dx = t.grad_sink(input);
        for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
    });
}

Var softmax_rows(Tape& tape, Var input) {
    return tape.record(kernels::softmax_rows(tape.value(input)), {input}, [=](Tape& t, Var result) {
        const auto& y = t.value(result);
        auto dy = t.grad(result);
        auto dx = t.grad_sink(input);
        const std::size_t rows = y.extent(0), cols = y.extent(1);
        for (std::size_t i = 0; i < rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += dy[i * cols + j] * y[i * cols + j];
            for (std::size_t j = 0; j < cols; ++j) dx[i * cols + j] += y[i * cols + j] * (dy[i * cols + j] - dot);
        }
    });
}

namespace {
Var apply_mask(Tape& tape, Var input, std::vector<double> mask) {
    const auto& x = tape.value(input);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * mask[i];
    auto m = std::make_shared<std::vector<double>>(std::move(mask));
    return tape.record(std::move(out), {input}, [=](Tape& t, Var result) {
        auto dy = t.grad(result);
        auto dx = t.grad_sink(input);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (*m)[i];
    });
}
} // namespace

Var dropout(Tape& tape, Var input, double p, Mode mode, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must lie in [0, 1), got " + std::to_string(p));
    if (mode == Mode::eval || p == 0.0) return input;
    return apply_mask(tape, input, kernels::dropout_mask(tape.value(input).size(), p, rng));
}

Var volumetric_dropout(Tape& tape, Var input, double p, Mode mode, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must lie in [0, 1), got " + std::to_string(p));
    if (mode == Mode::eval || p == 0.0) return input;
    return apply_mask(tape, input, kernels::volumetric_dropout_mask(tape.value(input).shape(), p, rng));
}

Var frames_to_rows(Tape& tape, Var input) {
    const auto& x = tape.value(input);
    if (x.rank() != 5) throw std::invalid_argument("frames_to_rows: expected rank 5, got " + shape_string(x.shape()));
    const std::size_t N = x.extent(0), C = x.extent(1), T = x.extent(2), HW = x.extent(3) * x.extent(4);
    Tensor out({N * T, C * HW});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t t = 0; t < T; ++t) {
                const double* src = x.data().data() + ((n * C + c) * T + t) * HW;
                double* dst = out.data().data() + (n * T + t) * C * HW + c * HW;
                std::copy(src, src + HW, dst);
            }
    return tape.record(std::move(out), {input}, [=](Tape& tp, Var result) {
        auto dy = tp.grad(result);
        auto dx = tp.grad_sink(input);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t t = 0; t < T; ++t) {
                    const double* src = dy.data() + (n * T + t) * C * HW + c * HW;
                    double* dst = dx.data() + ((n * C + c) * T + t) * HW;
                    for (std::size_t i = 0; i < HW; ++i) dst[i] += src[i];
                }
    });
}

Var gru_sequence(Tape& tape, Var rows, std::size_t batch, std::size_t frames, const GruVars& w) {
    const auto& x = tape.value(rows);
    auto weights_of = [w](const Tape& t) {
        kernels::GruWeights gw;
        gw.update_input = &t.value(w.update_input);
        gw.reset_input = &t.value(w.reset_input);
        gw.candidate_input = &t.value(w.candidate_input);
        gw.update_hidden = &t.value(w.update_hidden);
        gw.reset_hidden = &t.value(w.reset_hidden);
        gw.candidate_hidden = &t.value(w.candidate_hidden);
        return gw;
    };
    const kernels::GruWeights gw = weights_of(tape);
    const std::size_t D = gw.input_dim(), U = gw.units();
    if (x.rank() != 2 || x.extent(0) != batch * frames || x.extent(1) != D) {
        throw std::invalid_argument("gru: rows " + shape_string(x.shape()) + " do not match " + std::to_string(batch) +
                                    " clips x " + std::to_string(frames) + " frames x " + std::to_string(D) + " features");
    }
    auto states = std::make_shared<std::vector<kernels::GruState>>();
    states->reserve(frames);
    Tensor out({batch * frames, U});
    kernels::GruState state = kernels::gru_initial_state(batch, U);
    Tensor g({batch, D});
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t n = 0; n < batch; ++n) {
            std::copy_n(x.data().data() + (n * frames + t) * D, D, g.data().data() + n * D);
        }
        state = kernels::gru_step(g, state, gw);
        for (std::size_t n = 0; n < batch; ++n) {
            std::copy_n(state.hidden.data().data() + n * U, U, out.data().data() + (n * frames + t) * U);
        }
        states->push_back(state);
    }
    return tape.record(std::move(out), {rows, w.update_input, w.reset_input, w.candidate_input, w.update_hidden,
                                          w.reset_hidden, w.candidate_hidden},
                         [=](Tape& tp, Var result) {
                             const kernels::GruWeights cw = weights_of(tp);
                             std::vector<std::vector<double>> scratch(6);
                             auto sink = [&](Var v, std::size_t k) {
                                 auto s = tp.grad_sink(v);
                                 if (s.empty()) {
                                     scratch[k].assign(tp.value(v).size(), 0.0);
                                     s = scratch[k];
                                 }
                                 return s;
                             };
                             kernels::GruWeightGrads grads{sink(w.update_input, 0),  sink(w.reset_input, 1),
                                                           sink(w.candidate_input, 2), sink(w.update_hidden, 3),
                                                           sink(w.reset_hidden, 4),  sink(w.candidate_hidden, 5)};
                             auto dy = tp.grad(result);
                             auto dx = tp.grad_sink(rows);
                             std::vector<double> carry(batch * U, 0.0), df(batch * U), dprev(batch * U);
                             std::vector<double> dg(dx.empty() ? 0 : batch * D);
                             for (std::size_t t = frames; t-- > 0;) {
                                 for (std::size_t n = 0; n < batch; ++n)
                                     for (std::size_t u = 0; u < U; ++u)
                                         df[n * U + u] = dy[(n * frames + t) * U + u] + carry[n * U + u];
                                 std::fill(dprev.begin(), dprev.end(), 0.0);
                                 std::fill(dg.begin(), dg.end(), 0.0);
                                 kernels::gru_step_backward((*states)[t], cw, df, dg, dprev, grads);
                                 if (!dx.empty()) {
                                     for (std::size_t n = 0; n < batch; ++n)
                                         for (std::size_t d = 0; d < D; ++d) dx[(n * frames + t) * D + d] += dg[n * D + d];
                                 }
                                 carry.swap(dprev);
                             }
                         });
}

Var weighted_sum(Tape& tape, Var a, Var b, double weight) {
    const auto& va = tape.value(a);
    const auto& vb = tape.value(b);
    if (va.size() != 1 || vb.size() != 1) throw std::invalid_argument("weighted_sum expects scalars");
    return tape.record(Tensor({1}, {va[0] + weight * vb[0]}), {a, b}, [=](Tape& t, Var result) {
        const double dy = t.grad(result)[0];
        if (auto ga = t.grad_sink(a); !ga.empty()) ga[0] += dy;
        if (auto gb = t.grad_sink(b); !gb.empty()) gb[0] += weight * dy;
    });
}

} // namespace gpm::ad
