// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpm::kernels {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

struct ConvGeometry {
    std::size_t batch, channels, frames, height, width;
    std::size_t out_channels, kt, kh, kw;
    std::size_t out_frames, out_height, out_width;

    std::size_t patch() const { return channels * kt * kh * kw; }
    std::size_t positions() const { return out_frames * out_height * out_width; }
    std::size_t input_volume() const { return channels * frames * height * width; }
};

ConvGeometry conv_geometry(const Shape& in, const Shape& k, const Padding3d& pad) {
    if (in.size() != 5 || k.size() != 5 || in[1] != k[1]) {
        throw std::invalid_argument("conv3d: input " + shape_string(in) + " incompatible with kernel " +
                                    shape_string(k));
    }
    ConvGeometry g{in[0], in[1], in[2], in[3], in[4], k[0], k[2], k[3], k[4], 0, 0, 0};
    const std::size_t tp = g.frames + pad.time_front + pad.time_back;
    const std::size_t hp = g.height + 2 * pad.height;
    const std::size_t wp = g.width + 2 * pad.width;
    if (tp < g.kt || hp < g.kh || wp < g.kw) {
        throw std::invalid_argument("conv3d: padded input " + shape_string(in) + " smaller than kernel " +
                                    shape_string(k));
    }
    g.out_frames = tp - g.kt + 1;
    g.out_height = hp - g.kh + 1;
    g.out_width = wp - g.kw + 1;
    return g;
}

// Valid output column range [lo, hi) for kernel offset d along an axis.
inline void valid_range(std::size_t out_extent, std::size_t in_extent, std::size_t pad, std::size_t d,
                        std::size_t& lo, std::size_t& hi) {
    lo = std::min(out_extent, pad > d ? pad - d : 0);
    // wo < limit  <=>  wo + d - pad < in_extent
    const long limit = static_cast<long>(in_extent + pad) - static_cast<long>(d);
    hi = limit <= 0 ? 0 : std::min(out_extent, static_cast<std::size_t>(limit));
    if (hi < lo) hi = lo;
}

void im2col(const double* in, const ConvGeometry& g, const Padding3d& pad, double* col) {
    const std::size_t plane = g.out_height * g.out_width;
    const std::size_t P = g.positions();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t a = 0; a < g.kt; ++a) {
            for (std::size_t b = 0; b < g.kh; ++b) {
                for (std::size_t d = 0; d < g.kw; ++d) {
                    double* dst = col + (((c * g.kt + a) * g.kh + b) * g.kw + d) * P;
                    std::size_t wlo, whi;
                    valid_range(g.out_width, g.width, pad.width, d, wlo, whi);
                    for (std::size_t to = 0; to < g.out_frames; ++to) {
                        const long ti = static_cast<long>(to + a) - static_cast<long>(pad.time_front);
                        double* row = dst + to * plane;
                        if (ti < 0 || ti >= static_cast<long>(g.frames)) {
                            std::fill(row, row + plane, 0.0);
                            continue;
                        }
                        for (std::size_t ho = 0; ho < g.out_height; ++ho) {
                            const long hi = static_cast<long>(ho + b) - static_cast<long>(pad.height);
                            double* out = row + ho * g.out_width;
                            if (hi < 0 || hi >= static_cast<long>(g.height)) {
                                std::fill(out, out + g.out_width, 0.0);
                                continue;
                            }
                            const double* src = in + ((c * g.frames + ti) * g.height + hi) * g.width;
                            std::fill(out, out + wlo, 0.0);
                            for (std::size_t wo = wlo; wo < whi; ++wo) out[wo] = src[wo + d - pad.width];
                            std::fill(out + whi, out + g.out_width, 0.0);
                        }
                    }
                }
            }
        }
    }
}

void col2im_add(const double* col, const ConvGeometry& g, const Padding3d& pad, double* in) {
    const std::size_t plane = g.out_height * g.out_width;
    const std::size_t P = g.positions();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t a = 0; a < g.kt; ++a) {
            for (std::size_t b = 0; b < g.kh; ++b) {
                for (std::size_t d = 0; d < g.kw; ++d) {
                    const double* src_row = col + (((c * g.kt + a) * g.kh + b) * g.kw + d) * P;
                    std::size_t wlo, whi;
                    valid_range(g.out_width, g.width, pad.width, d, wlo, whi);
                    for (std::size_t to = 0; to < g.out_frames; ++to) {
                        const long ti = static_cast<long>(to + a) - static_cast<long>(pad.time_front);
                        if (ti < 0 || ti >= static_cast<long>(g.frames)) continue;
                        for (std::size_t ho = 0; ho < g.out_height; ++ho) {
                            const long hi = static_cast<long>(ho + b) - static_cast<long>(pad.height);
                            if (hi < 0 || hi >= static_cast<long>(g.height)) continue;
                            const double* src = src_row + to * plane + ho * g.out_width;
                            double* dst = in + ((c * g.frames + ti) * g.height + hi) * g.width;
                            for (std::size_t wo = wlo; wo < whi; ++wo) dst[wo + d - pad.width] += src[wo];
                        }
                    }
                }
            }
        }
    }
}

std::size_t channel_inner(const Shape& shape) {
    std::size_t inner = 1;
    for (std::size_t i = 2; i < shape.size(); ++i) inner *= shape[i];
    return inner;
}

void check_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2) throw std::invalid_argument(std::string(what) + ": expected a matrix, got " + shape_string(t.shape()));
}

} // namespace

Padding3d Padding3d::causal(const Shape& kernel_shape) {
    if (kernel_shape.size() != 5) throw std::invalid_argument("causal padding needs a rank-5 kernel shape");
    return {kernel_shape[2] - 1, 0, (kernel_shape[3] - 1) / 2, (kernel_shape[4] - 1) / 2};
}

Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const Padding3d& pad) {
    const ConvGeometry g = conv_geometry(input.shape(), kernel.shape(), pad);
    if (bias.size() != g.out_channels) {
        throw std::invalid_argument("conv3d: bias " + shape_string(bias.shape()) + " does not match kernel " +
                                    shape_string(kernel.shape()));
    }
    Tensor out({g.batch, g.out_channels, g.out_frames, g.out_height, g.out_width});
    const std::size_t K = g.patch();
    const std::size_t P = g.positions();
    AlignedBuffer col(K * P);
    ConstMatMap weights(kernel.data().data(), g.out_channels, K);
    ConstVecMap b(bias.data().data(), g.out_channels);
    for (std::size_t n = 0; n < g.batch; ++n) {
        im2col(input.data().data() + n * g.input_volume(), g, pad, col.data());
        MatMap y(out.data().data() + n * g.out_channels * P, g.out_channels, P);
        y.noalias() = weights * ConstMatMap(col.data(), K, P);
        y.colwise() += b;
    }
    return out;
}

void conv3d_backward(const Tensor& input, const Tensor& kernel, const Padding3d& pad,
                     std::span<const double> grad_output, std::span<double> grad_input,
                     std::span<double> grad_kernel, std::span<double> grad_bias) {
    const ConvGeometry g = conv_geometry(input.shape(), kernel.shape(), pad);
    const std::size_t K = g.patch();
    const std::size_t P = g.positions();
    AlignedBuffer col(K * P);
    AlignedBuffer dcol(grad_input.empty() ? 0 : K * P);
    ConstMatMap weights(kernel.data().data(), g.out_channels, K);
    MatMap dw(grad_kernel.data(), g.out_channels, K);
    VecMap db(grad_bias.data(), g.out_channels);
    for (std::size_t n = 0; n < g.batch; ++n) {
        ConstMatMap dy(grad_output.data() + n * g.out_channels * P, g.out_channels, P);
        im2col(input.data().data() + n * g.input_volume(), g, pad, col.data());
        dw.noalias() += dy * ConstMatMap(col.data(), K, P).transpose();
        db += dy.rowwise().sum();
        if (!grad_input.empty()) {
            MatMap dc(dcol.data(), K, P);
            dc.noalias() = weights.transpose() * dy;
            col2im_add(dcol.data(), g, pad, grad_input.data() + n * g.input_volume());
        }
    }
}

PoolResult maxpool_spatial(const Tensor& input) {
    if (input.rank() != 5) throw std::invalid_argument("maxpool: expected N x C x T x H x W, got " + shape_string(input.shape()));
    const auto& s = input.shape();
    const std::size_t H = s[3], W = s[4];
    if (H % 2 != 0 || W % 2 != 0) {
        throw std::invalid_argument("maxpool: spatial extents must be even, got " + shape_string(s));
    }
    const std::size_t planes = s[0] * s[1] * s[2];
    const std::size_t ho = H / 2, wo = W / 2;
    PoolResult r{Tensor({s[0], s[1], s[2], ho, wo}), std::vector<std::uint32_t>(planes * ho * wo)};
    const double* in = input.data().data();
    double* out = r.output.data().data();
    std::size_t o = 0;
    for (std::size_t p = 0; p < planes; ++p) {
        const std::size_t base = p * H * W;
        for (std::size_t i = 0; i < ho; ++i) {
            for (std::size_t j = 0; j < wo; ++j, ++o) {
                const std::size_t cand[4] = {base + 2 * i * W + 2 * j, base + 2 * i * W + 2 * j + 1,
                                             base + (2 * i + 1) * W + 2 * j, base + (2 * i + 1) * W + 2 * j + 1};
                std::size_t best = cand[0];
                for (int k = 1; k < 4; ++k) {
                    if (in[cand[k]] > in[best]) best = cand[k];
                }
                out[o] = in[best];
                r.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return r;
}

void maxpool_spatial_backward(const std::vector<std::uint32_t>& argmax, std::span<const double> grad_output,
                              std::span<double> grad_input) {
    for (std::size_t o = 0; o < argmax.size(); ++o) grad_input[argmax[o]] += grad_output[o];
}

Tensor batchnorm_train(const Tensor& input, std::span<const double> scale, std::span<const double> shift,
                       BatchNormCache& cache) {
    const auto& s = input.shape();
    if (s.size() < 2 || scale.size() != s[1] || shift.size() != s[1]) {
        throw std::invalid_argument("batchnorm: input " + shape_string(s) + " does not match " +
                                    std::to_string(scale.size()) + " channels");
    }
    const std::size_t N = s[0], C = s[1], inner = channel_inner(s);
    const std::size_t count = N * inner;
    cache.count = count;
    cache.batch_mean.assign(C, 0.0);
    cache.batch_variance.assign(C, 0.0);
    cache.inv_std.assign(C, 0.0);
    cache.normalized.assign(input.size(), 0.0);
    Tensor out(s);
    const double* x = input.data().data();
    for (std::size_t c = 0; c < C; ++c) {
        double sum = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double* p = x + (n * C + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) sum += p[i];
        }
        const double mean = sum / static_cast<double>(count);
        double sq = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double* p = x + (n * C + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) sq += (p[i] - mean) * (p[i] - mean);
        }
        const double var = sq / static_cast<double>(count);
        const double inv = 1.0 / std::sqrt(var + kBatchNormEpsilon);
        cache.batch_mean[c] = mean;
        cache.batch_variance[c] = var;
        cache.inv_std[c] = inv;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                const double xh = (x[off + i] - mean) * inv;
                cache.normalized[off + i] = xh;
                out[off + i] = scale[c] * xh + shift[c];
            }
        }
    }
    return out;
}

Tensor batchnorm_eval(const Tensor& input, std::span<const double> scale, std::span<const double> shift,
                      const BatchNormStats& running) {
    const auto& s = input.shape();
    if (s.size() < 2 || scale.size() != s[1] || shift.size() != s[1] || running.mean.size() != s[1]) {
        throw std::invalid_argument("batchnorm: input " + shape_string(s) + " does not match " +
                                    std::to_string(scale.size()) + " channels");
    }
    const std::size_t N = s[0], C = s[1], inner = channel_inner(s);
    Tensor out(s);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < C; ++c) {
            const double inv = 1.0 / std::sqrt(running.variance[c] + kBatchNormEpsilon);
            const std::size_t off = (n * C + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                out[off + i] = scale[c] * (input[off + i] - running.mean[c]) * inv + shift[c];
            }
        }
    }
    return out;
}

void batchnorm_train_backward(const Shape& shape, const BatchNormCache& cache, std::span<const double> scale,
                              std::span<const double> grad_output, std::span<double> grad_input,
                              std::span<double> grad_scale, std::span<double> grad_shift) {
    const std::size_t N = shape[0], C = shape[1], inner = channel_inner(shape);
    const double m = static_cast<double>(cache.count);
    for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xh = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                sum_dy += grad_output[off + i];
                sum_dy_xh += grad_output[off + i] * cache.normalized[off + i];
            }
        }
        grad_scale[c] += sum_dy_xh;
        grad_shift[c] += sum_dy;
        if (grad_input.empty()) continue;
        const double k = scale[c] * cache.inv_std[c] / m;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                grad_input[off + i] += k * (m * grad_output[off + i] - sum_dy - cache.normalized[off + i] * sum_dy_xh);
            }
        }
    }
}

void batchnorm_eval_backward(const Tensor& input, std::span<const double> scale, const BatchNormStats& running,
                             std::span<const double> grad_output, std::span<double> grad_input,
                             std::span<double> grad_scale, std::span<double> grad_shift) {
    const auto& s = input.shape();
    const std::size_t N = s[0], C = s[1], inner = channel_inner(s);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < C; ++c) {
            const double inv = 1.0 / std::sqrt(running.variance[c] + kBatchNormEpsilon);
            const std::size_t off = (n * C + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                const double dy = grad_output[off + i];
                grad_scale[c] += dy * (input[off + i] - running.mean[c]) * inv;
                grad_shift[c] += dy;
                if (!grad_input.empty()) grad_input[off + i] += dy * scale[c] * inv;
            }
        }
    }
}

void update_running_stats(BatchNormStats& running, const BatchNormCache& cache) {
    const double m = static_cast<double>(cache.count);
    const double unbias = m > 1 ? m / (m - 1.0) : 1.0;
    for (std::size_t c = 0; c < running.mean.size(); ++c) {
        running.mean[c] = (1.0 - kBatchNormMomentum) * running.mean[c] + kBatchNormMomentum * cache.batch_mean[c];
        running.variance[c] = (1.0 - kBatchNormMomentum) * running.variance[c] +
                              kBatchNormMomentum * cache.batch_variance[c] * unbias;
    }
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    check_rank2(input, "linear");
    check_rank2(weight, "linear");
    if (input.extent(1) != weight.extent(0) || bias.size() != weight.extent(1)) {
        throw std::invalid_argument("linear: input " + shape_string(input.shape()) + " incompatible with weight " +
                                    shape_string(weight.shape()));
    }
    const std::size_t M = input.extent(0), K = weight.extent(0), N = weight.extent(1);
    Tensor out({M, N});
    MatMap y(out.data().data(), M, N);
    y.noalias() = ConstMatMap(input.data().data(), M, K) * ConstMatMap(weight.data().data(), K, N);
    y.rowwise() += ConstVecMap(bias.data().data(), N).transpose();
    return out;
}

void linear_backward(const Tensor& input, const Tensor& weight, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weight, std::span<double> grad_bias) {
    const std::size_t M = input.extent(0), K = weight.extent(0), N = weight.extent(1);
    ConstMatMap dy(grad_output.data(), M, N);
    ConstMatMap x(input.data().data(), M, K);
    if (!grad_weight.empty()) MatMap(grad_weight.data(), K, N).noalias() += x.transpose() * dy;
    if (!grad_bias.empty()) VecMap(grad_bias.data(), N) += dy.colwise().sum().transpose();
    if (!grad_input.empty()) {
        MatMap(grad_input.data(), M, K).noalias() += dy * ConstMatMap(weight.data().data(), K, N).transpose();
    }
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    check_rank2(x, "softmax");
    const std::size_t M = x.extent(0), N = x.extent(1);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < M; ++i) {
        const double* row = x.data().data() + i * N;
        double* o = out.data().data() + i * N;
        const double mx = *std::max_element(row, row + N);
        double sum = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            o[j] = std::exp(row[j] - mx);
            sum += o[j];
        }
        for (std::size_t j = 0; j < N; ++j) o[j] /= sum;
    }
    return out;
}

namespace {
void check_dropout_p(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must lie in [0, 1), got " + std::to_string(p));
}
} // namespace

std::vector<double> dropout_mask(std::size_t count, double p, Rng& rng) {
    check_dropout_p(p);
    std::vector<double> mask(count, 1.0);
    if (p == 0.0) return mask;
    const double keep = 1.0 / (1.0 - p);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& m : mask) m = u(rng) < p ? 0.0 : keep;
    return mask;
}

std::vector<double> volumetric_dropout_mask(const Shape& shape, double p, Rng& rng) {
    check_dropout_p(p);
    if (shape.size() < 2) throw std::invalid_argument("volumetric dropout needs N x C x ... input");
    const std::size_t maps = shape[0] * shape[1];
    const std::size_t inner = channel_inner(shape);
    const std::vector<double> per_map = dropout_mask(maps, p, rng);
    std::vector<double> mask(maps * inner);
    for (std::size_t m = 0; m < maps; ++m) std::fill_n(mask.begin() + m * inner, inner, per_map[m]);
    return mask;
}

GruState gru_initial_state(std::size_t batch, std::size_t units) {
    GruState s;
    s.hidden = Tensor({batch, units});
    return s;
}

GruState gru_step(const Tensor& input, const GruState& prev, const GruWeights& w) {
    const std::size_t B = input.rank() == 2 ? input.extent(0) : 0;
    const std::size_t D = w.input_dim(), U = w.units();
    if (input.rank() != 2 || input.extent(1) != D) {
        throw std::invalid_argument("gru: input " + shape_string(input.shape()) + " does not match U " +
                                    shape_string(w.update_input->shape()));
    }
    if (prev.hidden.rank() != 2 || prev.hidden.extent(0) != B || prev.hidden.extent(1) != U) {
        throw std::invalid_argument("gru: hidden state " + shape_string(prev.hidden.shape()) + " does not match " +
                                    std::to_string(B) + " x " + std::to_string(U));
    }
    GruState s;
    s.input = input;
    s.prev_hidden = prev.hidden;
    s.update = Tensor({B, U});
    s.reset = Tensor({B, U});
    s.candidate = Tensor({B, U});
    s.hidden = Tensor({B, U});

    ConstMatMap g(input.data().data(), B, D);
    ConstMatMap f(prev.hidden.data().data(), B, U);
    auto mat = [](const Tensor* t) { return ConstMatMap(t->data().data(), t->extent(0), t->extent(1)); };

    RowMat az = g * mat(w.update_input) + f * mat(w.update_hidden);
    RowMat ar = g * mat(w.reset_input) + f * mat(w.reset_hidden);
    MatMap z(s.update.data().data(), B, U);
    MatMap r(s.reset.data().data(), B, U);
    for (Eigen::Index i = 0; i < az.size(); ++i) {
        z.data()[i] = sigmoid(az.data()[i]);
        r.data()[i] = sigmoid(ar.data()[i]);
    }
    RowMat gated = f.cwiseProduct(r);
    RowMat ah = g * mat(w.candidate_input) + gated * mat(w.candidate_hidden);
    MatMap sc(s.candidate.data().data(), B, U);
    for (Eigen::Index i = 0; i < ah.size(); ++i) sc.data()[i] = std::tanh(ah.data()[i]);
    MatMap h(s.hidden.data().data(), B, U);
    h = (1.0 - z.array()).matrix().cwiseProduct(sc) + z.cwiseProduct(f);
    return s;
}

void gru_step_backward(const GruState& st, const GruWeights& w, std::span<const double> grad_hidden,
                       std::span<double> grad_input, std::span<double> grad_prev_hidden, GruWeightGrads& grads) {
    const std::size_t B = st.hidden.extent(0), D = w.input_dim(), U = w.units();
    auto cmat = [](const Tensor& t) { return ConstMatMap(t.data().data(), t.extent(0), t.extent(1)); };
    auto wmat = [](const Tensor* t) { return ConstMatMap(t->data().data(), t->extent(0), t->extent(1)); };

    ConstMatMap df(grad_hidden.data(), B, U);
    auto g = cmat(st.input);
    auto f = cmat(st.prev_hidden);
    auto z = cmat(st.update);
    auto r = cmat(st.reset);
    auto s = cmat(st.candidate);

    // f_t = (1 - z) * s + z * f_{t-1}
    RowMat ds = df.cwiseProduct((1.0 - z.array()).matrix());
    RowMat dz = df.cwiseProduct(f - s);
    RowMat dprev = df.cwiseProduct(z);

    RowMat dah = ds.array() * (1.0 - s.array().square());
    RowMat gated = f.cwiseProduct(r);
    RowMat dgated = dah * wmat(w.candidate_hidden).transpose();
    RowMat dr = dgated.cwiseProduct(f);
    dprev += dgated.cwiseProduct(r);

    RowMat daz = dz.array() * z.array() * (1.0 - z.array());
    RowMat dar = dr.array() * r.array() * (1.0 - r.array());

    MatMap(grads.update_input.data(), D, U).noalias() += g.transpose() * daz;
    MatMap(grads.reset_input.data(), D, U).noalias() += g.transpose() * dar;
    MatMap(grads.candidate_input.data(), D, U).noalias() += g.transpose() * dah;
    MatMap(grads.update_hidden.data(), U, U).noalias() += f.transpose() * daz;
    MatMap(grads.reset_hidden.data(), U, U).noalias() += f.transpose() * dar;
    MatMap(grads.candidate_hidden.data(), U, U).noalias() += gated.transpose() * dah;

    dprev.noalias() += daz * wmat(w.update_hidden).transpose();
    dprev.noalias() += dar * wmat(w.reset_hidden).transpose();
    MatMap(grad_prev_hidden.data(), B, U) += dprev;

    if (!grad_input.empty()) {
        MatMap dg(grad_input.data(), B, D);
        dg.noalias() += daz * wmat(w.update_input).transpose();
        dg.noalias() += dar * wmat(w.reset_input).transpose();
        dg.noalias() += dah * wmat(w.candidate_input).transpose();
    }
}

} // namespace gpm::kernels
