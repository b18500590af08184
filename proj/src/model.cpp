// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>

#include "gpm/error.hpp"

namespace gpm {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

Tensor uniform_tensor(Shape shape, std::size_t fan_in, kernels::Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = dist(rng);
    return t;
}

Dense make_dense(const std::string& name, std::size_t in, std::size_t out, kernels::Rng& rng) {
    Dense d;
    d.weight = {name + ".weight", uniform_tensor({in, out}, in, rng)};
    d.bias = {name + ".bias", uniform_tensor({out}, in, rng)};
    return d;
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace

std::string to_string(Variant v) {
    switch (v) {
    case Variant::conv3d_gru: return "3DCNN-GRU";
    case Variant::conv3d_linear: return "3DCNN-Linear";
    case Variant::conv2d_gru: return "2DCNN-GRU";
    }
    return "?";
}

std::string to_string(Preset p) { return p == Preset::desk ? "desk" : "paper"; }

Variant parse_variant(std::string_view name) {
    const std::string n = lower(name);
    if (n == "3dcnn-gru") return Variant::conv3d_gru;
    if (n == "3dcnn-linear") return Variant::conv3d_linear;
    if (n == "2dcnn-gru") return Variant::conv2d_gru;
    throw ConfigError("unknown model variant '" + std::string(name) + "' (expected 3DCNN-GRU, 3DCNN-Linear or 2DCNN-GRU)");
}

Preset parse_preset(std::string_view name) {
    const std::string n = lower(name);
    if (n == "desk") return Preset::desk;
    if (n == "paper") return Preset::paper;
    throw ConfigError("unknown model preset '" + std::string(name) + "' (expected desk or paper)");
}

ModelConfig ModelConfig::desk() { return {}; }

ModelConfig ModelConfig::paper() {
    ModelConfig c;
    c.preset = Preset::paper;
    c.height = 112;
    c.width = 112;
    c.conv_widths = {32, 64, 128, 256};
    c.linear_width = 2048;
    c.recurrent_units = 1024;
    c.num_classes = 25;
    c.conv_dropout = 0.1;
    c.linear_dropout = 0.85;
    return c;
}

void ModelConfig::validate() const {
    if (in_channels == 0) throw ConfigError("model: in_channels must be positive");
    if (conv_widths.empty()) throw ConfigError("model: at least one conv block is required");
    if (std::find(conv_widths.begin(), conv_widths.end(), std::size_t{0}) != conv_widths.end()) {
        throw ConfigError("model: conv widths must be positive");
    }
    const std::size_t step = std::size_t{1} << conv_widths.size();
    if (height == 0 || width == 0 || height % step != 0 || width % step != 0) {
        throw ConfigError("model: frame size " + std::to_string(height) + "x" + std::to_string(width) +
                          " must be a positive multiple of " + std::to_string(step) + " for " +
                          std::to_string(conv_widths.size()) + " pooling stages");
    }
    if (linear_width == 0 || recurrent_units == 0) throw ConfigError("model: layer widths must be positive");
    if (num_classes == 0) throw ConfigError("model: at least one gesture class is required");
    if (conv_dropout < 0.0 || conv_dropout >= 1.0 || linear_dropout < 0.0 || linear_dropout >= 1.0) {
        throw ConfigError("model: dropout probabilities must lie in [0, 1)");
    }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"preset", to_string(c.preset)},
                       {"variant", to_string(c.variant)},
                       {"in_channels", c.in_channels},
                       {"height", c.height},
                       {"width", c.width},
                       {"conv_widths", c.conv_widths},
                       {"linear_width", c.linear_width},
                       {"recurrent_units", c.recurrent_units},
                       {"num_classes", c.num_classes},
                       {"conv_dropout", c.conv_dropout},
                       {"linear_dropout", c.linear_dropout}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    static const std::set<std::string> known{"preset",       "variant",         "in_channels", "height",
                                             "width",        "conv_widths",     "linear_width",
                                             "recurrent_units", "num_classes", "conv_dropout", "linear_dropout"};
    if (!j.is_object()) throw ConfigError("model: expected an object");
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ConfigError("model: unknown key '" + key + "'");
    }
    try {
        if (j.contains("preset")) {
            const Preset p = parse_preset(j.at("preset").get<std::string>());
            if (p != c.preset) c = p == Preset::paper ? ModelConfig::paper() : ModelConfig::desk();
        }
        if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
        c.in_channels = j.value("in_channels", c.in_channels);
        c.height = j.value("height", c.height);
        c.width = j.value("width", c.width);
        c.conv_widths = j.value("conv_widths", c.conv_widths);
        c.linear_width = j.value("linear_width", c.linear_width);
        c.recurrent_units = j.value("recurrent_units", c.recurrent_units);
        c.num_classes = j.value("num_classes", c.num_classes);
        c.conv_dropout = j.value("conv_dropout", c.conv_dropout);
        c.linear_dropout = j.value("linear_dropout", c.linear_dropout);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    kernels::Rng rng(seed);
    const std::size_t kT = config_.temporal_kernel();
    std::size_t channels = config_.in_channels;
    for (std::size_t i = 0; i < config_.conv_widths.size(); ++i) {
        const std::size_t out = config_.conv_widths[i];
        const std::string name = "conv" + std::to_string(i + 1);
        const std::size_t fan_in = channels * kT * 9;
        ConvBlock b;
        b.kernel = {name + ".kernel", uniform_tensor({out, channels, kT, 3, 3}, fan_in, rng)};
        b.bias = {name + ".bias", uniform_tensor({out}, fan_in, rng)};
        b.bn_scale = {name + ".bn_scale", Tensor({out}, 1.0)};
        b.bn_shift = {name + ".bn_shift", Tensor({out}, 0.0)};
        b.running = kernels::BatchNormStats(out);
        b.padding = kernels::Padding3d::causal(b.kernel.value.shape());
        conv_.push_back(std::move(b));
        channels = out;
    }
    const std::size_t L = config_.linear_width, U = config_.recurrent_units;
    fc1_ = make_dense("fc1", config_.feature_dim(), L, rng);
    fc2_ = make_dense("fc2", L, L, rng);
    if (config_.variant == Variant::conv3d_linear) {
        aggregate_ = make_dense("aggregate", L, U, rng);
    } else {
        gru_uz_ = {"gru.update_input", uniform_tensor({L, U}, L, rng)};
        gru_ur_ = {"gru.reset_input", uniform_tensor({L, U}, L, rng)};
        gru_uh_ = {"gru.candidate_input", uniform_tensor({L, U}, L, rng)};
        gru_wz_ = {"gru.update_hidden", uniform_tensor({U, U}, U, rng)};
        gru_wr_ = {"gru.reset_hidden", uniform_tensor({U, U}, U, rng)};
        gru_wh_ = {"gru.candidate_hidden", uniform_tensor({U, U}, U, rng)};
    }
    gpm_head_ = make_dense("gpm_head", U, 1, rng);
    class_head_ = make_dense("class_head", U, config_.head_width(), rng);
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    for (auto& b : conv_) out.insert(out.end(), {&b.kernel, &b.bias, &b.bn_scale, &b.bn_shift});
    out.insert(out.end(), {&fc1_.weight, &fc1_.bias, &fc2_.weight, &fc2_.bias});
    if (config_.variant == Variant::conv3d_linear) {
        out.insert(out.end(), {&aggregate_.weight, &aggregate_.bias});
    } else {
        out.insert(out.end(), {&gru_uz_, &gru_ur_, &gru_uh_, &gru_wz_, &gru_wr_, &gru_wh_});
    }
    out.insert(out.end(), {&gpm_head_.weight, &gpm_head_.bias, &class_head_.weight, &class_head_.bias});
    return out;
}

std::vector<const Parameter*> Model::parameters() const {
    auto mut = const_cast<Model*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

void Model::check_input(const Shape& shape) const {
    const auto want = [&] {
        return "N x " + std::to_string(config_.in_channels) + " x T x " + std::to_string(config_.height) + " x " +
               std::to_string(config_.width);
    };
    if (shape.size() != 5) throw ConfigError("model input must be " + want() + ", got " + shape_string(shape));
    if (shape[0] == 0 || shape[2] == 0) throw ConfigError("model input needs N >= 1 and T >= 1, got " + shape_string(shape));
    if (shape[1] != config_.in_channels || shape[3] != config_.height || shape[4] != config_.width) {
        throw ConfigError("model input must be " + want() + ", got " + shape_string(shape));
    }
}

template <typename Bind>
ForwardResult Model::build(ad::Tape& tape, const Tensor& batch, ad::Mode mode, kernels::Rng& rng, Bind bind) const {
    check_input(batch.shape());
    const std::size_t N = batch.extent(0), T = batch.extent(2);
    ForwardResult result;
    ad::Var x = tape.input(batch);
    for (const ConvBlock& b : conv_) {
        x = ad::conv3d(tape, x, bind(b.kernel), bind(b.bias), b.padding);
        kernels::BatchNormCache stats;
        x = ad::batchnorm(tape, x, bind(b.bn_scale), bind(b.bn_shift), mode, b.running,
                          mode == ad::Mode::train ? &stats : nullptr);
        if (mode == ad::Mode::train) result.batch_stats.push_back(std::move(stats));
        x = ad::relu(tape, x);
        x = ad::volumetric_dropout(tape, x, config_.conv_dropout, mode, rng);
        x = ad::maxpool_spatial(tape, x);
    }
    ad::Var h = ad::frames_to_rows(tape, x);
    h = ad::relu(tape, ad::linear(tape, h, bind(fc1_.weight), bind(fc1_.bias)));
    h = ad::dropout(tape, h, config_.linear_dropout, mode, rng);
    h = ad::relu(tape, ad::linear(tape, h, bind(fc2_.weight), bind(fc2_.bias)));
    h = ad::dropout(tape, h, config_.linear_dropout, mode, rng);
    ad::Var f;
    if (config_.variant == Variant::conv3d_linear) {
        f = ad::relu(tape, ad::linear(tape, h, bind(aggregate_.weight), bind(aggregate_.bias)));
    } else {
        const ad::GruVars gru{bind(gru_uz_), bind(gru_ur_), bind(gru_uh_), bind(gru_wz_), bind(gru_wr_), bind(gru_wh_)};
        f = ad::gru_sequence(tape, h, N, T, gru);
    }
    result.gpm = ad::sigmoid(tape, ad::linear(tape, f, bind(gpm_head_.weight), bind(gpm_head_.bias)));
    result.class_logits = ad::linear(tape, f, bind(class_head_.weight), bind(class_head_.bias));
    result.probabilities = ad::softmax_rows(tape, result.class_logits);
    return result;
}

ForwardResult Model::forward(ad::Tape& tape, const Tensor& batch, ad::Mode mode, kernels::Rng& rng) {
    return build(tape, batch, mode, rng,
                 [&](const Parameter& p) { return tape.parameter(const_cast<Tensor&>(p.value)); });
}

void Model::commit_batch_stats(const ForwardResult& result) {
    if (result.batch_stats.size() != conv_.size()) return;
    for (std::size_t i = 0; i < conv_.size(); ++i) kernels::update_running_stats(conv_[i].running, result.batch_stats[i]);
}

std::vector<ModelOutput> Model::predict(const Tensor& batch) const {
    ad::Tape tape;
    kernels::Rng unused(0);
    const ForwardResult r = build(tape, batch, ad::Mode::eval, unused,
                                  [&](const Parameter& p) { return tape.input(p.value); });
    const std::size_t N = batch.extent(0), T = batch.extent(2), K = config_.head_width();
    const Tensor& gpm = tape.value(r.gpm);
    const Tensor& probs = tape.value(r.probabilities);
    std::vector<ModelOutput> out(N);
    for (std::size_t n = 0; n < N; ++n) {
        ModelOutput& o = out[n];
        o.gpm.assign(gpm.data().begin() + n * T, gpm.data().begin() + (n + 1) * T);
        o.probabilities = Tensor({T, K});
        std::copy_n(probs.data().begin() + n * T * K, T * K, o.probabilities.data().begin());
        o.classes.resize(T);
        for (std::size_t t = 0; t < T; ++t) o.classes[t] = static_cast<int>(argmax(o.probs(t)));
    }
    return out;
}

ModelOutput Model::predict_clip(const Tensor& video) const {
    if (video.rank() != 4) throw ConfigError("expected a C x T x H x W clip, got " + shape_string(video.shape()));
    Shape s = video.shape();
    s.insert(s.begin(), 1);
    return std::move(predict(video.reshaped(s)).front());
}

StreamingEncoder::StreamingEncoder(const Model& model) : model_(&model) { reset(); }

void StreamingEncoder::reset() {
    history_.assign(model_->conv_.size(), {});
    hidden_ = Tensor({1, model_->config_.recurrent_units});
    frames_ = 0;
}

FramePrediction StreamingEncoder::push(const Tensor& frame) {
    const ModelConfig& cfg = model_->config_;
    const Shape want{cfg.in_channels, cfg.height, cfg.width};
    if (frame.shape() != want) {
        throw ConfigError("frame " + std::to_string(frames_) + " has shape " + shape_string(frame.shape()) +
                          ", expected " + shape_string(want));
    }
    const std::size_t kT = cfg.temporal_kernel();
    Tensor x = frame;
    for (std::size_t b = 0; b < model_->conv_.size(); ++b) {
        const ConvBlock& block = model_->conv_[b];
        const std::size_t C = x.extent(0), H = x.extent(1), W = x.extent(2), HW = H * W;
        auto& hist = history_[b];
        Tensor window({1, C, kT, H, W});
        const std::size_t missing = kT - 1 - hist.size();
        for (std::size_t j = 0; j < kT; ++j) {
            const Tensor* src = nullptr;
            if (j == kT - 1) src = &x;
            else if (j >= missing) src = &hist[j - missing];
            if (!src) continue;
            for (std::size_t c = 0; c < C; ++c)
                std::copy_n(src->data().begin() + c * HW, HW, window.data().begin() + (c * kT + j) * HW);
        }
        if (kT > 1) {
            hist.push_back(x);
            if (hist.size() > kT - 1) hist.erase(hist.begin());
        }
        const kernels::Padding3d pad{0, 0, block.padding.height, block.padding.width};
        Tensor y = kernels::conv3d(window, block.kernel.value, block.bias.value, pad);
        y = kernels::batchnorm_eval(y, block.bn_scale.value.data(), block.bn_shift.value.data(), block.running);
        y = kernels::relu(y);
        Tensor pooled = std::move(kernels::maxpool_spatial(y).output);
        x = pooled.reshaped({pooled.extent(1), pooled.extent(3), pooled.extent(4)});
    }
    Tensor h = kernels::relu(kernels::linear(x.reshaped({1, x.size()}), model_->fc1_.weight.value, model_->fc1_.bias.value));
    h = kernels::relu(kernels::linear(h, model_->fc2_.weight.value, model_->fc2_.bias.value));
    Tensor f;
    if (cfg.variant == Variant::conv3d_linear) {
        f = kernels::relu(kernels::linear(h, model_->aggregate_.weight.value, model_->aggregate_.bias.value));
    } else {
        const kernels::GruWeights w{&model_->gru_uz_.value, &model_->gru_ur_.value, &model_->gru_uh_.value,
                                    &model_->gru_wz_.value, &model_->gru_wr_.value, &model_->gru_wh_.value};
        kernels::GruState prev;
        prev.hidden = hidden_;
        f = kernels::gru_step(h, prev, w).hidden;
        hidden_ = f;
    }
    FramePrediction out;
    out.gpm = kernels::sigmoid(kernels::linear(f, model_->gpm_head_.weight.value, model_->gpm_head_.bias.value))[0];
    const Tensor probs =
        kernels::softmax_rows(kernels::linear(f, model_->class_head_.weight.value, model_->class_head_.bias.value));
    out.probabilities.assign(probs.data().begin(), probs.data().end());
    out.predicted_class = static_cast<int>(argmax(out.probabilities));
    ++frames_;
    return out;
}

} // namespace gpm
