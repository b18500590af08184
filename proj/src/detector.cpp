// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/detector.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "gpm/error.hpp"
#include "gpm/objectives.hpp"

namespace gpm {
namespace {

std::size_t earliest_max(std::span<const double> v, std::size_t begin, std::size_t end) {
    std::size_t best = begin;
    for (std::size_t t = begin + 1; t < end; ++t)
        if (v[t] > v[best]) best = t;
    return best;
}

DetectionEvent event_at(const ModelOutput& output, std::size_t t) {
    DetectionEvent e;
    e.frame = t;
    e.gpm = output.gpm[t];
    const auto p = output.probs(t);
    e.probabilities.assign(p.begin(), p.end());
    e.predicted_class = gesture_argmax(p);
    return e;
}

DetectionEvent event_from(const FramePrediction& p, std::size_t t) {
    DetectionEvent e;
    e.frame = t;
    e.gpm = p.gpm;
    e.probabilities = p.probabilities;
    e.predicted_class = gesture_argmax(p.probabilities);
    return e;
}

} // namespace

void DetectorConfig::validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("detector: epsilon must lie in [0, 1]");
    if (tau && !(*tau >= 0.0 && *tau <= 1.0)) throw ConfigError("detector: tau must lie in [0, 1]");
    if (!(noise_floor >= 0.0 && noise_floor <= 1.0)) throw ConfigError("detector: noise_floor must lie in [0, 1]");
}

int gesture_argmax(std::span<const double> probabilities) {
    if (probabilities.size() < 2) throw std::invalid_argument("gesture_argmax needs at least one gesture class");
    std::size_t best = 1;
    for (std::size_t k = 2; k < probabilities.size(); ++k)
        if (probabilities[k] > probabilities[best]) best = k;
    return static_cast<int>(best);
}

std::vector<DetectionEvent> detect_offline(const ModelOutput& output, RegionMode mode, double noise_floor) {
    const std::size_t T = output.frames();
    std::vector<DetectionEvent> events;
    auto consider = [&](std::size_t begin, std::size_t end) {
        const std::size_t peak = earliest_max(output.gpm, begin, end);
        if (output.gpm[peak] > noise_floor) events.push_back(event_at(output, peak));
    };
    if (T == 0) return events;
    if (mode == RegionMode::whole_clip) {
        consider(0, T);
        return events;
    }
    for (std::size_t t = 0; t < T;) {
        if (output.classes[t] == 0) {
            ++t;
            continue;
        }
        std::size_t e = t;
        while (e < T && output.classes[e] != 0) ++e;
        consider(t, e);
        t = e;
    }
    return events;
}

int classify_peak(const ModelOutput& output) {
    if (output.frames() == 0) throw std::invalid_argument("cannot classify an empty clip");
    return gesture_argmax(output.probs(earliest_max(output.gpm, 0, output.frames())));
}

std::vector<std::size_t> consensus_frames(const ModelOutput& output, double tau) {
    const std::size_t T = output.frames();
    if (T == 0) throw std::invalid_argument("consensus over an empty clip");
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("consensus ratio must lie in [0, 1]");
    const std::size_t peak = earliest_max(output.gpm, 0, T);
    std::vector<std::size_t> frames;
    if (tau == 1.0) return {peak};
    if (tau == 0.0) {
        for (std::size_t t = 0; t < T; ++t) frames.push_back(t);
        return frames;
    }
    const double cut = tau * output.gpm[peak];
    for (std::size_t t = 0; t < T; ++t)
        if (output.gpm[t] > cut) frames.push_back(t);
    if (frames.empty()) frames.push_back(peak);
    return frames;
}

int classify_consensus(const ModelOutput& output, std::optional<double> tau) {
    const std::size_t T = output.frames();
    if (T == 0) throw std::invalid_argument("cannot classify an empty clip");
    std::vector<std::size_t> frames;
    if (tau) {
        frames = consensus_frames(output, *tau);
    } else {
        for (std::size_t t = 0; t < T; ++t) frames.push_back(t);
    }
    std::vector<double> sum(output.probabilities.extent(1), 0.0);
    for (std::size_t t : frames) {
        const auto p = output.probs(t);
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += p[k];
    }
    return gesture_argmax(sum);
}

TriggerState::TriggerState(double epsilon, std::size_t refractory) : epsilon_(epsilon), refractory_(refractory) {}

bool TriggerState::update(double gpm) {
    if (!armed_ && gpm < epsilon_ / 2) armed_ = true;
    if (cooldown_ > 0) {
        --cooldown_;
        return false;
    }
    if (armed_ && gpm > epsilon_) {
        armed_ = false;
        cooldown_ = refractory_;
        return true;
    }
    return false;
}

void TriggerState::reset() {
    armed_ = true;
    cooldown_ = 0;
}

StreamSession::StreamSession(const Model& model, const DetectorConfig& config)
    : encoder_(model), trigger_(config.epsilon, config.refractory) {
    config.validate();
}

std::optional<DetectionEvent> StreamSession::step(const Tensor& frame) {
    const std::size_t t = encoder_.frames_seen();
    last_ = encoder_.push(frame);
    last_gpm_ = last_.gpm;
    if (!trigger_.update(last_.gpm)) return std::nullopt;
    return event_from(last_, t);
}

void StreamSession::reset() {
    encoder_.reset();
    trigger_.reset();
    last_gpm_ = 0.0;
}

std::vector<DetectionEvent> replay_online(const ModelOutput& output, double epsilon, std::size_t refractory) {
    TriggerState trigger(epsilon, refractory);
    std::vector<DetectionEvent> events;
    for (std::size_t t = 0; t < output.frames(); ++t)
        if (trigger.update(output.gpm[t])) events.push_back(event_at(output, t));
    return events;
}

ModelOutput fuse(std::span<const ModelOutput* const> outputs, std::span<const double> weights) {
    if (outputs.empty() || outputs.size() != weights.size()) {
        throw std::invalid_argument("fuse: " + std::to_string(weights.size()) + " weights for " +
                                    std::to_string(outputs.size()) + " modalities");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("fuse: weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("fuse: weights must not all be zero");
    const std::size_t T = outputs[0]->frames();
    const Shape shape = outputs[0]->probabilities.shape();
    for (const ModelOutput* o : outputs) {
        if (o->frames() != T || o->probabilities.shape() != shape) {
            throw std::invalid_argument("fuse: modality outputs differ in length or class count");
        }
    }
    ModelOutput out;
    out.gpm.assign(T, 0.0);
    out.probabilities = Tensor(shape);
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        const double w = weights[m] / total;
        for (std::size_t t = 0; t < T; ++t) out.gpm[t] += w * outputs[m]->gpm[t];
        for (std::size_t i = 0; i < out.probabilities.size(); ++i) out.probabilities[i] += w * outputs[m]->probabilities[i];
    }
    out.classes.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto p = out.probs(t);
        out.classes[t] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    return out;
}

FusionFit fit_fusion_weights(const std::vector<std::vector<ModelOutput>>& outputs,
                             const std::vector<std::vector<int>>& labels, double resolution) {
    const std::size_t M = outputs.size();
    if (M == 0) throw std::invalid_argument("fusion weights need at least one modality");
    if (!(resolution > 0.0 && resolution <= 1.0)) throw std::invalid_argument("fusion grid resolution must lie in (0, 1]");
    const std::size_t V = labels.size();
    for (const auto& per_video : outputs) {
        if (per_video.size() != V) throw std::invalid_argument("fusion: modalities cover different video counts");
        for (std::size_t v = 0; v < V; ++v) {
            if (per_video[v].frames() != labels[v].size()) throw std::invalid_argument("fusion: label length mismatch");
        }
    }
    bool varied = false;
    std::size_t frames = 0;
    int first = V > 0 && !labels[0].empty() ? labels[0][0] : 0;
    for (const auto& l : labels) {
        frames += l.size();
        for (int y : l) varied = varied || y != first;
    }
    if (!varied) throw std::invalid_argument("fusion: training labels contain a single class");

    auto score = [&](const std::vector<double>& w) {
        double total = 0.0;
        for (double x : w) total += x;
        std::size_t correct = 0;
        double log_prob = 0.0;
        std::vector<double> p;
        for (std::size_t v = 0; v < V; ++v) {
            const std::size_t K = outputs[0][v].probabilities.extent(1);
            p.resize(K);
            for (std::size_t t = 0; t < labels[v].size(); ++t) {
                std::fill(p.begin(), p.end(), 0.0);
                for (std::size_t m = 0; m < M; ++m) {
                    if (w[m] == 0.0) continue;
                    const auto q = outputs[m][v].probs(t);
                    for (std::size_t k = 0; k < K; ++k) p[k] += (w[m] / total) * q[k];
                }
                const auto y = static_cast<std::size_t>(labels[v][t]);
                const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
                correct += pred == y;
                log_prob += std::log(std::max(p[y], kLogClamp));
            }
        }
        return FusionFit{w, static_cast<double>(correct) / static_cast<double>(frames),
                         log_prob / static_cast<double>(frames)};
    };

    FusionFit best = score(std::vector<double>(M, 1.0 / static_cast<double>(M)));
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / resolution));
    std::vector<std::size_t> parts(M, 0);
    std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t m, std::size_t left) {
        if (m + 1 == M) {
            parts[m] = left;
            std::vector<double> w(M);
            for (std::size_t i = 0; i < M; ++i) w[i] = static_cast<double>(parts[i]) / static_cast<double>(steps);
            FusionFit candidate = score(w);
            const bool better = candidate.accuracy > best.accuracy + 1e-12 ||
                                (std::abs(candidate.accuracy - best.accuracy) <= 1e-12 &&
                                 candidate.mean_log_prob > best.mean_log_prob + 1e-12);
            if (better) best = std::move(candidate);
            return;
        }
        for (std::size_t k = 0; k <= left; ++k) {
            parts[m] = left - k;
            walk(m + 1, k);
        }
    };
    walk(0, steps);
    return best;
}

} // namespace gpm
