// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/objectives.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gpm/error.hpp"

namespace gpm {
namespace {

std::string describe(const FrameAnnotation& a) {
    return a.video_id + " [" + std::to_string(a.start_frame) + ", " + std::to_string(a.end_frame) + "]";
}

template <typename T>
T parse_field(std::string_view field, const std::string& where) {
    T value{};
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw DataError(where + ": cannot parse '" + std::string(field) + "'");
    return value;
}

} // namespace

void validate_annotations(std::span<const FrameAnnotation> annotations, std::size_t frames) {
    std::vector<const FrameAnnotation*> sorted;
    for (const auto& a : annotations) {
        if (a.start_frame > a.end_frame) throw DataError("segment " + describe(a) + " ends before it starts");
        if (a.end_frame >= frames) {
            throw DataError("segment " + describe(a) + " exceeds video length " + std::to_string(frames));
        }
        if (a.class_id < 1) throw DataError("segment " + describe(a) + " has class " + std::to_string(a.class_id));
        sorted.push_back(&a);
    }
    std::sort(sorted.begin(), sorted.end(), [](auto* x, auto* y) { return x->start_frame < y->start_frame; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i]->start_frame <= sorted[i - 1]->end_frame) {
            throw DataError("segments " + describe(*sorted[i - 1]) + " and " + describe(*sorted[i]) + " overlap");
        }
    }
}

std::vector<double> gpm_target(std::span<const FrameAnnotation> annotations, std::size_t frames) {
    validate_annotations(annotations, frames);
    std::vector<double> p(frames, 0.0);
    for (const auto& a : annotations) {
        if (a.start_frame == a.end_frame) {
            p[a.start_frame] = 1.0;
            continue;
        }
        const double span = static_cast<double>(a.end_frame - a.start_frame);
        for (std::size_t t = a.start_frame; t <= a.end_frame; ++t) p[t] = static_cast<double>(t - a.start_frame) / span;
    }
    return p;
}

std::vector<int> frame_labels(std::span<const FrameAnnotation> annotations, std::size_t frames) {
    validate_annotations(annotations, frames);
    std::vector<int> labels(frames, 0);
    for (const auto& a : annotations) std::fill(labels.begin() + a.start_frame, labels.begin() + a.end_frame + 1, a.class_id);
    return labels;
}

double gpm_loss(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size() || predicted.empty()) {
        throw std::invalid_argument("gpm loss: " + std::to_string(predicted.size()) + " predictions for " +
                                    std::to_string(target.size()) + " targets");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < predicted.size(); ++t) sum += (predicted[t] - target[t]) * (predicted[t] - target[t]);
    return sum / static_cast<double>(predicted.size());
}

std::vector<double> class_weights(std::span<const std::size_t> counts, std::span<const std::string> class_names) {
    if (counts.empty()) throw DataError("class weights: no classes");
    std::size_t total = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) {
            const std::string name = k < class_names.size() ? class_names[k] : "class " + std::to_string(k);
            throw DataError("class weights: " + name + " has no training frames");
        }
        total += counts[k];
    }
    std::vector<double> w(counts.size());
    const double K = static_cast<double>(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) w[k] = static_cast<double>(total) / (K * static_cast<double>(counts[k]));
    return w;
}

double class_loss(const Tensor& probabilities, std::span<const int> labels, std::span<const double> weights) {
    if (probabilities.rank() != 2 || probabilities.extent(0) != labels.size() || labels.empty()) {
        throw std::invalid_argument("class loss: probabilities " + shape_string(probabilities.shape()) + " for " +
                                    std::to_string(labels.size()) + " labels");
    }
    const std::size_t K = probabilities.extent(1);
    if (weights.size() != K) throw std::invalid_argument("class loss: expected " + std::to_string(K) + " class weights");
    double sum = 0.0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        const auto y = static_cast<std::size_t>(labels[t]);
        if (y >= K) throw std::invalid_argument("class loss: label " + std::to_string(labels[t]) + " out of range");
        sum += weights[y] * std::log(std::max(probabilities.at(t, y), kLogClamp));
    }
    return -sum / static_cast<double>(labels.size());
}

double joint_loss(double gpm, double cls, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("joint loss: lambda must be non-negative");
    return gpm + lambda * cls;
}

ad::Var gpm_loss(ad::Tape& tape, ad::Var predicted, std::span<const double> target) {
    const Tensor& p = tape.value(predicted);
    Tensor loss({1}, gpm_loss(p.data(), target));
    std::vector<double> tgt(target.begin(), target.end());
    return tape.record(std::move(loss), {predicted}, [predicted, tgt = std::move(tgt)](ad::Tape& t, ad::Var result) {
        auto sink = t.grad_sink(predicted);
        if (sink.empty()) return;
        const double g = t.grad(result)[0];
        const auto& p = t.value(predicted);
        const double scale = 2.0 * g / static_cast<double>(tgt.size());
        for (std::size_t i = 0; i < tgt.size(); ++i) sink[i] += scale * (p[i] - tgt[i]);
    });
}

ad::Var class_loss(ad::Tape& tape, ad::Var probabilities, std::span<const int> labels, std::span<const double> weights) {
    const Tensor& p = tape.value(probabilities);
    Tensor loss({1}, class_loss(p, labels, weights));
    std::vector<int> y(labels.begin(), labels.end());
    std::vector<double> w(weights.begin(), weights.end());
    return tape.record(std::move(loss), {probabilities},
                       [probabilities, y = std::move(y), w = std::move(w)](ad::Tape& t, ad::Var result) {
                           auto sink = t.grad_sink(probabilities);
                           if (sink.empty()) return;
                           const double g = t.grad(result)[0];
                           const auto& p = t.value(probabilities);
                           const std::size_t K = p.extent(1);
                           const double scale = -g / static_cast<double>(y.size());
                           for (std::size_t i = 0; i < y.size(); ++i) {
                               const auto k = static_cast<std::size_t>(y[i]);
                               const double c = p.at(i, k);
                               if (c > kLogClamp) sink[i * K + k] += scale * w[k] / c;
                           }
                       });
}

void write_annotations(const std::filesystem::path& path, std::span<const FrameAnnotation> annotations) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    os << "video_id,class_id,start_frame,end_frame\n";
    for (const auto& a : annotations) {
        os << a.video_id << ',' << a.class_id << ',' << a.start_frame << ',' << a.end_frame << '\n';
    }
    if (!os) throw DataError("failed writing " + path.string());
}

std::vector<FrameAnnotation> read_annotations(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "video_id,class_id,start_frame,end_frame") {
        throw DataError(path.string() + ": missing header video_id,class_id,start_frame,end_frame");
    }
    std::vector<FrameAnnotation> out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(row);
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
            fields.push_back(rest.substr(0, pos));
        }
        fields.push_back(rest);
        if (fields.size() != 4) throw DataError(where + ": expected 4 fields, got " + std::to_string(fields.size()));
        FrameAnnotation a;
        a.video_id = std::string(fields[0]);
        a.class_id = parse_field<int>(fields[1], where);
        a.start_frame = parse_field<std::size_t>(fields[2], where);
        a.end_frame = parse_field<std::size_t>(fields[3], where);
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace gpm
