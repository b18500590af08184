// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gpm/error.hpp"

namespace gpm {
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string target_name(double x) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    return os;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
        out.push_back(line.substr(start, pos - start));
    }
    out.push_back(line.substr(start));
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError(where + ": cannot parse '" + s + "'");
    return v;
}

/// Rows of a comma-separated file with the given header.
std::vector<std::vector<std::string>> read_table(const fs::path& path, const std::string& header, std::size_t fields) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != header) throw DataError(path.string() + ": expected header " + header);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto row = split_csv(line);
        if (row.size() != fields) throw DataError(path.string() + ": malformed row '" + line + "'");
        rows.push_back(std::move(row));
    }
    return rows;
}

int truth_class(const std::vector<FrameAnnotation>& annotations) {
    return annotations.empty() ? 0 : annotations.front().class_id;
}

} // namespace

std::optional<double> nttd(std::size_t trigger, const FrameAnnotation& gt) {
    if (trigger < gt.start_frame || trigger > gt.end_frame) return std::nullopt;
    return static_cast<double>(trigger - gt.start_frame + 1) / static_cast<double>(gt.end_frame - gt.start_frame + 1);
}

void FrameCounts::add(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("frame rates: " + std::to_string(predicted.size()) + " predictions for " +
                                    std::to_string(truth.size()) + " labels");
    }
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (truth[t] != 0) {
            ++gesture_frames;
            true_positives += predicted[t] == truth[t];
        } else {
            ++background_frames;
            false_positives += predicted[t] != 0;
        }
    }
}

std::optional<double> FrameCounts::tpr() const {
    if (gesture_frames == 0) return std::nullopt;
    return static_cast<double>(true_positives) / static_cast<double>(gesture_frames);
}

std::optional<double> FrameCounts::fpr() const {
    if (background_frames == 0) return std::nullopt;
    return static_cast<double>(false_positives) / static_cast<double>(background_frames);
}

FrameRates frame_rates(std::span<const int> predicted, std::span<const int> truth) {
    FrameCounts c;
    c.add(predicted, truth);
    return {c.tpr(), c.fpr()};
}

std::vector<int> online_frame_classes(const ModelOutput& output, double epsilon) {
    std::vector<int> out(output.frames(), 0);
    for (std::size_t t = 0; t < output.frames(); ++t)
        if (output.gpm[t] > epsilon) out[t] = gesture_argmax(output.probs(t));
    return out;
}

std::optional<std::size_t> first_trigger(const ModelOutput& output, const FrameAnnotation& gt, double epsilon) {
    for (std::size_t t = gt.start_frame; t <= gt.end_frame && t < output.frames(); ++t)
        if (output.gpm[t] > epsilon) return t;
    return std::nullopt;
}

std::vector<double> uniform_grid(std::size_t points) {
    if (points < 2) throw std::invalid_argument("a threshold grid needs at least two points");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

double trapezoid_auc(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    }
    return area;
}

RocCurve roc_curve(std::span<const ModelOutput> outputs, std::span<const std::vector<int>> labels,
                   std::span<const double> grid) {
    if (outputs.size() != labels.size()) throw std::invalid_argument("roc: outputs and labels differ in count");
    struct Frame {
        double score;
        bool background;
        bool hit;
    };
    std::vector<Frame> frames;
    std::size_t gesture_frames = 0, background_frames = 0;
    for (std::size_t v = 0; v < outputs.size(); ++v) {
        if (labels[v].size() != outputs[v].frames()) throw std::invalid_argument("roc: label length mismatch");
        for (std::size_t t = 0; t < labels[v].size(); ++t) {
            const bool background = labels[v][t] == 0;
            frames.push_back({outputs[v].gpm[t], background, !background && gesture_argmax(outputs[v].probs(t)) == labels[v][t]});
            background ? ++background_frames : ++gesture_frames;
        }
    }
    std::sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) { return a.score < b.score; });

    std::vector<double> thresholds(grid.begin(), grid.end());
    for (const Frame& f : frames) thresholds.push_back(f.score);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    // Counts of frames scoring above each threshold, swept from the highest threshold down.
    RocCurve curve;
    std::size_t hits = 0, false_alarms = 0, next = frames.size();
    for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
        while (next > 0 && frames[next - 1].score > *it) {
            --next;
            hits += frames[next].hit;
            false_alarms += frames[next].background;
        }
        const double fpr = background_frames ? static_cast<double>(false_alarms) / static_cast<double>(background_frames) : 0.0;
        const double tpr = gesture_frames ? static_cast<double>(hits) / static_cast<double>(gesture_frames) : 0.0;
        curve.points.push_back({*it, fpr, tpr});
    }
    curve.points.push_back({2.0, 0.0, 0.0});
    curve.points.push_back({-1.0, 1.0, 1.0});
    std::sort(curve.points.begin(), curve.points.end(), [](const RocPoint& a, const RocPoint& b) {
        if (a.fpr != b.fpr) return a.fpr < b.fpr;
        if (a.tpr != b.tpr) return a.tpr < b.tpr;
        return a.threshold > b.threshold;
    });
    curve.auc = trapezoid_auc(curve.points);
    return curve;
}

std::vector<NttdPoint> nttd_fpr_curve(std::span<const ModelOutput> outputs,
                                      std::span<const std::vector<FrameAnnotation>> annotations,
                                      std::span<const double> grid) {
    if (outputs.size() != annotations.size()) throw std::invalid_argument("nttd curve: outputs and annotations differ");
    std::vector<std::vector<int>> labels;
    for (std::size_t v = 0; v < outputs.size(); ++v) labels.push_back(frame_labels(annotations[v], outputs[v].frames()));
    std::vector<NttdPoint> curve;
    for (double eps : grid) {
        double sum = 0.0;
        std::size_t gestures = 0;
        FrameCounts c;
        for (std::size_t v = 0; v < outputs.size(); ++v) {
            c.add(online_frame_classes(outputs[v], eps), labels[v]);
            for (const auto& gt : annotations[v]) {
                const auto t = first_trigger(outputs[v], gt, eps);
                sum += t ? *nttd(*t, gt) : 1.0;
                ++gestures;
            }
        }
        curve.push_back({eps, gestures ? sum / static_cast<double>(gestures) : 0.0, c.fpr().value_or(0.0),
                         c.tpr().value_or(0.0)});
    }
    std::stable_sort(curve.begin(), curve.end(), [](const NttdPoint& a, const NttdPoint& b) {
        if (a.mean_nttd != b.mean_nttd) return a.mean_nttd < b.mean_nttd;
        return a.epsilon < b.epsilon;
    });
    return curve;
}

std::vector<Segment> class_runs(std::span<const int> classes) {
    std::vector<Segment> out;
    for (std::size_t t = 0; t < classes.size();) {
        std::size_t e = t;
        while (e + 1 < classes.size() && classes[e + 1] == classes[t]) ++e;
        if (classes[t] != 0) out.push_back({classes[t], t, e});
        t = e + 1;
    }
    return out;
}

JaccardResult jaccard(std::span<const Segment> predicted, std::span<const Segment> truth, std::size_t num_classes) {
    JaccardResult r;
    r.per_class.assign(num_classes + 1, std::nullopt);
    std::size_t frames = 0;
    for (const auto* list : {&predicted, &truth})
        for (const Segment& s : *list) frames = std::max(frames, s.end + 1);
    auto mask = [&](std::span<const Segment> segs, int c) {
        std::vector<char> m(frames, 0);
        for (const Segment& s : segs)
            if (s.class_id == c) std::fill(m.begin() + s.start, m.begin() + s.end + 1, 1);
        return m;
    };
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 1; c <= num_classes; ++c) {
        const auto p = mask(predicted, static_cast<int>(c)), g = mask(truth, static_cast<int>(c));
        std::size_t inter = 0, uni = 0;
        for (std::size_t t = 0; t < frames; ++t) {
            inter += p[t] && g[t];
            uni += p[t] || g[t];
        }
        if (uni == 0) continue;
        r.per_class[c] = static_cast<double>(inter) / static_cast<double>(uni);
        sum += *r.per_class[c];
        ++present;
    }
    if (present > 0) r.mean = sum / static_cast<double>(present);
    return r;
}

void Confusion::add(int truth, int predicted) {
    if (truth < 1 || predicted < 1 || static_cast<std::size_t>(truth) > num_classes ||
        static_cast<std::size_t>(predicted) > num_classes) {
        throw std::invalid_argument("confusion: class out of range");
    }
    ++counts[static_cast<std::size_t>(truth - 1) * num_classes + static_cast<std::size_t>(predicted - 1)];
}

std::size_t Confusion::at(int truth, int predicted) const {
    return counts.at(static_cast<std::size_t>(truth - 1) * num_classes + static_cast<std::size_t>(predicted - 1));
}

double Confusion::accuracy() const {
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < num_classes; ++i)
        for (std::size_t j = 0; j < num_classes; ++j) {
            total += counts[i * num_classes + j];
            if (i == j) correct += counts[i * num_classes + j];
        }
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

std::size_t Confusion::row_sum(int truth) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < num_classes; ++j) s += counts[static_cast<std::size_t>(truth - 1) * num_classes + j];
    return s;
}

ModalityReport evaluate_outputs(const std::string& modality, std::span<const ModelOutput> outputs,
                                std::span<const std::vector<FrameAnnotation>> annotations, std::size_t num_classes,
                                const EvalSettings& settings) {
    if (outputs.size() != annotations.size()) throw std::invalid_argument("evaluate: outputs and annotations differ");
    ModalityReport r;
    r.modality = modality;
    r.videos = outputs.size();
    r.tau = settings.tau;
    r.epsilon = settings.epsilon;
    r.confusion = Confusion(num_classes);

    std::size_t labelled = 0, consensus_hits = 0, vote_hits = 0;
    FrameCounts counts;
    double nttd_sum = 0.0, detected_sum = 0.0;
    std::size_t gestures = 0, detected = 0;
    double jaccard_sum = 0.0;
    std::size_t jaccard_videos = 0;
    std::vector<double> class_sum(num_classes + 1, 0.0);
    std::vector<std::size_t> class_n(num_classes + 1, 0);
    std::vector<std::vector<int>> labels;

    for (std::size_t v = 0; v < outputs.size(); ++v) {
        const ModelOutput& out = outputs[v];
        const auto& gt = annotations[v];
        labels.push_back(frame_labels(gt, out.frames()));
        if (const int truth = truth_class(gt); truth != 0) {
            ++labelled;
            r.confusion.add(truth, classify_peak(out));
            consensus_hits += classify_consensus(out, settings.tau) == truth;
            vote_hits += classify_consensus(out, std::nullopt) == truth;
        }
        counts.add(online_frame_classes(out, settings.epsilon), labels.back());
        for (const auto& a : gt) {
            ++gestures;
            const auto t = first_trigger(out, a, settings.epsilon);
            nttd_sum += t ? *nttd(*t, a) : 1.0;
            if (t && gesture_argmax(out.probs(*t)) == a.class_id) {
                detected_sum += *nttd(*t, a);
                ++detected;
            }
        }
        std::vector<Segment> truth_segments;
        for (const auto& a : gt) truth_segments.push_back({a.class_id, a.start_frame, a.end_frame});
        const JaccardResult j = jaccard(class_runs(out.classes), truth_segments, num_classes);
        if (j.mean) {
            jaccard_sum += *j.mean;
            ++jaccard_videos;
        }
        for (std::size_t c = 1; c <= num_classes; ++c) {
            if (j.per_class[c]) {
                class_sum[c] += *j.per_class[c];
                ++class_n[c];
            }
        }
    }
    const auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    r.accuracy = r.confusion.accuracy();
    r.consensus_accuracy = ratio(consensus_hits, labelled);
    r.global_vote_accuracy = ratio(vote_hits, labelled);
    r.tpr = counts.tpr();
    r.fpr = counts.fpr();
    r.mean_nttd = gestures ? nttd_sum / static_cast<double>(gestures) : 0.0;
    r.mean_nttd_detected = detected ? detected_sum / static_cast<double>(detected) : 0.0;

    const auto grid = uniform_grid(settings.grid_points);
    r.roc = roc_curve(outputs, labels, grid);
    r.nttd_fpr = nttd_fpr_curve(outputs, annotations, grid);
    for (double x : settings.nttd_targets) {
        OperatingPoint op;
        op.target_nttd = x;
        for (const NttdPoint& p : r.nttd_fpr) {
            if (p.mean_nttd > x) continue;
            const bool better = !op.attained || p.tpr > op.point.tpr ||
                                (p.tpr == op.point.tpr && p.fpr < op.point.fpr);
            if (better) op.point = p;
            op.attained = true;
        }
        r.operating_points.push_back(op);
    }
    r.jaccard = jaccard_videos ? jaccard_sum / static_cast<double>(jaccard_videos) : 0.0;
    r.jaccard_per_class.assign(num_classes + 1, std::nullopt);
    for (std::size_t c = 1; c <= num_classes; ++c)
        if (class_n[c]) r.jaccard_per_class[c] = class_sum[c] / static_cast<double>(class_n[c]);
    return r;
}

std::vector<SummaryRow> summary_rows(const MetricsReport& report) {
    std::vector<SummaryRow> rows;
    for (const ModalityReport& m : report.modalities) {
        auto add = [&](const std::string& metric, double value) { rows.push_back({m.modality, metric, value}); };
        add("videos", static_cast<double>(m.videos));
        add("accuracy", m.accuracy);
        if (m.tau) add("tau", *m.tau);
        add("consensus_accuracy", m.consensus_accuracy);
        add("global_vote_accuracy", m.global_vote_accuracy);
        add("epsilon", m.epsilon);
        add("mean_nttd", m.mean_nttd);
        add("mean_nttd_detected", m.mean_nttd_detected);
        if (m.tpr) add("tpr_micro", *m.tpr);
        if (m.fpr) add("fpr_micro", *m.fpr);
        add("roc_auc", m.roc.auc);
        add("jaccard", m.jaccard);
        for (std::size_t c = 1; c < m.jaccard_per_class.size(); ++c)
            if (m.jaccard_per_class[c]) add("jaccard_class_" + std::to_string(c), *m.jaccard_per_class[c]);
        for (const OperatingPoint& op : m.operating_points) {
            const std::string p = "op_nttd_" + target_name(op.target_nttd) + "_";
            add(p + "attained", op.attained ? 1.0 : 0.0);
            if (!op.attained) continue;
            add(p + "epsilon", op.point.epsilon);
            add(p + "mean_nttd", op.point.mean_nttd);
            add(p + "tpr", op.point.tpr);
            add(p + "fpr", op.point.fpr);
        }
        if (m.train_frame_accuracy) add("train_frame_accuracy", *m.train_frame_accuracy);
        for (std::size_t i = 0; i < m.fusion_weights.size(); ++i) add("fusion_weight_" + std::to_string(i), m.fusion_weights[i]);
    }
    return rows;
}

void emit_report(const MetricsReport& report, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create report directory " + dir.string() + ": " + ec.message());
    {
        auto os = open_out(dir / "metrics_summary.csv");
        os << "modality,metric,value\n";
        for (const SummaryRow& r : summary_rows(report)) os << r.modality << ',' << r.metric << ',' << fmt(r.value) << '\n';
    }
    for (const ModalityReport& m : report.modalities) {
        {
            auto os = open_out(dir / ("roc_" + m.modality + ".csv"));
            os << "threshold,fpr,tpr\n";
            for (const RocPoint& p : m.roc.points) os << fmt(p.threshold) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << '\n';
        }
        {
            auto os = open_out(dir / ("nttd_fpr_" + m.modality + ".csv"));
            os << "epsilon,mean_nttd,fpr,tpr\n";
            for (const NttdPoint& p : m.nttd_fpr)
                os << fmt(p.epsilon) << ',' << fmt(p.mean_nttd) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << '\n';
        }
        {
            auto os = open_out(dir / ("confusion_" + m.modality + ".csv"));
            os << "truth";
            for (std::size_t j = 1; j <= m.confusion.num_classes; ++j) os << ",pred_" << j;
            os << '\n';
            for (std::size_t i = 1; i <= m.confusion.num_classes; ++i) {
                os << i;
                for (std::size_t j = 1; j <= m.confusion.num_classes; ++j)
                    os << ',' << m.confusion.at(static_cast<int>(i), static_cast<int>(j));
                os << '\n';
            }
        }
    }
}

std::vector<SummaryRow> read_summary(const fs::path& path) {
    std::vector<SummaryRow> out;
    for (const auto& row : read_table(path, "modality,metric,value", 3)) {
        out.push_back({row[0], row[1], parse_double(row[2], path.string())});
    }
    return out;
}

std::vector<RocPoint> read_roc(const fs::path& path) {
    std::vector<RocPoint> out;
    for (const auto& row : read_table(path, "threshold,fpr,tpr", 3)) {
        out.push_back({parse_double(row[0], path.string()), parse_double(row[1], path.string()),
                       parse_double(row[2], path.string())});
    }
    return out;
}

std::vector<NttdPoint> read_nttd_fpr(const fs::path& path) {
    std::vector<NttdPoint> out;
    for (const auto& row : read_table(path, "epsilon,mean_nttd,fpr,tpr", 4)) {
        out.push_back({parse_double(row[0], path.string()), parse_double(row[1], path.string()),
                       parse_double(row[2], path.string()), parse_double(row[3], path.string())});
    }
    return out;
}

void write_trace(const fs::path& path, std::span<const int> labels,
                 std::span<const std::pair<std::string, const ModelOutput*>> outputs) {
    auto os = open_out(path);
    os << "frame,label";
    for (const auto& [name, _] : outputs) os << ',' << name << "_gpm," << name << "_class";
    os << '\n';
    for (std::size_t t = 0; t < labels.size(); ++t) {
        os << t << ',' << labels[t];
        for (const auto& [_, out] : outputs) os << ',' << fmt(out->gpm.at(t)) << ',' << out->classes.at(t);
        os << '\n';
    }
}

} // namespace gpm
