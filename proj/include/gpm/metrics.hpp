// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpm/detector.hpp"
#include "gpm/objectives.hpp"

// Frame counting is inclusive throughout: a segment [s, e] covers e - s + 1 frames.
namespace gpm {

/// (trigger - t_s + 1) / (t_e - t_s + 1); nullopt when the trigger lies outside
/// the segment.
std::optional<double> nttd(std::size_t trigger, const FrameAnnotation& gt);

/// Pooled frame counts. A gesture frame is a true positive when its predicted
/// class equals the label; a background frame is a false positive when any
/// gesture is predicted.
struct FrameCounts {
    std::size_t gesture_frames = 0;
    std::size_t background_frames = 0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;

    void add(std::span<const int> predicted, std::span<const int> truth);
    std::optional<double> tpr() const;
    std::optional<double> fpr() const;
};

struct FrameRates {
    std::optional<double> tpr;
    std::optional<double> fpr;
};

FrameRates frame_rates(std::span<const int> predicted, std::span<const int> truth);

/// Online per-frame decision: the gesture argmax where P_t > epsilon, else 0.
std::vector<int> online_frame_classes(const ModelOutput& output, double epsilon);

/// First frame inside the segment with P_t > epsilon.
std::optional<std::size_t> first_trigger(const ModelOutput& output, const FrameAnnotation& gt, double epsilon);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points; // sorted by FPR, then TPR
    double auc = 0.0;
};

std::vector<double> uniform_grid(std::size_t points);

/// Trapezoid area under points sorted by (fpr, tpr).
double trapezoid_auc(std::span<const RocPoint> points);

/// Sweeps epsilon over `grid` and every distinct frame score using the online
/// frame classes, pools frames over all videos and closes the curve with (0,0)
/// and (1,1).
RocCurve roc_curve(std::span<const ModelOutput> outputs, std::span<const std::vector<int>> labels,
                   std::span<const double> grid);

struct NttdPoint {
    double epsilon = 0.0;
    double mean_nttd = 0.0; // over every ground-truth gesture; a miss counts as 1
    double fpr = 0.0;
    double tpr = 0.0;
};

/// One point per grid threshold, sorted by mean NTtD then threshold.
std::vector<NttdPoint> nttd_fpr_curve(std::span<const ModelOutput> outputs,
                                      std::span<const std::vector<FrameAnnotation>> annotations,
                                      std::span<const double> grid);

struct Segment {
    int class_id = 0;
    std::size_t start = 0;
    std::size_t end = 0; // inclusive
};

/// Maximal runs of one non-background class.
std::vector<Segment> class_runs(std::span<const int> classes);

struct JaccardResult {
    std::optional<double> mean; // over classes present in either set
    std::vector<std::optional<double>> per_class; // index = class id
};

/// Per-class IoU of the frame sets covered by the two segment lists.
JaccardResult jaccard(std::span<const Segment> predicted, std::span<const Segment> truth, std::size_t num_classes);

struct Confusion {
    std::size_t num_classes = 0;
    std::vector<std::size_t> counts; // row = truth, column = prediction, classes 1..N

    explicit Confusion(std::size_t n = 0) : num_classes(n), counts(n * n, 0) {}
    void add(int truth, int predicted);
    std::size_t at(int truth, int predicted) const;
    double accuracy() const;
    std::size_t row_sum(int truth) const;
};

struct OperatingPoint {
    double target_nttd = 0.0;
    bool attained = false;
    NttdPoint point;
};

struct ModalityReport {
    std::string modality;
    std::size_t videos = 0;
    double accuracy = 0.0;            // offline peak trigger
    double consensus_accuracy = 0.0;  // at the configured tau
    double global_vote_accuracy = 0.0;
    std::optional<double> tau;
    double epsilon = 0.0;
    double mean_nttd = 0.0;
    double mean_nttd_detected = 0.0; // over correctly classified triggers only
    std::optional<double> tpr;
    std::optional<double> fpr;
    std::vector<OperatingPoint> operating_points;
    RocCurve roc;
    std::vector<NttdPoint> nttd_fpr;
    double jaccard = 0.0;
    std::vector<std::optional<double>> jaccard_per_class;
    Confusion confusion;
    std::optional<double> train_frame_accuracy;
    std::vector<double> fusion_weights;
};

struct MetricsReport {
    std::vector<ModalityReport> modalities;
};

struct EvalSettings {
    double epsilon = 0.5;
    std::optional<double> tau = 0.75;
    std::size_t refractory = 8;
    std::size_t grid_points = 101;
    std::vector<double> nttd_targets{0.25, 0.5, 0.75};
};

/// Scores single-gesture test clips. `annotations[v]` holds the segments of video v.
ModalityReport evaluate_outputs(const std::string& modality, std::span<const ModelOutput> outputs,
                                std::span<const std::vector<FrameAnnotation>> annotations, std::size_t num_classes,
                                const EvalSettings& settings);

struct SummaryRow {
    std::string modality;
    std::string metric;
    double value = 0.0;
};

std::vector<SummaryRow> summary_rows(const MetricsReport& report);

/// Writes metrics_summary.csv, roc_<m>.csv, nttd_fpr_<m>.csv and confusion_<m>.csv.
void emit_report(const MetricsReport& report, const std::filesystem::path& dir);

std::vector<SummaryRow> read_summary(const std::filesystem::path& path);
std::vector<RocPoint> read_roc(const std::filesystem::path& path);
std::vector<NttdPoint> read_nttd_fpr(const std::filesystem::path& path);

/// Per-frame dump: frame,label,<prefix>_gpm,<prefix>_class,... one row per frame.
void write_trace(const std::filesystem::path& path, std::span<const int> labels,
                 std::span<const std::pair<std::string, const ModelOutput*>> outputs);

} // namespace gpm
