// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gpm/checkpoint.hpp"
#include "gpm/corpus_io.hpp"
#include "gpm/detector.hpp"
#include "gpm/pipeline.hpp"
#include "gpm/run_config.hpp"
#include "gpm/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace gpm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class Verdicts {
public:
    void record(int id, bool pass, const std::string& detail) {
        lines_[id] = "criterion " + std::to_string(id) + ": " + (pass ? "PASS" : "FAIL") + "  " + detail;
        std::cerr << lines_[id] << std::endl;
        failed_ += !pass;
    }
    void print() const {
        for (const auto& [id, line] : lines_) std::cout << line << '\n';
        std::cout << (failed_ == 0 ? std::string("all criteria passed") : std::to_string(failed_) + " criteria failed")
                  << std::endl;
    }
    int failed() const { return failed_; }

private:
    std::map<int, std::string> lines_;
    int failed_ = 0;
};

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return INFINITY;
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

double output_diff(const ModelOutput& a, const ModelOutput& b) {
    return std::max(max_abs_diff(a.gpm, b.gpm), max_abs_diff(a.probabilities.data(), b.probabilities.data()));
}

bool same_file(const fs::path& a, const fs::path& b) {
    if (fs::file_size(a) != fs::file_size(b)) return false;
    std::ifstream x(a, std::ios::binary), y(b, std::ios::binary);
    std::vector<char> bx(1 << 20), by(1 << 20);
    while (x && y) {
        x.read(bx.data(), static_cast<std::streamsize>(bx.size()));
        y.read(by.data(), static_cast<std::streamsize>(by.size()));
        if (x.gcount() != y.gcount() || !std::equal(bx.begin(), bx.begin() + x.gcount(), by.begin())) return false;
    }
    return true;
}

/// Relative paths present in either tree whose bytes differ or that exist in only one.
std::vector<std::string> tree_differences(const fs::path& a, const fs::path& b, std::size_t* files) {
    std::set<std::string> names;
    for (const fs::path& root : {a, b})
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file()) names.insert(fs::relative(e.path(), root).string());
    std::vector<std::string> diff;
    for (const auto& n : names)
        if (!fs::exists(a / n) || !fs::exists(b / n) || !same_file(a / n, b / n)) diff.push_back(n);
    *files = names.size();
    return diff;
}

void criterion_gradients(Verdicts& v) {
    const auto start = Clock::now();
    double op_worst = 0.0, model_worst = 0.0;
    std::string where;
    std::size_t checks = 0;
    for (const std::string& op : testing::gradcheck_ops()) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed, ++checks) {
            const auto r = testing::op_gradcheck(op, seed);
            if (r.max_relative_error > op_worst) {
                op_worst = r.max_relative_error;
                where = op + " " + r.worst;
            }
        }
    }
    for (Variant variant : {Variant::conv3d_gru, Variant::conv3d_linear, Variant::conv2d_gru}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed, ++checks)
            model_worst = std::max(model_worst, testing::model_gradcheck(variant, seed).max_relative_error);
    }
    const double t = seconds_since(start);
    v.record(1, op_worst <= 1e-4 && model_worst <= 1e-3 && t < 120.0,
             fmt("%zu checks, per-op max rel err %.2e (%s), end-to-end %.2e, %.1f s", checks, op_worst, where.c_str(),
                 model_worst, t));
}

void criterion_oracles(Verdicts& v) {
    constexpr std::size_t kCases = 1000;
    const std::pair<const char*, testing::FuzzReport> suites[] = {
        {"conv3d", testing::fuzz_conv3d(101, kCases)},         {"maxpool", testing::fuzz_maxpool(102, kCases)},
        {"nttd", testing::fuzz_nttd(103, kCases)},             {"tpr/fpr", testing::fuzz_frame_rates(104, kCases)},
        {"jaccard", testing::fuzz_jaccard(105, kCases)},       {"consensus", testing::fuzz_consensus(106, kCases)},
        {"roc_auc", testing::fuzz_roc_auc(107, kCases, 0.01)},
    };
    bool pass = true;
    std::string detail;
    for (const auto& [name, r] : suites) {
        pass = pass && r.ok() && r.cases >= kCases;
        detail += fmt("%s %zu/%zu", name, r.cases - r.mismatches, r.cases);
        if (std::string(name) == "roc_auc") detail += fmt(" (max gap %.4f)", r.max_error);
        if (!r.ok()) detail += " [" + r.first_failure + "]";
        detail += "; ";
    }
    v.record(2, pass, detail);
}

void criterion_gpm_targets(Verdicts& v) {
    const auto r = testing::fuzz_gpm_targets(201, 10000);
    v.record(3, r.ok() && r.cases >= 10000,
             fmt("%zu/%zu annotation sets hold every invariant before and after augmentation%s", r.cases - r.mismatches,
                 r.cases, r.ok() ? "" : (" [" + r.first_failure + "]").c_str()));
}

struct Trained {
    RunConfig config;
    fs::path corpus, checkpoints, reports;
    MetricsReport report;
    double wall_seconds = 0.0;
};

Trained run_pipeline(RunConfig config, const fs::path& dir, const fs::path& corpus, bool generate_corpus) {
    Trained t;
    t.config = config;
    t.corpus = corpus;
    t.checkpoints = dir / "checkpoints";
    t.reports = dir / "reports";
    const auto start = Clock::now();
    if (generate_corpus) cmd_generate(config, corpus, true);
    std::ostringstream progress;
    cmd_train(config, corpus, t.checkpoints, progress);
    t.report = cmd_eval(config, corpus, t.checkpoints, t.reports, false);
    t.wall_seconds = seconds_since(start);
    return t;
}

void criterion_inflation(Verdicts& v, const Model& depth, const std::vector<VideoSample>& test, const RunConfig& c) {
    const Checkpoint source = capture(depth);
    double worst = 0.0;
    std::size_t clips = 0;
    for (std::size_t channels : {2, 3}) {
        const Model inflated = restore_model(inflate_weights(source, channels));
        for (std::size_t i = 0; i < test.size(); i += 16, ++clips) {
            const VideoSample mono =
                prepare_eval(test[i], Modality::depth, c.model.height, c.model.width, c.training.clip_frames);
            Tensor multi({channels, mono.frames.extent(1), mono.frames.extent(2), mono.frames.extent(3)});
            for (std::size_t ch = 0; ch < channels; ++ch)
                std::copy(mono.frames.data().begin(), mono.frames.data().end(), multi.data().begin() + ch * mono.frames.size());
            worst = std::max(worst, output_diff(depth.predict_clip(mono.frames), inflated.predict_clip(multi)));
        }
    }
    v.record(4, worst <= 1e-9, fmt("%zu replicated test clips through 2- and 3-channel inflations, max abs diff %.2e", clips, worst));
}

void criterion_streaming(Verdicts& v, const Model& depth, const std::vector<VideoSample>& test, const RunConfig& c) {
    double worst = 0.0;
    const std::size_t videos = std::min<std::size_t>(50, test.size());
    for (std::size_t i = 0; i < videos; ++i) {
        const VideoSample clip = prepare_eval(test[i], Modality::depth, c.model.height, c.model.width, c.training.clip_frames);
        const ModelOutput whole = depth.predict_clip(clip.frames);
        StreamingEncoder enc(depth);
        const std::size_t T = clip.frames.extent(1), HW = clip.frames.extent(2) * clip.frames.extent(3);
        for (std::size_t t = 0; t < T; ++t) {
            Tensor frame({1, clip.frames.extent(2), clip.frames.extent(3)});
            std::copy_n(clip.frames.data().begin() + t * HW, HW, frame.data().begin());
            const FramePrediction p = enc.push(frame);
            worst = std::max({worst, std::abs(p.gpm - whole.gpm[t]), max_abs_diff(p.probabilities, whole.probs(t))});
        }
    }
    v.record(5, videos == 50 && worst <= 1e-9, fmt("%zu test videos streamed frame by frame, max abs diff %.2e", videos, worst));
}

void criterion_tradeoff(Verdicts& v, const ModalityReport& r) {
    bool monotone = true;
    for (std::size_t i = 1; i < r.nttd_fpr.size(); ++i) {
        monotone = monotone && r.nttd_fpr[i].mean_nttd >= r.nttd_fpr[i - 1].mean_nttd &&
                   r.nttd_fpr[i].fpr <= r.nttd_fpr[i - 1].fpr;
    }
    const OperatingPoint* op = nullptr;
    for (const auto& p : r.operating_points)
        if (std::abs(p.target_nttd - 0.5) < 1e-12) op = &p;
    const bool attained = op && op->attained && op->point.tpr >= 0.8;
    const NttdPoint* frugal = nullptr;
    for (const auto& p : r.nttd_fpr)
        if (p.mean_nttd <= 0.5 && p.tpr >= 0.8 && (!frugal || p.fpr < frugal->fpr)) frugal = &p;
    std::string detail = fmt("curve of %zu points %s", r.nttd_fpr.size(), monotone ? "monotone" : "NOT monotone");
    if (op) {
        detail += fmt("; max TPR at mean NTtD <= 0.5: eps %.2f, NTtD %.3f, TPR %.3f, FPR %.3f", op->point.epsilon,
                      op->point.mean_nttd, op->point.tpr, op->point.fpr);
    } else {
        detail += "; no operating point for NTtD 0.5";
    }
    if (frugal) {
        detail += fmt("; lowest FPR with TPR >= 0.8: eps %.2f, NTtD %.3f, TPR %.3f, FPR %.3f", frugal->epsilon,
                      frugal->mean_nttd, frugal->tpr, frugal->fpr);
    }
    v.record(7, monotone && attained, detail);
}

void criterion_consensus(Verdicts& v, const std::vector<ModelOutput>& outputs) {
    std::size_t same = 0;
    for (const ModelOutput& o : outputs) {
        const auto events = detect_offline(o, RegionMode::whole_clip);
        same += !events.empty() && events.front().predicted_class == classify_consensus(o, 1.0);
    }
    v.record(9, same == outputs.size(), fmt("%zu/%zu test videos agree", same, outputs.size()));
}

std::vector<double> epoch_losses(const fs::path& log) {
    std::ifstream is(log);
    std::vector<double> out;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        std::istringstream row(line);
        std::string field;
        for (int i = 0; i < 5 && std::getline(row, field, ','); ++i) {}
        out.push_back(std::stod(field));
    }
    return out;
}

int run_cli(const fs::path& cli, const std::string& args, const fs::path& log) {
    const std::string cmd = "\"" + cli.string() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    return std::system(cmd.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    fs::path work = "acceptance_work";
    fs::path cli;
    app.add_option("--work", work, "Scratch directory");
    app.add_option("--cli", cli, "gpmdetect binary used for the reproducibility rerun")->required();
    CLI11_PARSE(app, argc, argv);

    Verdicts verdicts;
    criterion_gradients(verdicts);
    criterion_oracles(verdicts);
    criterion_gpm_targets(verdicts);

    fs::remove_all(work);
    fs::create_directories(work);
    const RunConfig defaults = load_run_config(std::nullopt);
    const Trained main = run_pipeline(defaults, work / "run1", work / "run1" / "corpus", true);
    const ModalityReport& depth_report = main.report.modalities.front();

    const Model depth = restore_model(load_checkpoint(main.checkpoints / "depth.ckpt"));
    const std::vector<VideoSample> test = read_split(main.corpus, "test");
    criterion_inflation(verdicts, depth, test, defaults);
    criterion_streaming(verdicts, depth, test, defaults);

    const auto losses = epoch_losses(main.checkpoints / "train_log_depth.csv");
    verdicts.record(6, depth_report.accuracy >= 0.9 && main.wall_seconds <= 900.0,
                    fmt("%zu classes, %zu test videos, offline accuracy %.4f, generate+train+eval %.0f s, "
                        "joint loss %.4f at epoch 0 and %.4f at epoch 4",
                        defaults.generator.num_classes, depth_report.videos, depth_report.accuracy, main.wall_seconds,
                        losses.size() > 4 ? losses[0] : NAN, losses.size() > 4 ? losses[4] : NAN));
    criterion_tradeoff(verdicts, depth_report);

    double accuracy[2] = {0.0, 0.0};
    const Variant ablated[2] = {Variant::conv3d_linear, Variant::conv2d_gru};
    for (int i = 0; i < 2; ++i) {
        RunConfig c = defaults;
        c.model.variant = ablated[i];
        const Trained t = run_pipeline(c, work / ("ablation_" + to_string(ablated[i])), main.corpus, false);
        accuracy[i] = t.report.modalities.front().accuracy;
    }
    const double gru = depth_report.accuracy;
    verdicts.record(8, gru + 0.01 >= accuracy[0] && gru + 0.01 >= accuracy[1],
                    fmt("3DCNN-GRU %.4f, 3DCNN-Linear %.4f, 2DCNN-GRU %.4f", gru, accuracy[0], accuracy[1]));

    criterion_consensus(verdicts, predict_videos(depth, test, Modality::depth, defaults.training.clip_frames));

    const fs::path run2 = work / "run2";
    fs::create_directories(run2);
    const int rc = run_cli(cli, "generate --out \"" + (run2 / "corpus").string() + "\"", run2 / "generate.log") |
                   run_cli(cli, "train --corpus \"" + (run2 / "corpus").string() + "\" --out \"" + (run2 / "checkpoints").string() + "\"",
                           run2 / "train.log") |
                   run_cli(cli, "eval --corpus \"" + (run2 / "corpus").string() + "\" --checkpoint \"" +
                                    (run2 / "checkpoints").string() + "\" --out \"" + (run2 / "reports").string() + "\"",
                           run2 / "eval.log");
    std::size_t files = 0, total = 0;
    std::vector<std::string> diff;
    if (rc == 0) {
        for (const char* part : {"corpus", "checkpoints", "reports"}) {
            auto d = tree_differences(work / "run1" / part, run2 / part, &files);
            total += files;
            diff.insert(diff.end(), d.begin(), d.end());
        }
    }
    verdicts.record(10, rc == 0 && diff.empty() && total > 0,
                    rc != 0 ? std::string("command line rerun failed, see ") + run2.string()
                            : fmt("%zu files compared between an in-process run and a command line rerun, %zu differ%s", total,
                                  diff.size(), diff.empty() ? "" : (" (first: " + diff.front() + ")").c_str()));

    verdicts.print();
    return verdicts.failed() == 0 ? 0 : 1;
}
