// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <random>

#include "gpm/metrics.hpp"
#include "support/oracles.hpp"

using namespace gpm;

namespace {

ModelOutput flat_output(std::vector<double> gpm, const std::vector<int>& winner, std::size_t classes) {
    ModelOutput o;
    o.gpm = std::move(gpm);
    o.probabilities = Tensor({o.gpm.size(), classes + 1}, 0.1);
    for (std::size_t t = 0; t < o.gpm.size(); ++t) o.probabilities.at(t, static_cast<std::size_t>(winner[t])) = 0.9;
    o.classes = winner;
    return o;
}

} // namespace

TEST_CASE("nttd counts frames inclusively") {
    CHECK(*nttd(15, {"v", 1, 10, 20}) == doctest::Approx(6.0 / 11.0));
    CHECK(*nttd(20, {"v", 1, 10, 20}) == 1.0);
    CHECK(*nttd(10, {"v", 1, 10, 20}) == doctest::Approx(1.0 / 11.0));
    CHECK_FALSE(nttd(21, {"v", 1, 10, 20}).has_value());
    CHECK_FALSE(nttd(9, {"v", 1, 10, 20}).has_value());
}

TEST_CASE("frame rates on the trivial cases") {
    const std::vector<int> truth{0, 0, 2, 2, 2, 0};
    auto perfect = frame_rates(truth, truth);
    CHECK(*perfect.tpr == 1.0);
    CHECK(*perfect.fpr == 0.0);
    const std::vector<int> silent(truth.size(), 0);
    auto none = frame_rates(silent, truth);
    CHECK(*none.tpr == 0.0);
    CHECK(*none.fpr == 0.0);
    const std::vector<int> all_gesture{2, 2, 2};
    CHECK_FALSE(frame_rates(all_gesture, all_gesture).fpr.has_value());
}

TEST_CASE("jaccard of overlapping segments") {
    const std::vector<Segment> pred{{1, 10, 20}}, truth{{1, 15, 25}};
    CHECK(*jaccard(pred, truth, 3).mean == doctest::Approx(0.375));
    CHECK(*jaccard(truth, truth, 3).mean == 1.0);
    const std::vector<Segment> other{{2, 15, 25}};
    CHECK(*jaccard(pred, other, 3).mean == 0.0);
    CHECK_FALSE(jaccard({}, {}, 3).mean.has_value());
}

TEST_CASE("roc of a perfect separator") {
    const auto o = flat_output({0.0, 0.1, 0.9, 0.95, 0.05}, {1, 1, 2, 2, 1}, 2);
    const std::vector<ModelOutput> outputs{o};
    const std::vector<std::vector<int>> labels{{0, 0, 2, 2, 0}};
    const RocCurve roc = roc_curve(outputs, labels, uniform_grid(101));
    CHECK(roc.auc == doctest::Approx(1.0));
    for (std::size_t i = 1; i < roc.points.size(); ++i) CHECK(roc.points[i - 1].fpr <= roc.points[i].fpr);
}

TEST_CASE("roc of scores unrelated to the labels is near one half") {
    std::mt19937_64 rng(5);
    std::vector<ModelOutput> outputs;
    std::vector<std::vector<int>> labels;
    for (int v = 0; v < 200; ++v) {
        std::vector<int> y(40, 0), winner(40, 1);
        for (int t = 10; t < 25; ++t) y[t] = winner[t] = 1;
        std::vector<double> g(40);
        for (double& x : g) x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        outputs.push_back(flat_output(g, winner, 1));
        labels.push_back(y);
    }
    CHECK(std::abs(roc_curve(outputs, labels, uniform_grid(101)).auc - 0.5) <= 0.05);
}

TEST_CASE("roc auc is invariant under a monotone transform of the scores") {
    std::mt19937_64 rng(9);
    std::vector<ModelOutput> a, b;
    std::vector<std::vector<int>> labels;
    for (int v = 0; v < 20; ++v) {
        std::vector<int> y(30, 0), winner(30, 1);
        for (int t = 8; t < 20; ++t) y[t] = winner[t] = 1;
        std::vector<double> g(30), h(30);
        for (int t = 0; t < 30; ++t) {
            // Scores on the grid so the transform maps grid cells onto grid cells.
            g[t] = std::uniform_int_distribution<int>(0, 10)(rng) / 10.0 + (y[t] ? 0.0 : -0.05);
            g[t] = std::clamp(g[t], 0.0, 1.0);
            h[t] = g[t] * g[t];
        }
        a.push_back(flat_output(g, winner, 1));
        b.push_back(flat_output(h, winner, 1));
        labels.push_back(y);
    }
    std::vector<double> grid_a = uniform_grid(101), grid_b;
    for (double e : grid_a) grid_b.push_back(e * e);
    CHECK(roc_curve(a, labels, grid_a).auc == doctest::Approx(roc_curve(b, labels, grid_b).auc).epsilon(1e-12));
}

TEST_CASE("brute-force oracles agree on fuzzed instances") {
    using namespace gpm::testing;
    for (const auto& [name, report] : {std::pair{"conv3d", fuzz_conv3d(1, 150)}, std::pair{"maxpool", fuzz_maxpool(2, 300)},
                                       std::pair{"nttd", fuzz_nttd(3, 500)}, std::pair{"frame_rates", fuzz_frame_rates(4, 500)},
                                       std::pair{"jaccard", fuzz_jaccard(5, 300)}, std::pair{"consensus", fuzz_consensus(6, 500)},
                                       std::pair{"roc_auc", fuzz_roc_auc(7, 50)}, std::pair{"gpm", fuzz_gpm_targets(8, 500)}}) {
        INFO(name, ": ", report.first_failure);
        CHECK(report.ok());
    }
}

TEST_CASE("confusion rows sum to class support") {
    Confusion c(3);
    c.add(1, 1);
    c.add(1, 2);
    c.add(3, 3);
    CHECK(c.row_sum(1) == 2);
    CHECK(c.row_sum(2) == 0);
    CHECK(c.accuracy() == doctest::Approx(2.0 / 3.0));
}
