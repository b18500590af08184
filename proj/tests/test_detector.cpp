// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <random>

#include "gpm/detector.hpp"
#include "support/oracles.hpp"

using namespace gpm;

namespace {

/// Output whose frame t has probability 0.9 on `classes[t]`, spread evenly elsewhere.
ModelOutput make_output(std::vector<double> gpm, const std::vector<int>& classes, std::size_t K = 4) {
    ModelOutput o;
    o.gpm = std::move(gpm);
    o.probabilities = Tensor({o.gpm.size(), K}, 0.1 / static_cast<double>(K - 1));
    o.classes = classes;
    for (std::size_t t = 0; t < o.gpm.size(); ++t) o.probabilities.at(t, static_cast<std::size_t>(classes[t])) = 0.9;
    return o;
}

ModelOutput random_probs(std::mt19937_64& rng, std::size_t T, std::size_t K) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    ModelOutput o;
    o.gpm.assign(T, 0.0);
    o.probabilities = Tensor({T, K});
    o.classes.assign(T, 0);
    for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += o.probabilities.at(t, k) = u(rng);
        for (std::size_t k = 0; k < K; ++k) o.probabilities.at(t, k) /= s;
    }
    return o;
}

} // namespace

TEST_CASE("gesture argmax skips no-gesture and breaks ties low") {
    const std::vector<double> p{0.9, 0.05, 0.05};
    CHECK(gesture_argmax(p) == 1);
    const std::vector<double> q{0.1, 0.2, 0.5, 0.2};
    CHECK(gesture_argmax(q) == 2);
}

TEST_CASE("offline detection triggers at the progression peak") {
    const ModelOutput o = make_output({0.0, 0.2, 0.8, 0.4}, {0, 2, 2, 2});
    const auto whole = detect_offline(o, RegionMode::whole_clip);
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].frame == 2);
    CHECK(whole[0].predicted_class == 2);
    CHECK(detect_offline(o).at(0).frame == 2);

    CHECK(detect_offline(make_output({0, 0, 0, 0}, {0, 1, 1, 0}), RegionMode::whole_clip).empty());

    const auto plateau = detect_offline(make_output({0, 1, 1, 0}, {0, 3, 3, 0}));
    REQUIRE(plateau.size() == 1);
    CHECK(plateau[0].frame == 1);

    const auto two = detect_offline(make_output({0.1, 0.9, 0.0, 0.3, 0.7, 0.2}, {1, 1, 0, 3, 3, 3}));
    REQUIRE(two.size() == 2);
    CHECK(two[0].frame == 1);
    CHECK(two[0].predicted_class == 1);
    CHECK(two[1].frame == 4);
    CHECK(two[1].predicted_class == 3);
}

TEST_CASE("consensus frames follow the ratio") {
    const ModelOutput o = make_output({0.1, 0.5, 0.9, 1.0, 0.2}, {0, 1, 1, 1, 0});
    CHECK(consensus_frames(o, 0.75) == std::vector<std::size_t>{2, 3});
    CHECK(consensus_frames(o, 1.0) == std::vector<std::size_t>{3});
    CHECK(consensus_frames(o, 0.0).size() == 5);
    CHECK_THROWS(consensus_frames(o, 1.5));
}

TEST_CASE("consensus can outvote a single confident frame") {
    const ModelOutput o = make_output({0.2, 0.8, 0.85, 0.9}, {0, 2, 2, 3});
    CHECK(classify_peak(o) == 3);
    CHECK(classify_consensus(o, 1.0) == 3);
    CHECK(classify_consensus(o, 0.5) == 2);
    CHECK(classify_consensus(o, std::nullopt) == 2);
}

TEST_CASE("threshold trigger") {
    TriggerState s(0.5, 0);
    CHECK_FALSE(s.update(0.1));
    CHECK_FALSE(s.update(0.4));
    CHECK(s.update(0.6));

    TriggerState never(1.0, 0);
    for (double p : {0.1, 0.4, 0.6, 1.0}) CHECK_FALSE(never.update(p));

    // A second crossing needs the signal to drop below half the threshold first.
    TriggerState rearm(0.5, 0);
    CHECK(rearm.update(0.9));
    CHECK_FALSE(rearm.update(0.3));
    CHECK_FALSE(rearm.update(0.9));
    CHECK_FALSE(rearm.update(0.2));
    CHECK(rearm.update(0.9));

    TriggerState refractory(0.5, 2);
    CHECK(refractory.update(0.9));
    CHECK_FALSE(refractory.update(0.0));
    CHECK_FALSE(refractory.update(0.0));
    CHECK(refractory.armed());
    CHECK(refractory.update(0.9));
}

TEST_CASE("online replay reports events with their frames") {
    const ModelOutput o = make_output({0.1, 0.6, 0.7, 0.1, 0.2, 0.8}, {0, 1, 1, 0, 2, 2});
    const auto events = replay_online(o, 0.5, 1);
    REQUIRE(events.size() == 2);
    CHECK(events[0].frame == 1);
    CHECK(events[0].predicted_class == 1);
    CHECK(events[1].frame == 5);
    CHECK(events[1].predicted_class == 2);
}

TEST_CASE("late fusion") {
    std::mt19937_64 rng(5);
    const ModelOutput a = random_probs(rng, 6, 4), b = random_probs(rng, 6, 4);
    const ModelOutput* same[] = {&a, &a};
    const double equal[] = {1.0, 1.0};
    const ModelOutput f = fuse(same, equal);
    for (std::size_t i = 0; i < a.probabilities.size(); ++i) CHECK(f.probabilities[i] == doctest::Approx(a.probabilities[i]));

    const ModelOutput* both[] = {&a, &b};
    const double only_a[] = {1.0, 0.0};
    CHECK(fuse(both, only_a).probabilities.storage() == a.probabilities.storage());

    const double mix[] = {0.3, 0.9};
    const ModelOutput m = fuse(both, mix);
    for (std::size_t t = 0; t < 6; ++t) {
        double s = 0.0;
        for (double p : m.probs(t)) s += p;
        CHECK(s == doctest::Approx(1.0));
        CHECK(m.classes[t] == static_cast<int>(std::max_element(m.probs(t).begin(), m.probs(t).end()) - m.probs(t).begin()));
    }
    const double zero[] = {0.0, 0.0};
    CHECK_THROWS(fuse(both, zero));
}

TEST_CASE("fusion weights favor the informative modality") {
    std::mt19937_64 rng(9);
    std::vector<std::vector<ModelOutput>> outputs(2);
    std::vector<std::vector<int>> labels;
    for (int v = 0; v < 6; ++v) {
        std::vector<int> y(8);
        for (int& c : y) c = static_cast<int>(rng() % 4);
        outputs[0].push_back(make_output(std::vector<double>(8, 0.0), y));
        outputs[1].push_back(random_probs(rng, 8, 4));
        labels.push_back(y);
    }
    const FusionFit fit = fit_fusion_weights(outputs, labels, 0.05);
    CHECK(fit.accuracy == 1.0);
    CHECK(fit.weights[0] == doctest::Approx(1.0));

    const std::vector<std::vector<ModelOutput>> twins{outputs[1], outputs[1]};
    const FusionFit uniform = fit_fusion_weights(twins, labels, 0.05);
    CHECK(uniform.weights == std::vector<double>{0.5, 0.5});

    const std::vector<std::vector<int>> flat(6, std::vector<int>(8, 2));
    CHECK_THROWS(fit_fusion_weights(outputs, flat, 0.05));
}

TEST_CASE("fusion search matches an exhaustive two-modality grid") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<ModelOutput>> outputs(2);
        std::vector<std::vector<int>> labels;
        for (int v = 0; v < 4; ++v) {
            std::vector<int> y(10);
            for (int& c : y) c = static_cast<int>(rng() % 3);
            outputs[0].push_back(random_probs(rng, 10, 3));
            outputs[1].push_back(random_probs(rng, 10, 3));
            labels.push_back(y);
        }
        double best_acc = -1.0;
        for (int i = 0; i <= 10; ++i) {
            const double w = i / 10.0;
            std::size_t correct = 0, total = 0;
            for (std::size_t v = 0; v < 4; ++v)
                for (std::size_t t = 0; t < 10; ++t) {
                    std::vector<double> p(3);
                    for (std::size_t k = 0; k < 3; ++k)
                        p[k] = w * outputs[0][v].probs(t)[k] + (1.0 - w) * outputs[1][v].probs(t)[k];
                    correct += static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) == labels[v][t];
                    ++total;
                }
            best_acc = std::max(best_acc, static_cast<double>(correct) / static_cast<double>(total));
        }
        const FusionFit fit = fit_fusion_weights(outputs, labels, 0.1);
        CHECK(fit.accuracy == doctest::Approx(best_acc));
        CHECK(fit.weights[0] + fit.weights[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("consensus fuzz against a direct vote") {
    const auto r = testing::fuzz_consensus(21, 300);
    INFO(r.first_failure);
    CHECK(r.ok());
}
