// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "gpm/error.hpp"
#include "gpm/objectives.hpp"
#include "gpm/synth.hpp"

using namespace gpm;

namespace {

GeneratorConfig small_generator() {
    GeneratorConfig c;
    c.num_classes = 4;
    c.train_per_class = 3;
    c.test_per_class = 2;
    return c;
}

/// Per-pixel temporal minimum subtracted from every frame of channel 0.
std::vector<std::vector<double>> foreground(const VideoSample& v) {
    const std::size_t T = v.length(), HW = v.frames.extent(2) * v.frames.extent(3);
    std::vector<double> floor(HW, INFINITY);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < HW; ++i) floor[i] = std::min(floor[i], v.frames[t * HW + i]);
    std::vector<std::vector<double>> out(T, std::vector<double>(HW));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < HW; ++i) out[t][i] = v.frames[t * HW + i] - floor[i];
    return out;
}

std::pair<double, double> centroid(const std::vector<double>& fg, std::size_t W) {
    double m = 0.0, x = 0.0, y = 0.0;
    for (std::size_t i = 0; i < fg.size(); ++i) {
        m += fg[i];
        x += fg[i] * static_cast<double>(i % W);
        y += fg[i] * static_cast<double>(i / W);
    }
    return {x / m, y / m};
}

} // namespace

TEST_CASE("the same seed gives a bit-identical corpus") {
    const auto specs = default_gestures(4);
    const Corpus a = generate(small_generator(), specs), b = generate(small_generator(), specs);
    REQUIRE(a.train.size() == 12);
    REQUIRE(a.test.size() == 8);
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].frames.storage() == b.train[i].frames.storage());
        CHECK(a.train[i].annotations == b.train[i].annotations);
    }
    std::set<std::uint64_t> seeds;
    for (const auto* split : {&a.train, &a.test})
        for (const auto& v : *split) seeds.insert(v.seed);
    CHECK(seeds.size() == 20);
}

TEST_CASE("splits follow the gesture count contract") {
    const Corpus c = generate(small_generator(), default_gestures(4));
    for (std::size_t i = 0; i < c.train.size(); ++i) {
        const VideoSample& v = c.train[i];
        CHECK((v.annotations.size() >= 1 && v.annotations.size() <= 3));
        const int cycled = static_cast<int>(i % 4) + 1;
        CHECK(std::any_of(v.annotations.begin(), v.annotations.end(), [&](const auto& a) { return a.class_id == cycled; }));
        for (const auto& a : v.annotations) CHECK((a.length() >= 12 && a.length() <= 24));
        CHECK_NOTHROW(validate_annotations(v.annotations, v.length()));
        CHECK(v.annotations.front().start_frame >= 2);
        CHECK(v.annotations.back().end_frame + 2 < v.length());
    }
    for (const auto& v : c.test) CHECK(v.annotations.size() == 1);
}

TEST_CASE("without distractors all motion lies inside the segments") {
    GeneratorConfig g = small_generator();
    g.distractor_rate = 0.0;
    const Corpus c = generate(g, default_gestures(4));
    for (const auto& v : c.train) {
        const auto labels = frame_labels(v.annotations, v.length());
        const auto fg = foreground(v);
        for (std::size_t t = 0; t < v.length(); ++t) {
            if (labels[t] != 0) continue;
            CHECK(*std::max_element(fg[t].begin(), fg[t].end()) <= 1e-12);
        }
    }
}

TEST_CASE("a swipe to the right moves the centroid right on every frame") {
    GeneratorConfig g = small_generator();
    g.distractor_rate = 0.0;
    const auto specs = default_gestures(4);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const VideoSample v = generate_video(g, specs, {2}, seed, "v");
        REQUIRE(specs[1].kind == GestureKind::swipe_right);
        const auto fg = foreground(v);
        const auto& a = v.annotations.front();
        for (std::size_t t = a.start_frame + 1; t <= a.end_frame; ++t)
            CHECK(centroid(fg[t], g.width).first > centroid(fg[t - 1], g.width).first);
    }
}

TEST_CASE("swipe directions are separable by centroid displacement") {
    GeneratorConfig g;
    g.num_classes = 4;
    g.train_per_class = 10;
    g.test_per_class = 10;
    const Corpus c = generate(g, default_gestures(4));
    auto feature = [&](const VideoSample& v) {
        const auto fg = foreground(v);
        const auto& a = v.annotations.front();
        const auto s = centroid(fg[a.start_frame], g.width), e = centroid(fg[a.end_frame], g.width);
        return std::pair{e.first - s.first, e.second - s.second};
    };
    std::vector<std::pair<double, double>> means(5, {0.0, 0.0});
    std::vector<double> counts(5, 0.0);
    for (const auto& v : c.test) {
        const auto f = feature(v);
        const auto k = static_cast<std::size_t>(v.annotations.front().class_id);
        means[k].first += f.first;
        means[k].second += f.second;
        counts[k] += 1.0;
    }
    for (std::size_t k = 1; k <= 4; ++k) {
        means[k].first /= counts[k];
        means[k].second /= counts[k];
    }
    std::size_t correct = 0;
    for (const auto& v : c.test) {
        const auto f = feature(v);
        std::size_t best = 1;
        double best_d = INFINITY;
        for (std::size_t k = 1; k <= 4; ++k) {
            const double d = std::hypot(f.first - means[k].first, f.second - means[k].second);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        correct += static_cast<int>(best) == v.annotations.front().class_id;
    }
    CHECK(correct >= 38);
}

TEST_CASE("derived modalities") {
    const Corpus c = generate(small_generator(), default_gestures(4));
    const VideoSample& depth = c.train[0];
    const VideoSample color = derive_modality(depth, Modality::color);
    const VideoSample flow = derive_modality(depth, Modality::flow);
    CHECK(color.annotations == depth.annotations);
    CHECK(flow.annotations == depth.annotations);
    CHECK(color.frames.extent(0) == 3);
    CHECK(flow.frames.extent(0) == 2);
    const std::size_t n = depth.frames.size();
    for (std::size_t i = 0; i < n; i += 97)
        for (std::size_t ch = 0; ch < 3; ++ch) CHECK(color.frames[ch * n + i] == doctest::Approx(kColorGains[ch] * depth.frames[i]));

    VideoSample still = depth;
    const std::size_t HW = 48 * 48;
    for (std::size_t t = 1; t < still.length(); ++t)
        std::copy_n(depth.frames.data().begin(), HW, still.frames.data().begin() + t * HW);
    const VideoSample still_flow = derive_modality(still, Modality::flow);
    for (double v : still_flow.frames.data()) CHECK(v == 0.0);
}

TEST_CASE("nearest-frame subsampling") {
    VideoSample v;
    v.frames = Tensor({1, 4, 1, 1}, std::vector<double>{10, 11, 12, 13});
    const VideoSample two = subsample_nearest(v, 2);
    CHECK(two.frames.storage() == AlignedBuffer{10, 13});
    CHECK(subsample_nearest(v, 4).frames.storage() == v.frames.storage());

    VideoSample s;
    s.frames = Tensor({1, 10, 1, 1});
    s.annotations = {{"s", 1, 2, 8}};
    const VideoSample five = subsample_nearest(s, 5);
    REQUIRE(five.annotations.size() == 1);
    CHECK(five.annotations[0].start_frame == 1);
    CHECK(five.annotations[0].end_frame == 4);
}

TEST_CASE("identity augmentation is a center crop") {
    const Corpus c = generate(small_generator(), default_gestures(4));
    const VideoSample& v = c.train[1];
    AugmentationConfig none;
    none.rotation_degrees = 0.0;
    none.spatial_scale = 0.0;
    none.temporal_scale = 0.0;
    none.nonlinear_warp = false;
    none.temporal_shift = 0;
    none.crop_height = 48;
    none.crop_width = 48;
    kernels::Rng rng(1);
    const VideoSample a = augment(v, none, rng);
    CHECK(a.annotations == v.annotations);
    CHECK(a.frames.storage() == v.frames.storage());

    const VideoSample crop = center_crop(v, 32, 32);
    CHECK(crop.annotations == v.annotations);
    CHECK(crop.frames[0] == v.frames[8 * 48 + 8]);
    CHECK(crop.frames[31 * 32 + 31] == v.frames[39 * 48 + 39]);
}

TEST_CASE("temporal translation shifts every segment") {
    VideoSample v;
    v.frames = Tensor({1, 48, 4, 4}, 0.5);
    v.annotations = {{"v", 1, 5, 17}, {"v", 2, 25, 40}};
    AugmentationParams p;
    p.temporal_shift = 3;
    const VideoSample moved = apply_augmentation(v, p, 4, 4);
    REQUIRE(moved.annotations.size() == 2);
    CHECK(moved.annotations[0].start_frame == 8);
    CHECK(moved.annotations[0].end_frame == 20);
    CHECK(moved.annotations[1].start_frame == 28);
    CHECK(moved.annotations[1].end_frame == 43);
}

TEST_CASE("augmented samples keep every gesture with valid targets") {
    const Corpus c = generate(small_generator(), default_gestures(4));
    AugmentationConfig aug;
    kernels::Rng rng(3);
    for (const auto& v : c.train) {
        for (int r = 0; r < 5; ++r) {
            const VideoSample a = augment(v, aug, rng);
            CHECK(a.frames.shape() == Shape{1, 48, 32, 32});
            CHECK(a.annotations.size() == v.annotations.size());
            const auto p = gpm_target(a.annotations, a.length());
            for (const auto& s : a.annotations) CHECK(p[s.end_frame] == 1.0);
        }
    }
}

TEST_CASE("generator and augmentation configs reject bad values") {
    GeneratorConfig g;
    g.num_classes = 9;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = GeneratorConfig{};
    g.noise = -0.1;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = GeneratorConfig{};
    g.frames = 10;
    CHECK_THROWS_AS(generate(g, default_gestures(8)), ConfigError);
    AugmentationConfig a;
    a.spatial_scale = 1.5;
    CHECK_THROWS_AS(a.validate(), ConfigError);
}
