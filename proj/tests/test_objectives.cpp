// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gpm/error.hpp"
#include "gpm/objectives.hpp"
#include "support/gradcheck.hpp"

using namespace gpm;

TEST_CASE("gpm target inside and outside a segment") {
    const std::vector<FrameAnnotation> one{{"v", 1, 10, 20}};
    const auto p = gpm_target(one, 30);
    CHECK(p[10] == 0.0);
    CHECK(p[15] == 0.5);
    CHECK(p[20] == 1.0);
    CHECK(p[5] == 0.0);

    const std::vector<FrameAnnotation> two{{"v", 1, 2, 4}, {"v", 2, 8, 10}};
    const std::vector<double> want{0, 0, 0, .5, 1, 0, 0, 0, 0, .5, 1, 0};
    CHECK(gpm_target(two, 12) == want);
}

TEST_CASE("annotations must be ordered, disjoint and in range") {
    CHECK_THROWS_AS(gpm_target(std::vector<FrameAnnotation>{{"v", 1, 5, 12}}, 12), DataError);
    CHECK_THROWS_AS(gpm_target(std::vector<FrameAnnotation>{{"v", 1, 5, 3}}, 12), DataError);
    CHECK_THROWS_AS(gpm_target(std::vector<FrameAnnotation>{{"v", 1, 2, 5}, {"v", 2, 5, 8}}, 12), DataError);
    CHECK_THROWS_AS(gpm_target(std::vector<FrameAnnotation>{{"v", 0, 2, 5}}, 12), DataError);
}

TEST_CASE("gpm loss is the mean squared error") {
    const std::vector<double> a{0.2, 0.4}, zero{0.0, 1.0}, one{1.0, 0.0};
    CHECK(gpm_loss(a, a) == 0.0);
    CHECK(gpm_loss(zero, one) == 1.0);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(37), q(37);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = u(rng);
        q[i] = u(rng);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
    CHECK(gpm_loss(p, q) == s / 37.0);
}

TEST_CASE("class weights are inverse frequencies") {
    const std::vector<std::size_t> counts{60, 10, 30};
    const auto w = class_weights(counts);
    CHECK(w[0] == doctest::Approx(100.0 / 180.0));
    CHECK(w[1] == doctest::Approx(100.0 / 30.0));
    CHECK(w[2] == doctest::Approx(100.0 / 90.0));

    for (double x : class_weights(std::vector<std::size_t>{7, 7, 7, 7})) CHECK(x == 1.0);

    const std::vector<std::size_t> scaled{600, 100, 300};
    const auto w10 = class_weights(scaled);
    for (std::size_t k = 0; k < 3; ++k) CHECK(w10[k] == doctest::Approx(w[k]).epsilon(1e-15));

    const std::vector<std::string> names{"no-gesture", "swipe", "tap"};
    try {
        class_weights(std::vector<std::size_t>{5, 0, 5}, names);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("swipe") != std::string::npos);
    }
}

TEST_CASE("weighted cross-entropy") {
    Tensor certain({3, 3});
    const std::vector<int> labels{0, 2, 1};
    for (std::size_t t = 0; t < 3; ++t) certain.at(t, static_cast<std::size_t>(labels[t])) = 1.0;
    const std::vector<double> uniform_w{1.0, 1.0, 1.0};
    CHECK(class_loss(certain, labels, uniform_w) == 0.0);

    const Tensor flat({4, 5}, 0.2);
    const std::vector<int> any{0, 3, 4, 1};
    CHECK(class_loss(flat, any, std::vector<double>(5, 1.0)) == doctest::Approx(std::log(5.0)));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    const std::size_t M = 23, K = 4;
    Tensor p({M, K});
    std::vector<int> y(M);
    std::vector<double> w{0.5, 1.5, 2.0, 0.8};
    for (std::size_t t = 0; t < M; ++t) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += p.at(t, k) = u(rng);
        for (std::size_t k = 0; k < K; ++k) p.at(t, k) /= s;
        y[t] = static_cast<int>(rng() % K);
    }
    double oracle = 0.0;
    for (std::size_t t = 0; t < M; ++t) oracle -= w[static_cast<std::size_t>(y[t])] * std::log(p.at(t, static_cast<std::size_t>(y[t])));
    oracle /= static_cast<double>(M);
    CHECK(std::abs(class_loss(p, y, w) - oracle) <= 1e-12);
}

TEST_CASE("joint loss combines the heads with lambda") {
    CHECK(joint_loss(0.3, 7.0, 0.0) == 0.3);
    CHECK(joint_loss(0.5, 0.5, 1.0) == 1.0);
}

TEST_CASE("joint loss gradient is the sum of the head gradients") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto r = testing::model_gradcheck(Variant::conv3d_gru, 100 + seed);
        INFO("worst ", r.worst);
        CHECK(r.max_relative_error <= 1e-3);
    }
}

TEST_CASE("annotation files round trip and reject malformed rows") {
    const auto dir = std::filesystem::temp_directory_path() / "gpm_annotations_test";
    std::filesystem::create_directories(dir);
    const std::vector<FrameAnnotation> rows{{"train_00001", 3, 4, 17}, {"train_00001", 1, 22, 40}, {"test_00002", 8, 0, 0}};
    write_annotations(dir / "a.csv", rows);
    CHECK(read_annotations(dir / "a.csv") == rows);

    std::ofstream(dir / "bad.csv") << "video_id,class_id,start_frame,end_frame\nv,1,x,4\n";
    CHECK_THROWS_AS(read_annotations(dir / "bad.csv"), DataError);
    std::ofstream(dir / "header.csv") << "id,class,start,end\n";
    CHECK_THROWS_AS(read_annotations(dir / "header.csv"), DataError);
    std::filesystem::remove_all(dir);
}
