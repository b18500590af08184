// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gpm/checkpoint.hpp"
#include "gpm/error.hpp"
#include "gpm/model.hpp"

using namespace gpm;

namespace {

ModelConfig small_config(Variant v = Variant::conv3d_gru) {
    ModelConfig c;
    c.variant = v;
    c.height = 16;
    c.width = 16;
    c.conv_widths = {4, 6};
    c.linear_width = 12;
    c.recurrent_units = 7;
    c.num_classes = 4;
    return c;
}

Tensor random_clip(std::mt19937_64& rng, const Shape& shape) {
    Tensor t(shape);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : t.data()) v = u(rng);
    return t;
}

/// Non-trivial running statistics so eval-mode normalization matters.
void perturb_running_stats(Model& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.3, 1.7);
    for (ConvBlock& b : m.conv_blocks()) {
        for (double& x : b.running.mean) x = u(rng) - 1.0;
        for (double& x : b.running.variance) x = u(rng);
    }
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    REQUIRE(a.size() == b.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("gpm_model_test_" + name);
}

} // namespace

TEST_CASE("outputs keep the temporal length for every variant") {
    std::mt19937_64 rng(1);
    for (Variant v : {Variant::conv3d_gru, Variant::conv3d_linear, Variant::conv2d_gru}) {
        const Model m(small_config(v), 5);
        for (std::size_t T : {1, 4, 9}) {
            const auto out = m.predict(random_clip(rng, {2, 1, T, 16, 16}));
            REQUIRE(out.size() == 2);
            CHECK(out[0].frames() == T);
            CHECK(out[0].probabilities.shape() == Shape{T, 5});
            for (double g : out[1].gpm) CHECK((g >= 0.0 && g <= 1.0));
        }
    }
}

TEST_CASE("eval mode is deterministic") {
    std::mt19937_64 rng(2);
    const Model m(small_config(), 9);
    const Tensor clip = random_clip(rng, {1, 6, 16, 16});
    const auto a = m.predict_clip(clip), b = m.predict_clip(clip);
    CHECK(a.gpm == b.gpm);
    CHECK(a.probabilities.storage() == b.probabilities.storage());
}

TEST_CASE("input shape is checked with the required extents") {
    const Model m(small_config(), 1);
    CHECK_THROWS_AS(m.predict(Tensor({1, 1, 4, 12, 16})), ConfigError);
    CHECK_THROWS_AS(m.predict(Tensor({1, 3, 4, 16, 16})), ConfigError);
    CHECK_THROWS_AS(m.predict(Tensor({1, 1, 0, 16, 16})), ConfigError);
    CHECK_THROWS_AS(Model(ModelConfig{.height = 18}, 1), ConfigError);
}

TEST_CASE("inflated weights reproduce the source on replicated channels") {
    std::mt19937_64 rng(3);
    Model source(small_config(), 21);
    perturb_running_stats(source, 4);
    const Checkpoint src = capture(source);
    for (std::size_t channels : {2, 3}) {
        const Checkpoint inflated = inflate_weights(src, channels);
        CHECK(inflated.config.in_channels == channels);
        CHECK_FALSE(inflated.optimizer.has_value());
        const Model target = restore_model(inflated);
        for (int trial = 0; trial < 3; ++trial) {
            const Tensor mono = random_clip(rng, {1, 7, 16, 16});
            Tensor multi({channels, 7, 16, 16});
            for (std::size_t c = 0; c < channels; ++c)
                std::copy(mono.data().begin(), mono.data().end(), multi.data().begin() + c * mono.size());
            const auto a = source.predict_clip(mono), b = target.predict_clip(multi);
            CHECK(max_abs_diff(a.gpm, b.gpm) <= 1e-9);
            CHECK(max_abs_diff(a.probabilities.data(), b.probabilities.data()) <= 1e-9);
        }
    }
}

TEST_CASE("inflating to two channels halves and duplicates the first layer only") {
    const Model source(small_config(), 8);
    const Checkpoint src = capture(source);
    const Checkpoint two = inflate_weights(src, 2);
    const auto find = [](const Checkpoint& c, const std::string& name) -> const Tensor& {
        for (const auto& p : c.parameters)
            if (p.name == name) return p.value;
        FAIL("missing " << name);
        throw std::logic_error("unreachable");
    };
    const Tensor& k1 = find(src, "conv1.kernel");
    const Tensor& k2 = find(two, "conv1.kernel");
    REQUIRE(k2.shape() == Shape{k1.extent(0), 2, k1.extent(2), k1.extent(3), k1.extent(4)});
    const std::size_t per = k1.size() / k1.extent(0);
    for (std::size_t o = 0; o < k1.extent(0); ++o)
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t i = 0; i < per; ++i) CHECK(k2[(o * 2 + c) * per + i] == k1[o * per + i] / 2.0);
    for (const auto& p : src.parameters) {
        if (p.name == "conv1.kernel") continue;
        CHECK(find(two, p.name).storage() == p.value.storage());
    }
    CHECK_THROWS_AS(inflate_weights(two, 3), ConfigError);
}

TEST_CASE("checkpoint round trip gives bit-identical outputs") {
    std::mt19937_64 rng(6);
    Model m(small_config(Variant::conv3d_linear), 33);
    perturb_running_stats(m, 7);
    const auto path = temp_file("roundtrip.ckpt");
    save_checkpoint(path, capture(m));
    const Model back = restore_model(load_checkpoint(path));
    CHECK(back.config() == m.config());
    const Tensor clip = random_clip(rng, {1, 5, 16, 16});
    const auto a = m.predict_clip(clip), b = back.predict_clip(clip);
    CHECK(a.gpm == b.gpm);
    CHECK(a.probabilities.storage() == b.probabilities.storage());
    std::filesystem::remove(path);
}

TEST_CASE("corrupt or mismatched checkpoints are rejected") {
    const Model m(small_config(), 2);
    const auto path = temp_file("corrupt.ckpt");
    save_checkpoint(path, capture(m));
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    try {
        load_checkpoint(path);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("not a checkpoint") != std::string::npos);
    }

    save_checkpoint(path, capture(m));
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
    CHECK_THROWS_AS(load_checkpoint(path), DataError);

    const Checkpoint ok = capture(m);
    try {
        require_class_count(ok, 6);
        FAIL("expected an error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('4') != std::string::npos);
        CHECK(msg.find('6') != std::string::npos);
    }

    Checkpoint broken = ok;
    broken.parameters.pop_back();
    CHECK_THROWS_AS(restore_model(broken), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("streaming frame by frame matches whole-clip evaluation") {
    std::mt19937_64 rng(12);
    for (Variant v : {Variant::conv3d_gru, Variant::conv3d_linear, Variant::conv2d_gru}) {
        Model m(small_config(v), 17);
        perturb_running_stats(m, 18);
        const Tensor clip = random_clip(rng, {1, 11, 16, 16});
        const ModelOutput whole = m.predict_clip(clip);
        StreamingEncoder enc(m);
        const std::size_t hw = 16 * 16;
        for (std::size_t t = 0; t < 11; ++t) {
            Tensor frame({1, 16, 16});
            std::copy_n(clip.data().begin() + t * hw, hw, frame.data().begin());
            const FramePrediction p = enc.push(frame);
            CHECK(std::abs(p.gpm - whole.gpm[t]) <= 1e-9);
            CHECK(max_abs_diff(p.probabilities, whole.probs(t)) <= 1e-9);
        }
        CHECK(enc.frames_seen() == 11);
        CHECK_THROWS_AS(enc.push(Tensor({1, 8, 16})), ConfigError);
        CHECK(enc.frames_seen() == 11);
    }
}
