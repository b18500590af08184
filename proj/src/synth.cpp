// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/synth.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

#include "gpm/error.hpp"
#include "gpm/json_util.hpp"

namespace gpm {
namespace {

using Rng = kernels::Rng;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct Blob {
    double x, y, radius, intensity;
};

Blob gesture_blob(GestureKind kind, double u, double cx, double cy, double amplitude, double radius,
                  double intensity, double phase) {
    using std::numbers::pi;
    switch (kind) {
    case GestureKind::swipe_left: return {cx + amplitude - 2 * amplitude * u, cy, radius, intensity};
    case GestureKind::swipe_right: return {cx - amplitude + 2 * amplitude * u, cy, radius, intensity};
    case GestureKind::swipe_up: return {cx, cy + amplitude - 2 * amplitude * u, radius, intensity};
    case GestureKind::swipe_down: return {cx, cy - amplitude + 2 * amplitude * u, radius, intensity};
    case GestureKind::circle_cw:
    case GestureKind::circle_ccw: {
        const double dir = kind == GestureKind::circle_cw ? 1.0 : -1.0;
        const double a = phase + dir * 1.7 * pi * u;
        const double r = 0.75 * amplitude;
        return {cx + r * std::cos(a), cy + r * std::sin(a), radius, intensity};
    }
    case GestureKind::push:
        return {cx, cy, radius * (0.6 + 0.8 * u), intensity * (0.6 + 0.4 * u)};
    case GestureKind::tap: {
        const double bump = 1.0 - std::abs(2.0 * u - 1.0);
        return {cx, cy, radius * (0.6 + 0.8 * bump), intensity * (0.6 + 0.4 * bump)};
    }
    }
    return {cx, cy, radius, intensity};
}

void add_blob(std::span<double> frame, std::size_t H, std::size_t W, const Blob& b) {
    const double sigma = 0.6 * b.radius;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t y = 0; y < H; ++y) {
        const double dy = static_cast<double>(y) - b.y;
        for (std::size_t x = 0; x < W; ++x) {
            const double dx = static_cast<double>(x) - b.x;
            frame[y * W + x] += b.intensity * std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
}

struct Sampler {
    std::array<std::size_t, 4> index;
    std::array<double, 4> weight;
};

/// Bilinear taps per output pixel; taps outside the frame get zero weight.
std::vector<Sampler> spatial_map(const AugmentationParams& p, std::size_t H, std::size_t W, std::size_t h,
                                 std::size_t w) {
    const double theta = p.rotation_degrees * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cy = (static_cast<double>(H) - 1.0) / 2.0, cx = (static_cast<double>(W) - 1.0) / 2.0;
    std::vector<Sampler> map(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double dy = static_cast<double>(p.crop_y + y) - cy;
            const double dx = static_cast<double>(p.crop_x + x) - cx;
            const double sx = cx + (c * dx + s * dy) / p.spatial_scale;
            const double sy = cy + (-s * dx + c * dy) / p.spatial_scale;
            const double fx = std::floor(sx), fy = std::floor(sy);
            const double ax = sx - fx, ay = sy - fy;
            Sampler& m = map[y * w + x];
            const std::array<std::pair<double, double>, 4> taps{
                {{fy, fx}, {fy, fx + 1}, {fy + 1, fx}, {fy + 1, fx + 1}}};
            const std::array<double, 4> wts{(1 - ay) * (1 - ax), (1 - ay) * ax, ay * (1 - ax), ay * ax};
            for (std::size_t k = 0; k < 4; ++k) {
                const auto [ty, tx] = taps[k];
                const bool inside = ty >= 0 && tx >= 0 && ty < static_cast<double>(H) && tx < static_cast<double>(W);
                m.index[k] = inside ? static_cast<std::size_t>(ty) * W + static_cast<std::size_t>(tx) : 0;
                m.weight[k] = inside ? wts[k] : 0.0;
            }
        }
    }
    return map;
}

/// Segment index per output frame (-1 for background) under the temporal warp.
std::vector<long> temporal_sources(const AugmentationParams& p, std::size_t T, std::vector<long>& segment_of,
                                   const std::vector<FrameAnnotation>& segments) {
    std::vector<long> source_segment(T, -1);
    for (std::size_t i = 0; i < segments.size(); ++i)
        for (std::size_t t = segments[i].start_frame; t <= segments[i].end_frame; ++t) source_segment[t] = static_cast<long>(i);
    std::vector<long> frame_index(T);
    segment_of.assign(T, -1);
    for (std::size_t v = 0; v < T; ++v) {
        const long src = std::lround(warp_source_time(p, T, static_cast<double>(v)));
        frame_index[v] = std::clamp<long>(src, 0, static_cast<long>(T) - 1);
        if (src >= 0 && src < static_cast<long>(T)) segment_of[v] = source_segment[static_cast<std::size_t>(src)];
    }
    return frame_index;
}

/// Runs of equal segment index become the new annotations. Returns false when
/// a segment vanished or now touches the clip boundary.
bool remap_segments(const std::vector<long>& segment_of, const std::vector<FrameAnnotation>& segments,
                    std::vector<FrameAnnotation>& out) {
    out.clear();
    const std::size_t T = segment_of.size();
    std::vector<bool> seen(segments.size(), false);
    bool intact = true;
    for (std::size_t v = 0; v < T;) {
        const long id = segment_of[v];
        std::size_t e = v;
        while (e + 1 < T && segment_of[e + 1] == id) ++e;
        if (id >= 0) {
            FrameAnnotation a = segments[static_cast<std::size_t>(id)];
            if (seen[static_cast<std::size_t>(id)]) intact = false;
            seen[static_cast<std::size_t>(id)] = true;
            const bool touched_before = a.start_frame == 0 || a.end_frame == T - 1;
            if (!touched_before && (v == 0 || e == T - 1)) intact = false;
            a.start_frame = v;
            a.end_frame = e;
            out.push_back(std::move(a));
        }
        v = e + 1;
    }
    for (bool s : seen) intact = intact && s;
    return intact;
}

std::vector<FrameAnnotation> sorted_segments(std::vector<FrameAnnotation> a) {
    std::sort(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.start_frame < y.start_frame; });
    return a;
}

} // namespace

std::vector<GestureSpec> default_gestures(std::size_t count) {
    static const std::array<std::pair<GestureKind, const char*>, 8> kinds{{
        {GestureKind::swipe_left, "swipe_left"},
        {GestureKind::swipe_right, "swipe_right"},
        {GestureKind::swipe_up, "swipe_up"},
        {GestureKind::swipe_down, "swipe_down"},
        {GestureKind::circle_cw, "circle_cw"},
        {GestureKind::circle_ccw, "circle_ccw"},
        {GestureKind::push, "push"},
        {GestureKind::tap, "tap"},
    }};
    if (count == 0 || count > kinds.size()) {
        throw ConfigError("the generator knows 1 to " + std::to_string(kinds.size()) + " gesture classes, asked for " +
                          std::to_string(count));
    }
    std::vector<GestureSpec> specs;
    for (std::size_t i = 0; i < count; ++i) {
        GestureSpec s;
        s.class_id = static_cast<int>(i + 1);
        s.kind = kinds[i].first;
        s.name = kinds[i].second;
        specs.push_back(s);
    }
    return specs;
}

std::string to_string(Modality m) {
    switch (m) {
    case Modality::depth: return "depth";
    case Modality::color: return "color";
    case Modality::flow: return "flow";
    }
    return "?";
}

Modality parse_modality(std::string_view name) {
    if (name == "depth") return Modality::depth;
    if (name == "color") return Modality::color;
    if (name == "flow") return Modality::flow;
    throw ConfigError("unknown modality '" + std::string(name) + "' (expected depth, color or flow)");
}

std::size_t channel_count(Modality m) {
    switch (m) {
    case Modality::depth: return 1;
    case Modality::color: return 3;
    case Modality::flow: return 2;
    }
    return 0;
}

void GeneratorConfig::validate() const {
    if (num_classes == 0 || num_classes > 8) throw ConfigError("generator: num_classes must be 1..8");
    if (train_per_class == 0 || test_per_class == 0) throw ConfigError("generator: videos per class must be positive");
    if (frames < 2 || height < 8 || width < 8) throw ConfigError("generator: video is too small");
    if (max_train_gestures == 0) throw ConfigError("generator: max_train_gestures must be positive");
    if (distractor_rate < 0.0 || distractor_rate > 1.0) throw ConfigError("generator: distractor_rate must lie in [0, 1]");
    if (noise < 0.0) throw ConfigError("generator: noise must be non-negative");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index);
}

VideoSample generate_video(const GeneratorConfig& config, const std::vector<GestureSpec>& specs,
                           const std::vector<int>& classes, std::uint64_t seed, std::string id) {
    const std::size_t T = config.frames, H = config.height, W = config.width, k = classes.size();
    Rng rng(seed);
    std::vector<const GestureSpec*> chosen;
    std::size_t min_total = (k + 1) * config.min_gap;
    for (int c : classes) {
        const auto it = std::find_if(specs.begin(), specs.end(), [c](const auto& s) { return s.class_id == c; });
        if (it == specs.end()) throw ConfigError("no gesture spec for class " + std::to_string(c));
        chosen.push_back(&*it);
        min_total += it->min_frames;
    }
    if (min_total > T) {
        throw ConfigError("cannot pack " + std::to_string(k) + " gestures into " + std::to_string(T) +
                          " frames: they need at least " + std::to_string(min_total));
    }

    std::vector<std::size_t> durations(k);
    std::size_t spare = T - min_total;
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
        const std::size_t extra = uniform_int(rng, 0, std::min(chosen[i]->max_frames - chosen[i]->min_frames, spare));
        durations[i] = chosen[i]->min_frames + extra;
        spare -= extra;
    }
    std::vector<std::size_t> gaps(k + 1, config.min_gap);
    for (std::size_t s = 0; s < spare; ++s) ++gaps[uniform_int(rng, 0, k)];

    VideoSample v;
    v.id = std::move(id);
    v.seed = seed;
    v.frames = Tensor({1, T, H, W});
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> texture(H * W);
    for (double& px : texture) px = 0.1 + config.noise * noise(rng);
    for (std::size_t t = 0; t < T; ++t) std::copy(texture.begin(), texture.end(), v.frames.data().begin() + t * H * W);

    const double cy = (static_cast<double>(H) - 1.0) / 2.0, cx = (static_cast<double>(W) - 1.0) / 2.0;
    const double scale = static_cast<double>(std::min(H, W)) / 48.0;
    std::size_t pos = 0;
    std::vector<std::pair<std::size_t, std::size_t>> background;
    for (std::size_t i = 0; i < k; ++i) {
        background.emplace_back(pos, pos + gaps[i]);
        pos += gaps[i];
        const GestureSpec& spec = *chosen[i];
        FrameAnnotation a{v.id, spec.class_id, pos, pos + durations[i] - 1};
        const double ox = cx + uniform(rng, -3, 3) * scale, oy = cy + uniform(rng, -3, 3) * scale;
        const double amplitude = uniform(rng, 8, 10) * scale;
        const double radius = spec.radius * uniform(rng, 0.875, 1.125) * scale;
        const double intensity = spec.intensity * uniform(rng, 0.8, 1.0);
        const double phase = uniform(rng, 0, 2 * std::numbers::pi);
        for (std::size_t t = a.start_frame; t <= a.end_frame; ++t) {
            const double u = static_cast<double>(t - a.start_frame) / static_cast<double>(a.end_frame - a.start_frame);
            add_blob(v.frames.data().subspan(t * H * W, H * W), H, W,
                     gesture_blob(spec.kind, u, ox, oy, amplitude, radius, intensity, phase));
        }
        v.annotations.push_back(a);
        pos += durations[i];
    }
    background.emplace_back(pos, pos + gaps[k]);

    for (const auto& [begin, end] : background) {
        const std::size_t gap = end - begin;
        if (gap < 6 || uniform(rng, 0, 1) >= config.distractor_rate) continue;
        const std::size_t len = uniform_int(rng, 3, std::min<std::size_t>(10, gap - 2));
        const std::size_t start = uniform_int(rng, begin + 1, end - 1 - len);
        double x = uniform(rng, cx - 12 * scale, cx + 12 * scale), y = uniform(rng, cy - 12 * scale, cy + 12 * scale);
        const double radius = uniform(rng, 2.5, 3.5) * scale, intensity = uniform(rng, 0.3, 0.6);
        std::normal_distribution<double> step(0.0, 1.2 * scale);
        for (std::size_t t = start; t < start + len; ++t) {
            add_blob(v.frames.data().subspan(t * H * W, H * W), H, W, {x, y, radius, intensity});
            x = std::clamp(x + step(rng), 6.0 * scale, static_cast<double>(W) - 6.0 * scale);
            y = std::clamp(y + step(rng), 6.0 * scale, static_cast<double>(H) - 6.0 * scale);
        }
    }
    return v;
}

Corpus generate(const GeneratorConfig& config, const std::vector<GestureSpec>& specs) {
    config.validate();
    if (specs.size() < config.num_classes) throw ConfigError("generator: fewer gesture specs than classes");
    const std::size_t N = config.num_classes;
    Corpus corpus;
    auto fits = [&](std::size_t k) {
        std::size_t need = (k + 1) * config.min_gap;
        for (std::size_t i = 0; i < k; ++i) need += specs[i % N].min_frames;
        return need <= config.frames;
    };
    if (!fits(1)) throw ConfigError("generator: a single gesture does not fit into " + std::to_string(config.frames) + " frames");

    const std::uint64_t train_seed = derive_seed(config.seed, 1), test_seed = derive_seed(config.seed, 2);
    const std::size_t n_train = N * config.train_per_class;
    for (std::size_t i = 0; i < n_train; ++i) {
        const std::uint64_t seed = derive_seed(train_seed, 0, i);
        Rng rng(derive_seed(seed, 1));
        std::size_t k = uniform_int(rng, 1, config.max_train_gestures);
        while (k > 1 && !fits(k)) --k;
        std::vector<int> classes{specs[i % N].class_id};
        for (std::size_t j = 1; j < k; ++j) classes.push_back(specs[uniform_int(rng, 0, N - 1)].class_id);
        std::shuffle(classes.begin(), classes.end(), rng);
        char id[32];
        std::snprintf(id, sizeof id, "train_%05zu", i);
        corpus.train.push_back(generate_video(config, specs, classes, seed, id));
    }
    const std::size_t n_test = N * config.test_per_class;
    for (std::size_t i = 0; i < n_test; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "test_%05zu", i);
        corpus.test.push_back(generate_video(config, specs, {specs[i % N].class_id}, derive_seed(test_seed, 0, i), id));
    }
    return corpus;
}

VideoSample derive_modality(const VideoSample& depth, Modality target) {
    if (depth.modality != Modality::depth || depth.frames.rank() != 4 || depth.frames.extent(0) != 1) {
        throw std::invalid_argument("derive_modality needs a 1-channel depth video, got " + to_string(depth.modality) +
                                    " " + shape_string(depth.frames.shape()));
    }
    if (target == Modality::depth) return depth;
    const std::size_t T = depth.frames.extent(1), H = depth.frames.extent(2), W = depth.frames.extent(3), HW = H * W;
    VideoSample out = depth;
    out.modality = target;
    const auto src = depth.frames.data();
    if (target == Modality::color) {
        out.frames = Tensor({3, T, H, W});
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < T * HW; ++i) out.frames[c * T * HW + i] = kColorGains[c] * src[i];
        return out;
    }

    std::vector<double> background(HW);
    for (std::size_t p = 0; p < HW; ++p) {
        double m = src[p];
        for (std::size_t t = 1; t < T; ++t) m = std::min(m, src[t * HW + p]);
        background[p] = m;
    }
    out.frames = Tensor({2, T, H, W});
    double prev_x = 0, prev_y = 0;
    bool prev_valid = false;
    std::vector<double> fg(HW);
    for (std::size_t t = 0; t < T; ++t) {
        double mass = 0, mx = 0, my = 0;
        for (std::size_t p = 0; p < HW; ++p) {
            fg[p] = src[t * HW + p] - background[p];
            mass += fg[p];
            mx += fg[p] * static_cast<double>(p % W);
            my += fg[p] * static_cast<double>(p / W);
        }
        const bool valid = mass > 1e-9;
        if (valid && prev_valid) {
            const double dx = mx / mass - prev_x, dy = my / mass - prev_y;
            for (std::size_t p = 0; p < HW; ++p) {
                out.frames[t * HW + p] = fg[p] * dx;
                out.frames[(T + t) * HW + p] = fg[p] * dy;
            }
        }
        if (valid) {
            prev_x = mx / mass;
            prev_y = my / mass;
        }
        prev_valid = valid;
    }
    return out;
}

VideoSample subsample_nearest(const VideoSample& video, std::size_t target_frames) {
    if (target_frames == 0) throw std::invalid_argument("subsample_nearest: target length must be positive");
    const std::size_t C = video.frames.extent(0), T = video.frames.extent(1);
    const std::size_t HW = video.frames.extent(2) * video.frames.extent(3);
    auto map = [&](std::size_t i, std::size_t from, std::size_t to) -> std::size_t {
        if (to <= 1 || from <= 1) return 0;
        return static_cast<std::size_t>(
            std::llround(static_cast<double>(i * (from - 1)) / static_cast<double>(to - 1)));
    };
    VideoSample out = video;
    out.frames = Tensor({C, target_frames, video.frames.extent(2), video.frames.extent(3)});
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < target_frames; ++i) {
            const std::size_t src = std::min(map(i, T, target_frames), T - 1);
            std::copy_n(video.frames.data().begin() + (c * T + src) * HW, HW,
                        out.frames.data().begin() + (c * target_frames + i) * HW);
        }
    }
    out.annotations.clear();
    long last_end = -1;
    for (const auto& a : sorted_segments(video.annotations)) {
        const auto start = std::max<long>(static_cast<long>(map(a.start_frame, target_frames, T)), last_end + 1);
        const auto end = std::max<long>(static_cast<long>(map(a.end_frame, target_frames, T)), start);
        if (end >= static_cast<long>(target_frames)) continue;
        FrameAnnotation b = a;
        b.start_frame = static_cast<std::size_t>(start);
        b.end_frame = static_cast<std::size_t>(end);
        out.annotations.push_back(std::move(b));
        last_end = end;
    }
    return out;
}

void AugmentationConfig::validate() const {
    if (rotation_degrees < 0 || spatial_scale < 0 || spatial_scale >= 1 || temporal_scale < 0 || temporal_scale >= 1 ||
        temporal_shift < 0) {
        throw ConfigError("augmentation: ranges must be non-negative and scale ranges below 1");
    }
    if (crop_height == 0 || crop_width == 0) throw ConfigError("augmentation: crop size must be positive");
}

double warp_source_time(const AugmentationParams& p, std::size_t frames, double v) {
    if (frames <= 1) return v - p.temporal_shift;
    const double L = static_cast<double>(frames - 1);
    const double c = L / 2.0;
    const double y = c + (v - p.temporal_shift - c) / p.temporal_scale;
    const double k = p.knot * L;
    const double a = L / (k + p.slope_ratio * (L - k));
    const double b = p.slope_ratio * a;
    return y <= a * k ? y / a : k + (y - a * k) / b;
}

AugmentationParams sample_augmentation(const AugmentationConfig& config, const VideoSample& video, Rng& rng) {
    config.validate();
    const std::size_t H = video.frames.extent(2), W = video.frames.extent(3);
    if (config.crop_height > H || config.crop_width > W) {
        throw ConfigError("augmentation: crop " + std::to_string(config.crop_height) + "x" +
                          std::to_string(config.crop_width) + " exceeds frame " + std::to_string(H) + "x" +
                          std::to_string(W));
    }
    AugmentationParams p;
    p.rotation_degrees = uniform(rng, -config.rotation_degrees, config.rotation_degrees);
    p.spatial_scale = uniform(rng, 1 - config.spatial_scale, 1 + config.spatial_scale);
    p.crop_y = uniform_int(rng, 0, H - config.crop_height);
    p.crop_x = uniform_int(rng, 0, W - config.crop_width);
    p.temporal_scale = uniform(rng, 1 - config.temporal_scale, 1 + config.temporal_scale);
    if (config.nonlinear_warp) {
        p.knot = uniform(rng, 0.3, 0.7);
        p.slope_ratio = uniform(rng, 0.8, 1.25);
    }
    p.temporal_shift = static_cast<int>(uniform_int(rng, 0, 2 * static_cast<std::size_t>(config.temporal_shift))) -
                       config.temporal_shift;
    return p;
}

VideoSample apply_augmentation(const VideoSample& video, const AugmentationParams& p, std::size_t crop_height,
                               std::size_t crop_width) {
    const std::size_t C = video.frames.extent(0), T = video.frames.extent(1);
    const std::size_t H = video.frames.extent(2), W = video.frames.extent(3);
    if (crop_height > H || crop_width > W || p.crop_y + crop_height > H || p.crop_x + crop_width > W) {
        throw ConfigError("augmentation: crop " + std::to_string(crop_height) + "x" + std::to_string(crop_width) +
                          " at (" + std::to_string(p.crop_y) + ", " + std::to_string(p.crop_x) +
                          ") does not fit a " + std::to_string(H) + "x" + std::to_string(W) + " frame");
    }
    const auto segments = sorted_segments(video.annotations);
    std::vector<long> segment_of;
    const std::vector<long> source = temporal_sources(p, T, segment_of, segments);
    VideoSample out = video;
    remap_segments(segment_of, segments, out.annotations);

    const auto map = spatial_map(p, H, W, crop_height, crop_width);
    const std::size_t hw = crop_height * crop_width;
    out.frames = Tensor({C, T, crop_height, crop_width});
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
            const double* in = video.frames.data().data() + (c * T + static_cast<std::size_t>(source[t])) * H * W;
            double* o = out.frames.data().data() + (c * T + t) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                const Sampler& m = map[i];
                o[i] = m.weight[0] * in[m.index[0]] + m.weight[1] * in[m.index[1]] + m.weight[2] * in[m.index[2]] +
                       m.weight[3] * in[m.index[3]];
            }
        }
    }
    return out;
}

VideoSample augment(const VideoSample& video, const AugmentationConfig& config, Rng& rng) {
    AugmentationParams p = sample_augmentation(config, video, rng);
    const auto segments = sorted_segments(video.annotations);
    const std::size_t T = video.frames.extent(1);
    std::vector<long> segment_of;
    std::vector<FrameAnnotation> remapped;
    bool ok = false;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
        if (attempt > 0) {
            const AugmentationParams again = sample_augmentation(config, video, rng);
            p.temporal_scale = again.temporal_scale;
            p.knot = again.knot;
            p.slope_ratio = again.slope_ratio;
            p.temporal_shift = again.temporal_shift;
        }
        temporal_sources(p, T, segment_of, segments);
        ok = remap_segments(segment_of, segments, remapped);
    }
    if (!ok) {
        p.temporal_scale = 1.0;
        p.knot = 0.5;
        p.slope_ratio = 1.0;
        p.temporal_shift = 0;
    }
    return apply_augmentation(video, p, config.crop_height, config.crop_width);
}

VideoSample center_crop(const VideoSample& video, std::size_t height, std::size_t width) {
    const std::size_t H = video.frames.extent(2), W = video.frames.extent(3);
    if (height > H || width > W) {
        throw ConfigError("center crop " + std::to_string(height) + "x" + std::to_string(width) + " exceeds frame " +
                          std::to_string(H) + "x" + std::to_string(W));
    }
    AugmentationParams p;
    p.crop_y = (H - height) / 2;
    p.crop_x = (W - width) / 2;
    return apply_augmentation(video, p, height, width);
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
    j = nlohmann::json{{"seed", c.seed},
                       {"num_classes", c.num_classes},
                       {"train_per_class", c.train_per_class},
                       {"test_per_class", c.test_per_class},
                       {"frames", c.frames},
                       {"height", c.height},
                       {"width", c.width},
                       {"max_train_gestures", c.max_train_gestures},
                       {"min_gap", c.min_gap},
                       {"distractor_rate", c.distractor_rate},
                       {"noise", c.noise}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
    constexpr std::string_view s = "generator";
    check_keys(j, s,
               {"seed", "num_classes", "train_per_class", "test_per_class", "frames", "height", "width",
                "max_train_gestures", "min_gap", "distractor_rate", "noise"});
    read_key(j, s, "seed", c.seed);
    read_key(j, s, "num_classes", c.num_classes);
    read_key(j, s, "train_per_class", c.train_per_class);
    read_key(j, s, "test_per_class", c.test_per_class);
    read_key(j, s, "frames", c.frames);
    read_key(j, s, "height", c.height);
    read_key(j, s, "width", c.width);
    read_key(j, s, "max_train_gestures", c.max_train_gestures);
    read_key(j, s, "min_gap", c.min_gap);
    read_key(j, s, "distractor_rate", c.distractor_rate);
    read_key(j, s, "noise", c.noise);
}

void to_json(nlohmann::json& j, const AugmentationConfig& c) {
    j = nlohmann::json{{"rotation_degrees", c.rotation_degrees},
                       {"spatial_scale", c.spatial_scale},
                       {"temporal_scale", c.temporal_scale},
                       {"nonlinear_warp", c.nonlinear_warp},
                       {"temporal_shift", c.temporal_shift},
                       {"crop_height", c.crop_height},
                       {"crop_width", c.crop_width}};
}

void from_json(const nlohmann::json& j, AugmentationConfig& c) {
    constexpr std::string_view s = "augmentation";
    check_keys(j, s,
               {"rotation_degrees", "spatial_scale", "temporal_scale", "nonlinear_warp", "temporal_shift",
                "crop_height", "crop_width"});
    read_key(j, s, "rotation_degrees", c.rotation_degrees);
    read_key(j, s, "spatial_scale", c.spatial_scale);
    read_key(j, s, "temporal_scale", c.temporal_scale);
    read_key(j, s, "nonlinear_warp", c.nonlinear_warp);
    read_key(j, s, "temporal_shift", c.temporal_shift);
    read_key(j, s, "crop_height", c.crop_height);
    read_key(j, s, "crop_width", c.crop_width);
}

} // namespace gpm
