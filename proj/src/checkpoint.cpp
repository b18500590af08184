// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "gpm/binary_io.hpp"
#include "gpm/error.hpp"

namespace gpm {
namespace {

std::string bn_name(std::size_t block) { return "conv" + std::to_string(block + 1) + ".bn"; }

void write_doubles(io::Writer& w, const std::vector<double>& v) {
    w.u64(v.size());
    for (double x : v) w.f64(x);
}

std::vector<double> read_doubles(io::Reader& r) {
    const std::uint64_t n = r.u64();
    if (n > (1u << 24)) r.fail("implausible statistics length " + std::to_string(n));
    std::vector<double> v(n);
    for (double& x : v) x = r.f64();
    return v;
}

} // namespace

Checkpoint capture(const Model& model, const SgdOptimizer* optimizer) {
    Checkpoint c;
    c.config = model.config();
    for (const Parameter* p : model.parameters()) c.parameters.push_back({p->name, p->value.reshaped(p->value.shape())});
    const auto& blocks = model.conv_blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) c.batchnorm.push_back({bn_name(i), blocks[i].running});
    if (optimizer) {
        c.optimizer = OptimizerSnapshot{optimizer->config(), optimizer->epoch(), optimizer->steps(),
                                        optimizer->momentum_buffers()};
    }
    return c;
}

Model restore_model(const Checkpoint& ckpt) {
    try {
        ckpt.config.validate();
    } catch (const ConfigError& e) {
        throw DataError(std::string("checkpoint config is invalid: ") + e.what());
    }
    Model model(ckpt.config, 0);
    std::map<std::string, const Tensor*> stored;
    for (const auto& p : ckpt.parameters) stored[p.name] = &p.value;
    const auto params = model.parameters();
    if (stored.size() != params.size()) {
        throw DataError("checkpoint holds " + std::to_string(stored.size()) + " parameters, config expects " +
                        std::to_string(params.size()));
    }
    for (Parameter* p : params) {
        const auto it = stored.find(p->name);
        if (it == stored.end()) throw DataError("checkpoint is missing parameter " + p->name);
        if (it->second->shape() != p->value.shape()) {
            throw DataError("checkpoint parameter " + p->name + " has shape " + shape_string(it->second->shape()) +
                            ", config expects " + shape_string(p->value.shape()));
        }
        p->value = it->second->reshaped(p->value.shape());
    }
    auto& blocks = model.conv_blocks();
    if (ckpt.batchnorm.size() != blocks.size()) {
        throw DataError("checkpoint holds " + std::to_string(ckpt.batchnorm.size()) +
                        " batch-norm records, config expects " + std::to_string(blocks.size()));
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const NamedStats& s = ckpt.batchnorm[i];
        const std::size_t C = blocks[i].running.mean.size();
        if (s.name != bn_name(i) || s.stats.mean.size() != C || s.stats.variance.size() != C) {
            throw DataError("checkpoint batch-norm record " + s.name + " does not match " + bn_name(i) + " with " +
                            std::to_string(C) + " channels");
        }
        blocks[i].running = s.stats;
    }
    return model;
}

void restore_optimizer(const Checkpoint& ckpt, Model& model, SgdOptimizer& optimizer) {
    if (!ckpt.optimizer) throw DataError("checkpoint carries no optimizer state");
    const auto params = model.parameters();
    try {
        optimizer.restore(ckpt.optimizer->config, ckpt.optimizer->epoch, ckpt.optimizer->steps,
                          ckpt.optimizer->velocity, params);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("checkpoint optimizer state: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write checkpoint " + path.string());
    io::Writer w(os);
    w.bytes(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.string(nlohmann::json(ckpt.config).dump());
    w.u32(static_cast<std::uint32_t>(ckpt.parameters.size()));
    for (const auto& p : ckpt.parameters) {
        w.string(p.name);
        w.tensor(p.value);
    }
    w.u32(static_cast<std::uint32_t>(ckpt.batchnorm.size()));
    for (const auto& s : ckpt.batchnorm) {
        w.string(s.name);
        write_doubles(w, s.stats.mean);
        write_doubles(w, s.stats.variance);
    }
    w.u8(ckpt.optimizer ? 1 : 0);
    if (ckpt.optimizer) {
        const SgdConfig& c = ckpt.optimizer->config;
        for (double v : {c.learning_rate, c.momentum, c.weight_decay, c.clip_low, c.clip_high, c.decay_factor}) w.f64(v);
        w.i64(c.decay_interval_epochs);
        w.i64(ckpt.optimizer->epoch);
        w.u64(ckpt.optimizer->steps);
        w.u32(static_cast<std::uint32_t>(ckpt.optimizer->velocity.size()));
        for (const Tensor& v : ckpt.optimizer->velocity) w.tensor(v);
    }
    if (!os) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint " + path.string());
    io::Reader r(is, path.string());
    std::string magic(kCheckpointMagic.size(), '\0');
    is.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (magic != kCheckpointMagic) r.fail("not a checkpoint");
    if (const auto v = r.u32(); v != kCheckpointVersion) {
        r.fail("checkpoint format version " + std::to_string(v) + " is not supported (expected " +
               std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint c;
    try {
        nlohmann::json::parse(r.string()).get_to(c.config);
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("malformed model config: ") + e.what());
    } catch (const ConfigError& e) {
        r.fail(std::string("malformed model config: ") + e.what());
    }
    const std::uint32_t n_params = r.u32();
    for (std::uint32_t i = 0; i < n_params; ++i) {
        NamedTensor p;
        p.name = r.string();
        p.value = r.tensor();
        c.parameters.push_back(std::move(p));
    }
    const std::uint32_t n_bn = r.u32();
    for (std::uint32_t i = 0; i < n_bn; ++i) {
        NamedStats s;
        s.name = r.string();
        s.stats.mean = read_doubles(r);
        s.stats.variance = read_doubles(r);
        c.batchnorm.push_back(std::move(s));
    }
    if (r.u8() != 0) {
        OptimizerSnapshot o;
        o.config.learning_rate = r.f64();
        o.config.momentum = r.f64();
        o.config.weight_decay = r.f64();
        o.config.clip_low = r.f64();
        o.config.clip_high = r.f64();
        o.config.decay_factor = r.f64();
        o.config.decay_interval_epochs = static_cast<int>(r.i64());
        o.epoch = static_cast<int>(r.i64());
        o.steps = r.u64();
        const std::uint32_t n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) o.velocity.push_back(r.tensor());
        c.optimizer = std::move(o);
    }
    if (is.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes after checkpoint payload");
    return c;
}

void require_class_count(const Checkpoint& ckpt, std::size_t num_classes) {
    if (ckpt.config.num_classes != num_classes) {
        throw DataError("checkpoint was trained for " + std::to_string(ckpt.config.num_classes) +
                        " gesture classes but the configuration expects " + std::to_string(num_classes));
    }
}

Checkpoint inflate_weights(const Checkpoint& source, std::size_t target_channels) {
    if (source.config.in_channels != 1) {
        throw ConfigError("weight inflation needs a single-channel source, got " +
                          std::to_string(source.config.in_channels) + " input channels");
    }
    if (target_channels < 2 || target_channels > 3) {
        throw ConfigError("weight inflation targets 2 or 3 channels, got " + std::to_string(target_channels));
    }
    Checkpoint out = source;
    out.optimizer.reset();
    out.config.in_channels = target_channels;
    auto it = std::find_if(out.parameters.begin(), out.parameters.end(),
                           [](const NamedTensor& p) { return p.name == "conv1.kernel"; });
    if (it == out.parameters.end()) throw DataError("checkpoint has no conv1.kernel to inflate");
    const Tensor& k = it->value;
    const std::size_t O = k.extent(0), S = k.size() / O;
    Tensor inflated({O, target_channels, k.extent(2), k.extent(3), k.extent(4)});
    const double scale = 1.0 / static_cast<double>(target_channels);
    for (std::size_t o = 0; o < O; ++o)
        for (std::size_t c = 0; c < target_channels; ++c)
            for (std::size_t s = 0; s < S; ++s) inflated[(o * target_channels + c) * S + s] = k[o * S + s] * scale;
    it->value = std::move(inflated);
    return out;
}

} // namespace gpm
