// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gpm/checkpoint.hpp"
#include "gpm/error.hpp"
#include "gpm/pipeline.hpp"
#include "gpm/run_config.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Options {
    std::optional<std::string> config;
    gpm::Overrides overrides;
    std::optional<std::string> out;
    std::optional<std::string> corpus;
    std::optional<std::string> checkpoint;
    std::string input = "-";
    bool force = false;
    bool dump_inputs = false;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--seed", o.overrides.seed, "Run seed");
    cmd->add_option("--modality", o.overrides.modality, "depth, color, flow, a comma list, or all");
    cmd->add_option("--epsilon", o.overrides.epsilon, "Online trigger threshold");
    cmd->add_option("--tau", o.overrides.tau, "Consensus ratio in [0, 1], or 'none' for global voting");
    cmd->add_option("--out", o.out, "Output directory");
}

std::filesystem::path pick(const std::optional<std::string>& flag, const std::filesystem::path& fallback) {
    return flag ? std::filesystem::path(*flag) : fallback;
}

gpm::RunConfig load(const Options& o) {
    std::optional<std::filesystem::path> path;
    if (o.config) path = *o.config;
    return gpm::load_run_config(path, o.overrides);
}

int run(CLI::App& app, const Options& o) {
    if (app.got_subcommand("generate")) {
        const auto c = load(o);
        gpm::cmd_generate(c, pick(o.out, c.paths.corpus), o.force);
        return kOk;
    }
    if (app.got_subcommand("train")) {
        const auto c = load(o);
        gpm::cmd_train(c, pick(o.corpus, c.paths.corpus), pick(o.out, c.paths.checkpoints), std::cerr);
        return kOk;
    }
    if (app.got_subcommand("eval")) {
        const auto c = load(o);
        const std::filesystem::path ckpts = pick(o.checkpoint, c.paths.checkpoints);
        const auto report = gpm::cmd_eval(c, pick(o.corpus, c.paths.corpus), ckpts,
                                          pick(o.out, c.paths.reports), o.dump_inputs);
        for (const auto& m : report.modalities)
            std::printf("%s accuracy %.4f mean_nttd %.4f roc_auc %.4f\n", m.modality.c_str(), m.accuracy,
                        m.mean_nttd, m.roc.auc);
        return kOk;
    }
    if (app.got_subcommand("stream")) {
        const auto c = load(o);
        if (c.modalities.size() != 1) throw gpm::ConfigError("stream takes exactly one modality");
        const std::filesystem::path ckpt =
            o.checkpoint ? std::filesystem::path(*o.checkpoint)
                         : c.paths.checkpoints / (gpm::to_string(c.modalities[0]) + ".ckpt");
        const gpm::Model model = gpm::restore_model(gpm::load_checkpoint(ckpt));
        if (model.config().in_channels != gpm::channel_count(c.modalities[0])) {
            throw gpm::DataError(ckpt.string() + " does not take " + gpm::to_string(c.modalities[0]) + " input");
        }
        if (o.input == "-") {
            gpm::cmd_stream(model, c.detector, std::cin, std::cout);
        } else {
            std::ifstream is(o.input, std::ios::binary);
            if (!is) throw gpm::DataError("cannot open " + o.input);
            gpm::cmd_stream(model, c.detector, is, std::cout);
        }
        return kOk;
    }
    return kOther;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Early gesture detection with a gesture progression head"};
    app.require_subcommand(1);
    Options o;

    auto* generate = app.add_subcommand("generate", "Write the synthetic corpus");
    add_common(generate, o);
    generate->add_flag("--force", o.force, "Replace an existing corpus");

    auto* train = app.add_subcommand("train", "Train one checkpoint per modality");
    add_common(train, o);
    train->add_option("--corpus", o.corpus, "Corpus directory");

    auto* eval = app.add_subcommand("eval", "Score the test split and write reports");
    add_common(eval, o);
    eval->add_option("--corpus", o.corpus, "Corpus directory");
    eval->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
    eval->add_flag("--dump-inputs", o.dump_inputs, "Also write the preprocessed test clips");

    auto* stream = app.add_subcommand("stream", "Run the online detector over a frame stream");
    add_common(stream, o);
    stream->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
    stream->add_option("--input", o.input, "Frame-major tensor file, or - for stdin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        return run(app, o);
    } catch (const gpm::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const gpm::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const gpm::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOther;
    }
}
