// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "gpm/binary_io.hpp"
#include "gpm/checkpoint.hpp"
#include "gpm/corpus_io.hpp"
#include "gpm/error.hpp"
#include "gpm/objectives.hpp"
#include "gpm/trainer.hpp"

namespace gpm {
namespace fs = std::filesystem;
namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path.string());
    return os;
}

fs::path checkpoint_path(const fs::path& dir, Modality m) { return dir / (to_string(m) + ".ckpt"); }

ModelConfig model_for(const RunConfig& config, const GeneratorConfig& corpus, Modality m) {
    ModelConfig mc = config.model;
    mc.num_classes = corpus.num_classes;
    mc.in_channels = channel_count(m);
    if (mc.height > corpus.height || mc.width > corpus.width) {
        throw DataError("corpus frames are " + std::to_string(corpus.height) + "x" + std::to_string(corpus.width) +
                        " but the model crops " + std::to_string(mc.height) + "x" + std::to_string(mc.width));
    }
    mc.validate();
    return mc;
}

void write_train_log(const fs::path& path, const std::vector<EpochLog>& log) {
    auto os = open_output(path);
    os << "epoch,learning_rate,gpm_loss,class_loss,loss,class_head_grad_norm\n";
    for (const EpochLog& e : log) {
        os << e.epoch << ',' << fmt(e.learning_rate) << ',' << fmt(e.gpm_loss) << ',' << fmt(e.class_loss) << ','
           << fmt(e.loss) << ',' << fmt(e.class_head_grad_norm) << '\n';
    }
}

Model load_for(const fs::path& dir, Modality m, std::size_t num_classes) {
    const fs::path path = checkpoint_path(dir, m);
    if (!fs::exists(path)) throw DataError("no checkpoint for modality " + to_string(m) + " at " + path.string());
    const Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.config.in_channels != channel_count(m)) {
        throw DataError(path.string() + " expects " + std::to_string(ckpt.config.in_channels) +
                        " input channels but modality " + to_string(m) + " has " +
                        std::to_string(channel_count(m)));
    }
    require_class_count(ckpt, num_classes);
    return restore_model(ckpt);
}

std::vector<std::vector<int>> labels_of(const std::vector<std::vector<FrameAnnotation>>& annotations,
                                        const std::vector<ModelOutput>& outputs) {
    std::vector<std::vector<int>> labels;
    for (std::size_t v = 0; v < outputs.size(); ++v) labels.push_back(frame_labels(annotations[v], outputs[v].frames()));
    return labels;
}

void write_events(const fs::path& path, const std::vector<VideoSample>& videos, const std::vector<ModelOutput>& outputs,
                  const DetectorConfig& detector, std::size_t head_width) {
    auto os = open_output(path);
    os << "video_id,frame_index,class_id,gpm_value";
    for (std::size_t k = 0; k < head_width; ++k) os << ",prob_" << k;
    os << '\n';
    for (std::size_t v = 0; v < outputs.size(); ++v) {
        for (const DetectionEvent& e : replay_online(outputs[v], detector.epsilon, detector.refractory))
            os << videos[v].id << ',' << format_event(e) << '\n';
    }
}

} // namespace

std::string format_event(const DetectionEvent& event) {
    std::string line = std::to_string(event.frame) + ',' + std::to_string(event.predicted_class) + ',' + fmt(event.gpm);
    for (double p : event.probabilities) line += ',' + fmt(p);
    return line;
}

void write_effective_config(const RunConfig& config, const fs::path& dir) {
    fs::create_directories(dir);
    auto os = open_output(dir / kEffectiveConfigName);
    os << to_json(config).dump(2) << '\n';
}

void cmd_generate(const RunConfig& config, const fs::path& out, bool force) {
    const auto specs = default_gestures(config.generator.num_classes);
    const Corpus corpus = generate(config.generator, specs);
    write_corpus(out, corpus, config.generator, specs, force);
    write_effective_config(config, out);
}

void cmd_train(const RunConfig& config, const fs::path& corpus_dir, const fs::path& out, std::ostream& progress) {
    if (!fs::exists(corpus_dir / kManifestName)) throw DataError("no corpus at " + corpus_dir.string());
    const GeneratorConfig corpus = corpus_generator_config(corpus_dir);
    const std::vector<VideoSample> raw = read_split(corpus_dir, "train");
    fs::create_directories(out);
    write_effective_config(config, out);

    auto run = [&](Modality m, const std::optional<Checkpoint>& init) {
        progress << "training " << to_string(m) << " on " << raw.size() << " videos\n";
        const TrainResult result = train(raw, m, model_for(config, corpus, m), config.training, init,
                                         [&](const EpochLog& e) {
                                             progress << "  epoch " << e.epoch << " lr " << e.learning_rate
                                                      << " loss " << e.loss << " (gpm " << e.gpm_loss << ", class "
                                                      << e.class_loss << ")\n";
                                             progress.flush();
                                         });
        Checkpoint ckpt = capture(result.model, &result.optimizer);
        save_checkpoint(checkpoint_path(out, m), ckpt);
        write_train_log(out / ("train_log_" + to_string(m) + ".csv"), result.log);
        return ckpt;
    };

    const auto& mods = config.modalities;
    if (mods.size() == 1) {
        run(mods[0], std::nullopt);
        return;
    }
    const Checkpoint depth = run(Modality::depth, std::nullopt);
    for (Modality m : mods) {
        if (m == Modality::depth) continue;
        run(m, inflate_weights(depth, channel_count(m)));
    }
}

MetricsReport cmd_eval(const RunConfig& config, const fs::path& corpus_dir, const fs::path& checkpoints,
                       const fs::path& out, bool dump_inputs) {
    if (!fs::exists(corpus_dir / kManifestName)) throw DataError("no corpus at " + corpus_dir.string());
    const GeneratorConfig corpus = corpus_generator_config(corpus_dir);
    const std::size_t N = corpus.num_classes;
    const std::vector<VideoSample> test = read_split(corpus_dir, "test");
    const std::size_t clip_frames = config.training.clip_frames;
    const EvalSettings settings = config.eval_settings();
    fs::create_directories(out / "traces");
    write_effective_config(config, out);

    MetricsReport report;
    std::vector<Model> models;
    std::vector<std::vector<ModelOutput>> test_outputs;
    std::vector<std::vector<FrameAnnotation>> test_annotations;
    for (Modality m : config.modalities) {
        models.push_back(load_for(checkpoints, m, N));
        test_outputs.push_back(predict_videos(models.back(), test, m, clip_frames, &test_annotations));
        report.modalities.push_back(evaluate_outputs(to_string(m), test_outputs.back(), test_annotations, N, settings));
        write_events(out / ("events_" + to_string(m) + ".csv"), test, test_outputs.back(), config.detector, N + 1);
        if (dump_inputs) {
            const fs::path dir = out / "inputs" / to_string(m);
            fs::create_directories(dir);
            const ModelConfig& mc = models.back().config();
            for (const VideoSample& v : test)
                io::write_video_file(dir / (v.id + ".gpmt"), prepare_eval(v, m, mc.height, mc.width, clip_frames).frames);
        }
    }

    std::vector<std::pair<std::string, std::vector<ModelOutput>>> traced;
    for (std::size_t i = 0; i < config.modalities.size(); ++i) traced.emplace_back(to_string(config.modalities[i]), test_outputs[i]);

    if (config.modalities.size() > 1) {
        const std::vector<VideoSample> train_raw = read_split(corpus_dir, "train");
        std::vector<std::vector<ModelOutput>> train_outputs;
        std::vector<std::vector<FrameAnnotation>> train_annotations;
        for (std::size_t i = 0; i < models.size(); ++i) {
            train_outputs.push_back(predict_videos(models[i], train_raw, config.modalities[i], clip_frames, &train_annotations));
        }
        const auto train_labels = labels_of(train_annotations, train_outputs[0]);
        for (std::size_t i = 0; i < models.size(); ++i) {
            const FusionFit single = fit_fusion_weights({train_outputs[i]}, train_labels, config.fusion_resolution);
            report.modalities[i].train_frame_accuracy = single.accuracy;
        }
        const FusionFit fit = fit_fusion_weights(train_outputs, train_labels, config.fusion_resolution);

        std::vector<ModelOutput> fused;
        for (std::size_t v = 0; v < test.size(); ++v) {
            std::vector<const ModelOutput*> per;
            for (const auto& o : test_outputs) per.push_back(&o[v]);
            fused.push_back(fuse(per, fit.weights));
        }
        ModalityReport fr = evaluate_outputs("fused", fused, test_annotations, N, settings);
        fr.train_frame_accuracy = fit.accuracy;
        fr.fusion_weights = fit.weights;
        report.modalities.push_back(std::move(fr));
        write_events(out / "events_fused.csv", test, fused, config.detector, N + 1);
        traced.emplace_back("fused", std::move(fused));
    }

    emit_report(report, out);
    const auto test_labels = labels_of(test_annotations, test_outputs[0]);
    for (std::size_t v = 0; v < test.size(); ++v) {
        std::vector<std::pair<std::string, const ModelOutput*>> cols;
        for (const auto& [name, outputs] : traced) cols.emplace_back(name, &outputs[v]);
        write_trace(out / "traces" / (test[v].id + ".csv"), test_labels[v], cols);
    }
    return report;
}

std::size_t cmd_stream(const Model& model, const DetectorConfig& detector, std::istream& in, std::ostream& out) {
    io::FrameStream stream(in);
    if (!stream.has_header()) return 0;
    const ModelConfig& mc = model.config();
    const Shape expected{mc.in_channels, mc.height, mc.width};
    if (stream.frame_shape() != expected) {
        throw DataError("stream frames are " + shape_string(stream.frame_shape()) + " but the model expects " +
                        shape_string(expected));
    }
    StreamSession session(model, detector);
    std::size_t events = 0;
    while (auto frame = stream.next()) {
        if (auto event = session.step(*frame)) {
            out << format_event(*event) << '\n';
            ++events;
        }
    }
    out.flush();
    return events;
}

} // namespace gpm
