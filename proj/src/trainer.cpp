// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpm/error.hpp"
#include "gpm/objectives.hpp"

namespace gpm {

SgdConfig TrainConfig::desk_optimizer() {
    SgdConfig c;
    c.learning_rate = 0.03;
    c.decay_interval_epochs = 20;
    return c;
}

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("training: epochs must be positive");
    if (batch_size == 0) throw ConfigError("training: batch_size must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("training: lambda must be non-negative");
    if (clip_frames == 0) throw ConfigError("training: clip_frames must be positive");
    try {
        optimizer.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("training.optimizer: ") + e.what());
    }
    augmentation.validate();
}

VideoSample prepare_eval(const VideoSample& raw_depth, Modality modality, std::size_t crop_height,
                         std::size_t crop_width, std::size_t clip_frames) {
    return subsample_nearest(center_crop(derive_modality(raw_depth, modality), crop_height, crop_width), clip_frames);
}

Tensor stack_clips(std::span<const VideoSample* const> clips) {
    if (clips.empty()) throw std::invalid_argument("stack_clips: no clips");
    const Shape& s = clips[0]->frames.shape();
    Tensor out({clips.size(), s[0], s[1], s[2], s[3]});
    const std::size_t n = clips[0]->frames.size();
    for (std::size_t i = 0; i < clips.size(); ++i) {
        if (clips[i]->frames.shape() != s) {
            throw std::invalid_argument("stack_clips: clip " + clips[i]->id + " has shape " +
                                        shape_string(clips[i]->frames.shape()) + ", expected " + shape_string(s));
        }
        std::copy_n(clips[i]->frames.data().begin(), n, out.data().begin() + i * n);
    }
    return out;
}

TrainResult train(const std::vector<VideoSample>& raw_train, Modality modality, const ModelConfig& model_config,
                  const TrainConfig& config, const std::optional<Checkpoint>& init,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    if (raw_train.empty()) throw DataError("training split is empty");
    if (model_config.in_channels != channel_count(modality)) {
        throw ConfigError("model expects " + std::to_string(model_config.in_channels) + " input channels but " +
                          to_string(modality) + " has " + std::to_string(channel_count(modality)));
    }
    Model model = init ? restore_model(*init) : Model(model_config, derive_seed(config.seed, 3));
    if (init && !(model.config() == model_config)) {
        throw ConfigError("initial checkpoint does not match the requested model configuration");
    }
    const std::size_t K = model_config.head_width();
    const std::size_t crop_h = model_config.height, crop_w = model_config.width;
    AugmentationConfig aug = config.augmentation;
    aug.crop_height = crop_h;
    aug.crop_width = crop_w;

    std::vector<VideoSample> derived;
    derived.reserve(raw_train.size());
    std::vector<std::size_t> counts(K, 0);
    for (const VideoSample& raw : raw_train) {
        derived.push_back(derive_modality(raw, modality));
        const VideoSample clip = subsample_nearest(center_crop(derived.back(), crop_h, crop_w), config.clip_frames);
        for (int y : frame_labels(clip.annotations, clip.length())) {
            if (static_cast<std::size_t>(y) >= K) {
                throw DataError("video " + raw.id + " uses class " + std::to_string(y) + " but the model has " +
                                std::to_string(model_config.num_classes) + " gesture classes");
            }
            ++counts[static_cast<std::size_t>(y)];
        }
    }
    std::vector<double> weights(K, 1.0);
    if (config.class_weighting) {
        std::vector<std::string> names{"no-gesture"};
        for (std::size_t k = 1; k < K; ++k) names.push_back("class " + std::to_string(k));
        weights = class_weights(counts, names);
    }

    auto params = model.parameters();
    SgdOptimizer optimizer(config.optimizer, params);
    const auto head_it = std::find_if(params.begin(), params.end(), [](const Parameter* p) {
        return p->name == "class_head.weight";
    });
    std::vector<double> head_grad((*head_it)->value.size());

    std::vector<EpochLog> log;
    std::vector<std::size_t> order(derived.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        optimizer.set_epoch(static_cast<int>(epoch));
        std::iota(order.begin(), order.end(), 0);
        kernels::Rng shuffle_rng(derive_seed(config.seed, 10, epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        kernels::Rng dropout_rng(derive_seed(config.seed, 11, epoch));
        EpochLog entry;
        entry.epoch = epoch;
        entry.learning_rate = optimizer.current_learning_rate();
        std::fill(head_grad.begin(), head_grad.end(), 0.0);
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<VideoSample> clips;
            for (std::size_t i = start; i < end; ++i) {
                const VideoSample& src = derived[order[i]];
                kernels::Rng aug_rng(derive_seed(config.seed, 12 + epoch, order[i]));
                VideoSample cropped = config.augment ? augment(src, aug, aug_rng) : center_crop(src, crop_h, crop_w);
                clips.push_back(subsample_nearest(cropped, config.clip_frames));
            }
            std::vector<const VideoSample*> ptrs;
            std::vector<double> targets;
            std::vector<int> labels;
            for (const VideoSample& c : clips) {
                ptrs.push_back(&c);
                const auto p = gpm_target(c.annotations, c.length());
                const auto y = frame_labels(c.annotations, c.length());
                targets.insert(targets.end(), p.begin(), p.end());
                labels.insert(labels.end(), y.begin(), y.end());
            }
            const Tensor batch = stack_clips(ptrs);

            ad::Tape tape;
            const ForwardResult fwd = model.forward(tape, batch, ad::Mode::train, dropout_rng);
            const ad::Var lg = gpm_loss(tape, fwd.gpm, targets);
            const ad::Var lc = class_loss(tape, fwd.probabilities, labels, weights);
            const ad::Var loss = ad::weighted_sum(tape, lg, lc, config.lambda);
            const double lg_v = tape.value(lg)[0], lc_v = tape.value(lc)[0], loss_v = tape.value(loss)[0];
            if (!std::isfinite(loss_v)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batches));
            }
            zero_grads(params);
            tape.backward(loss);
            const auto g = (*head_it)->value.grad();
            for (std::size_t i = 0; i < g.size(); ++i) head_grad[i] += g[i];
            optimizer.step(params);
            model.commit_batch_stats(fwd);
            entry.gpm_loss += lg_v;
            entry.class_loss += lc_v;
            entry.loss += loss_v;
            ++batches;
        }
        entry.gpm_loss /= static_cast<double>(batches);
        entry.class_loss /= static_cast<double>(batches);
        entry.loss /= static_cast<double>(batches);
        double norm = 0.0;
        for (double v : head_grad) norm += v * v;
        entry.class_head_grad_norm = std::sqrt(norm);
        for (const Parameter* p : params) {
            for (double v : p->value.data()) {
                if (!std::isfinite(v)) throw NumericError("parameter " + p->name + " became non-finite at epoch " + std::to_string(epoch));
            }
        }
        log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    optimizer.set_epoch(static_cast<int>(config.epochs));
    for (Parameter* p : params) p->value.drop_grad();
    return TrainResult{std::move(model), std::move(optimizer), std::move(log), std::move(weights)};
}

std::vector<ModelOutput> predict_videos(const Model& model, const std::vector<VideoSample>& raw, Modality modality,
                                        std::size_t clip_frames, std::vector<std::vector<FrameAnnotation>>* annotations) {
    const ModelConfig& cfg = model.config();
    if (cfg.in_channels != channel_count(modality)) {
        throw DataError("checkpoint expects " + std::to_string(cfg.in_channels) + " input channels but modality " +
                        to_string(modality) + " has " + std::to_string(channel_count(modality)));
    }
    std::vector<ModelOutput> out;
    if (annotations) annotations->clear();
    constexpr std::size_t chunk = 8;
    for (std::size_t start = 0; start < raw.size(); start += chunk) {
        std::vector<VideoSample> clips;
        for (std::size_t i = start; i < std::min(raw.size(), start + chunk); ++i) {
            clips.push_back(prepare_eval(raw[i], modality, cfg.height, cfg.width, clip_frames));
            if (annotations) annotations->push_back(clips.back().annotations);
        }
        std::vector<const VideoSample*> ptrs;
        for (const auto& c : clips) ptrs.push_back(&c);
        for (auto& o : model.predict(stack_clips(ptrs))) out.push_back(std::move(o));
    }
    return out;
}

} // namespace gpm
