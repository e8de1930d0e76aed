#include "cmpl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmpl/errors.hpp"

namespace cmpl {

std::string to_string(TrainMode mode) {
    return mode == TrainMode::Cmpl ? "cmpl" : "supervised";
}

TrainMode train_mode_from_string(const std::string& name) {
    if (name == "cmpl") return TrainMode::Cmpl;
    if (name == "supervised") return TrainMode::Supervised;
    throw ConfigError("unknown mode: " + name);
}

AugmentationSpec AugmentConfig::standard_spec() const {
    return AugmentationSpec::standard(jitter_sigma, standard_transforms);
}

AugmentationSpec AugmentConfig::weak_spec() const { return AugmentationSpec::weak(jitter_sigma); }

AugmentationSpec AugmentConfig::strong_spec() const {
    return AugmentationSpec::strong(strong_transforms, cutout_fraction);
}

ScalableNetConfig ExperimentConfig::primary_net_config() const {
    ScalableNetConfig c;
    c.depth_blocks = net.depth_blocks;
    c.width_factor = net.primary_width;
    c.base_channels = net.base_channels;
    c.num_classes = dataset.num_classes;
    c.input_frames = temporal.primary_frames;
    c.spatial_dim = dataset.spatial_dim;
    return c;
}

ScalableNetConfig ExperimentConfig::aux_net_config() const {
    ScalableNetConfig c;
    c.depth_blocks = net.aux_depth_blocks;
    c.width_factor = net.aux_width;
    c.base_channels = net.base_channels;
    c.num_classes = dataset.num_classes;
    c.input_frames = temporal.aux_frames;
    c.spatial_dim = dataset.spatial_dim;
    return c;
}

bool ExperimentConfig::aux_active() const { return scheme != SchemeId::FixMatchSingle; }

void ExperimentConfig::validate() const {
    dataset.validate();
    temporal.validate(dataset.raw_length);
    primary_net_config().validate();
    aux_net_config().validate();
    augment.standard_spec().validate();
    augment.weak_spec().validate();
    augment.strong_spec().validate();
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("pseudo_label: tau must lie in (0, 1]");
    if (lambda < 0.0) throw ConfigError("loss: lambda must be >= 0");
    if (labeled_batch < 1) throw ConfigError("train: labeled_batch must be >= 1");
    if (unlabeled_batch < 1) throw ConfigError("train: unlabeled_batch must be >= 1");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0))
        throw ConfigError("split: labeled_fraction must lie in (0, 1)");
    if (val_videos_per_class < 1) throw ConfigError("dataset: val_videos_per_class must be >= 1");
    if (eval_num_clips < 1) throw ConfigError("eval: num_clips must be >= 1");
    if (snapshot_interval < 0) throw ConfigError("metrics: snapshot_interval must be >= 0");
    if (!(optimizer.base_lr > 0.0)) throw ConfigError("optimizer: base_lr must be > 0");
    if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0))
        throw ConfigError("optimizer: momentum must lie in [0, 1)");
    if (optimizer.weight_decay < 0.0) throw ConfigError("optimizer: weight_decay must be >= 0");
}

NetPair build_net_pair(const ExperimentConfig& config) {
    NetPair pair;
    pair.primary_config = config.primary_net_config();
    pair.aux_config = config.aux_net_config();
    pair.primary = build_net(pair.primary_config, mix_seed(config.seed, static_cast<std::uint64_t>(StreamTag::InitPrimary), 0));
    pair.aux = build_net(pair.aux_config, mix_seed(config.seed, static_cast<std::uint64_t>(StreamTag::InitAuxiliary), 0));
    return pair;
}

std::vector<LabeledItem> make_labeled_batch(const std::vector<Video>& videos,
                                            std::span<const int> indices,
                                            const ExperimentConfig& config, RngStream& rng) {
    const auto standard = config.augment.standard_spec();
    std::vector<LabeledItem> items;
    items.reserve(indices.size());
    for (int idx : indices) {
        const Video& video = videos[static_cast<std::size_t>(idx)];
        auto [clip_f, clip_a] = temporal_views(video, config.temporal, rng);
        LabeledItem item;
        item.primary_clip = standard_augment(clip_f, standard, rng);
        item.aux_clip = standard_augment(clip_a, standard, rng);
        item.label = video.class_id;
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<UnlabeledItem> make_unlabeled_batch(const std::vector<Video>& videos,
                                                std::span<const int> indices,
                                                const ExperimentConfig& config, RngStream& rng) {
    const auto weak = config.augment.weak_spec();
    const auto strong = config.augment.strong_spec();
    std::vector<UnlabeledItem> items;
    items.reserve(indices.size());
    for (int idx : indices) {
        const Video& video = videos[static_cast<std::size_t>(idx)];
        auto [clip_f, clip_a] = temporal_views(video, config.temporal, rng);
        UnlabeledItem item;
        item.weak_primary = weak_augment(clip_f, weak, rng);
        item.weak_aux = weak_augment(clip_a, weak, rng);
        if (config.temporal.shared_clip) {
            item.strong_primary = strong_augment(clip_f, strong, rng);
            item.strong_aux = strong_augment(clip_a, strong, rng);
        } else {
            auto [strong_f, strong_a] = temporal_views(video, config.temporal, rng);
            item.strong_primary = strong_augment(strong_f, strong, rng);
            item.strong_aux = strong_augment(strong_a, strong, rng);
        }
        item.true_class = video.class_id;
        item.video_index = idx;
        items.push_back(std::move(item));
    }
    return items;
}

TapedNet register_net(Tape& tape, const ScalableNetConfig& config, ParamStore& store) {
    TapedNet net;
    net.config = &config;
    net.store = &store;
    net.embed_w = tape.parameter(store, "embed.w");
    net.embed_b = tape.parameter(store, "embed.b");
    for (int i = 0; i < config.depth_blocks; ++i) {
        const auto w = tape.parameter(store, "block" + std::to_string(i) + ".w");
        const auto b = tape.parameter(store, "block" + std::to_string(i) + ".b");
        net.blocks.emplace_back(w, b);
    }
    net.head_w = tape.parameter(store, "head.w");
    net.head_b = tape.parameter(store, "head.b");
    return net;
}

Tape::NodeId forward_on_tape(Tape& tape, const TapedNet& net, const Clip& clip) {
    const auto& cfg = *net.config;
    if (clip.num_frames != cfg.input_frames)
        throw PreconditionError("forward_on_tape: clip frame count does not match the net");
    const int t = cfg.input_frames;
    const int c = cfg.channels();
    auto x = tape.constant(clip.data);
    auto a = tape.frames_affine(x, net.embed_w, net.embed_b, t, cfg.spatial_dim, c);
    a = tape.relu(a);
    for (const auto& [w, b] : net.blocks) {
        a = tape.conv1d_time(a, w, b, t, c);
        a = tape.relu(a);
    }
    const auto pooled = tape.time_mean(a, t, c);
    return tape.frames_affine(pooled, net.head_w, net.head_b, 1, c, cfg.num_classes);
}

Tape::NodeId supervised_loss_single(Tape& tape, const TapedNet& net,
                                    std::span<const LabeledItem> batch, bool use_aux_clip) {
    if (batch.empty()) throw PreconditionError("supervised loss: empty batch");
    std::vector<Tape::NodeId> terms;
    terms.reserve(batch.size());
    for (const auto& item : batch) {
        const Clip& clip = use_aux_clip ? item.aux_clip : item.primary_clip;
        const auto logits = forward_on_tape(tape, net, clip);
        terms.push_back(tape.softmax_cross_entropy(logits, item.label));
    }
    const std::vector<double> coeffs(terms.size(), 1.0 / static_cast<double>(terms.size()));
    return tape.sum_scaled(terms, coeffs);
}

std::pair<Tape::NodeId, Tape::NodeId> supervised_losses(Tape& tape, const TapedNet& primary,
                                                        const TapedNet& aux,
                                                        std::span<const LabeledItem> batch) {
    const auto loss_primary = supervised_loss_single(tape, primary, batch, false);
    const auto loss_aux = supervised_loss_single(tape, aux, batch, true);
    return {loss_primary, loss_aux};
}

std::pair<Tape::NodeId, Tape::NodeId> masked_unsupervised_losses(
    Tape& tape, const TapedNet& primary, const TapedNet& aux, std::span<const UnlabeledItem> batch,
    std::span<const DecisionPair> decisions, long normalizer) {
    if (batch.size() != decisions.size())
        throw PreconditionError("masked unsupervised loss: batch/decision length mismatch");
    if (normalizer <= 0) normalizer = static_cast<long>(batch.size());
    const double coeff = 1.0 / static_cast<double>(normalizer);

    std::vector<Tape::NodeId> primary_terms;
    std::vector<Tape::NodeId> aux_terms;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (decisions[i].for_primary.confident) {
            const auto logits = forward_on_tape(tape, primary, batch[i].strong_primary);
            primary_terms.push_back(
                tape.softmax_cross_entropy(logits, decisions[i].for_primary.target_class));
        }
        if (decisions[i].for_aux.confident) {
            const auto logits = forward_on_tape(tape, aux, batch[i].strong_aux);
            aux_terms.push_back(
                tape.softmax_cross_entropy(logits, decisions[i].for_aux.target_class));
        }
    }
    auto combine = [&](std::vector<Tape::NodeId>& terms) {
        if (terms.empty()) return tape.scalar(0.0);
        const std::vector<double> coeffs(terms.size(), coeff);
        return tape.sum_scaled(terms, coeffs);
    };
    return {combine(primary_terms), combine(aux_terms)};
}

UnsupervisedLosses unsupervised_losses(Tape& tape, const TapedNet& primary, const TapedNet& aux,
                                       std::span<const UnlabeledItem> batch, SchemeId scheme,
                                       double tau) {
    if (batch.empty()) throw PreconditionError("unsupervised loss: empty batch");

    // Weak-view predictions outside the tape: this is the stop-gradient.
    std::vector<Prediction> preds_primary;
    std::vector<Prediction> preds_aux;
    preds_primary.reserve(batch.size());
    preds_aux.reserve(batch.size());
    for (const auto& item : batch) {
        Prediction p_f{softmax(forward_logits(*primary.config, *primary.store, item.weak_primary))};
        if (scheme == SchemeId::FixMatchSingle) {
            preds_aux.push_back(p_f);
        } else {
            preds_aux.push_back(
                Prediction{softmax(forward_logits(*aux.config, *aux.store, item.weak_aux))});
        }
        preds_primary.push_back(std::move(p_f));
    }

    UnsupervisedLosses result;
    result.decisions = batch_decide(scheme, preds_primary, preds_aux, tau);
    auto [loss_primary, loss_aux] =
        masked_unsupervised_losses(tape, primary, aux, batch, result.decisions);
    result.loss_primary = loss_primary;
    result.loss_aux = loss_aux;
    return result;
}

Tape::NodeId total_loss(Tape& tape, Tape::NodeId sup_primary, Tape::NodeId sup_aux,
                        Tape::NodeId unsup_primary, Tape::NodeId unsup_aux, double lambda) {
    if (lambda < 0.0) throw PreconditionError("total_loss: lambda must be >= 0");
    const Tape::NodeId terms[] = {sup_primary, sup_aux, unsup_primary, unsup_aux};
    const double coeffs[] = {1.0, 1.0, lambda, lambda};
    return tape.sum_scaled(terms, coeffs);
}

double total_loss(double sup_primary, double sup_aux, double unsup_primary, double unsup_aux,
                  double lambda) {
    if (lambda < 0.0) throw PreconditionError("total_loss: lambda must be >= 0");
    return (sup_primary + sup_aux) + lambda * (unsup_primary + unsup_aux);
}

namespace {

// Cycles through the labeled pool, reshuffling on wrap-around.
class LabeledCycle {
  public:
    LabeledCycle(std::vector<int> indices, std::uint64_t seed)
        : indices_(std::move(indices)), rng_(seed, StreamTag::LabeledOrder) {
        rng_.shuffle(indices_);
    }

    std::vector<int> next(int count) {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            if (pos_ == indices_.size()) {
                rng_.shuffle(indices_);
                pos_ = 0;
            }
            out.push_back(indices_[pos_++]);
        }
        return out;
    }

  private:
    std::vector<int> indices_;
    RngStream rng_;
    std::size_t pos_ = 0;
};

SnapshotRecord take_snapshot(const ExperimentConfig& config, const NetPair& pair,
                             const std::vector<Video>& dataset, std::span<const int> unlabeled,
                             int epoch) {
    SnapshotRecord record;
    record.epoch = epoch;
    record.entries.reserve(unlabeled.size());
    RngStream rng(config.seed, StreamTag::Snapshot, static_cast<std::uint64_t>(epoch));
    const auto weak = config.augment.weak_spec();
    for (int idx : unlabeled) {
        const Video& video = dataset[static_cast<std::size_t>(idx)];
        auto [clip_f, clip_a] = temporal_views(video, config.temporal, rng);
        const auto weak_f = weak_augment(clip_f, weak, rng);
        const auto p_f = softmax(forward_logits(pair.primary_config, pair.primary, weak_f));
        SnapshotEntry entry;
        entry.video_index = idx;
        entry.true_class = video.class_id;
        Prediction pred_f{p_f};
        entry.primary_class = pred_f.argmax();
        entry.primary_conf = pred_f.max();
        if (config.aux_active()) {
            const auto weak_a = weak_augment(clip_a, weak, rng);
            Prediction pred_a{softmax(forward_logits(pair.aux_config, pair.aux, weak_a))};
            entry.aux_class = pred_a.argmax();
            entry.aux_conf = pred_a.max();
        } else {
            entry.aux_class = entry.primary_class;
            entry.aux_conf = entry.primary_conf;
        }
        record.entries.push_back(entry);
    }
    return record;
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const std::vector<Video>& dataset,
                  const SplitResult& split, const std::vector<Video>& validation) {
    config.validate();
    for (int idx : split.labeled) {
        if (idx < 0 || idx >= static_cast<int>(dataset.size()))
            throw ConfigError("train: split references a video outside the dataset");
    }

    TrainResult result;
    result.pair = build_net_pair(config);
    result.log.tau = config.tau;
    result.log.unlabeled_total = static_cast<long>(split.unlabeled.size());

    const bool aux_active = config.aux_active();
    const bool unsup_active = config.mode == TrainMode::Cmpl && config.lambda > 0.0 &&
                              !split.unlabeled.empty();

    // One epoch is one pass over the unlabeled pool; a run without an
    // unlabeled pool falls back to passes over the labeled pool so the
    // supervised baseline keeps an identical step budget on the same split.
    const long steps_per_epoch =
        split.unlabeled.empty()
            ? (static_cast<long>(split.labeled.size()) + config.labeled_batch - 1) / config.labeled_batch
            : (static_cast<long>(split.unlabeled.size()) + config.unlabeled_batch - 1) /
                  config.unlabeled_batch;

    OptimizerConfig optimizer = config.optimizer;
    optimizer.total_steps = std::max<long>(1, steps_per_epoch * config.epochs);
    optimizer.validate();

    if (config.epochs == 0) return result;

    LabeledCycle labeled_cycle(split.labeled, config.seed);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<int> unlabeled_order = split.unlabeled;
        if (unsup_active) {
            RngStream order_rng(config.seed, StreamTag::UnlabeledOrder,
                                static_cast<std::uint64_t>(epoch));
            order_rng.shuffle(unlabeled_order);
        }

        EpochRecord record;
        record.epoch = epoch;
        std::size_t unlabeled_pos = 0;

        for (long step = 0; step < steps_per_epoch; ++step) {
            const long global_step = (static_cast<long>(epoch) - 1) * steps_per_epoch + step;
            if (step == 0) record.lr = learning_rate(optimizer, global_step);

            const auto labeled_indices = labeled_cycle.next(config.labeled_batch);
            RngStream labeled_rng(config.seed, StreamTag::LabeledViews,
                                  static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(step));
            const auto labeled_items =
                make_labeled_batch(dataset, labeled_indices, config, labeled_rng);

            Tape tape;
            const auto primary = register_net(tape, result.pair.primary_config, result.pair.primary);
            TapedNet aux;
            if (aux_active) aux = register_net(tape, result.pair.aux_config, result.pair.aux);

            const auto sup_primary = supervised_loss_single(tape, primary, labeled_items, false);
            const auto sup_aux = aux_active
                                     ? supervised_loss_single(tape, aux, labeled_items, true)
                                     : tape.scalar(0.0);

            Tape::NodeId unsup_primary = Tape::kInvalid;
            Tape::NodeId unsup_aux = Tape::kInvalid;
            if (unsup_active) {
                const auto remaining = static_cast<long>(unlabeled_order.size() - unlabeled_pos);
                const long take = std::min<long>(config.unlabeled_batch, remaining);
                std::span<const int> batch_indices(unlabeled_order.data() + unlabeled_pos,
                                                   static_cast<std::size_t>(take));
                unlabeled_pos += static_cast<std::size_t>(take);
                RngStream unlabeled_rng(config.seed, StreamTag::UnlabeledViews,
                                        static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(step));
                const auto unlabeled_items =
                    make_unlabeled_batch(dataset, batch_indices, config, unlabeled_rng);
                auto unsup =
                    unsupervised_losses(tape, primary, aux, unlabeled_items, config.scheme, config.tau);
                unsup_primary = unsup.loss_primary;
                unsup_aux = unsup.loss_aux;
                for (std::size_t i = 0; i < unsup.decisions.size(); ++i) {
                    const auto& d = unsup.decisions[i].for_primary;
                    if (d.confident) {
                        ++record.n_confident;
                        if (d.target_class == unlabeled_items[i].true_class) ++record.n_correct;
                    }
                }
            } else {
                unsup_primary = tape.scalar(0.0);
                unsup_aux = tape.scalar(0.0);
            }

            const auto objective =
                total_loss(tape, sup_primary, sup_aux, unsup_primary, unsup_aux, config.lambda);

            result.pair.primary.zero_grad();
            result.pair.aux.zero_grad();
            tape.backward(objective);
            sgd_step(result.pair.primary, optimizer, global_step);
            if (aux_active) sgd_step(result.pair.aux, optimizer, global_step);

            record.loss_sup_primary += tape.scalar_value(sup_primary);
            record.loss_sup_aux += tape.scalar_value(sup_aux);
            record.loss_unsup_primary += tape.scalar_value(unsup_primary);
            record.loss_unsup_aux += tape.scalar_value(unsup_aux);
        }

        const double inv_steps = 1.0 / static_cast<double>(steps_per_epoch);
        record.loss_sup_primary *= inv_steps;
        record.loss_sup_aux *= inv_steps;
        record.loss_unsup_primary *= inv_steps;
        record.loss_unsup_aux *= inv_steps;
        record.pl_ratio = result.log.unlabeled_total > 0
                              ? static_cast<double>(record.n_correct) /
                                    static_cast<double>(result.log.unlabeled_total)
                              : 0.0;
        record.val_acc_primary =
            validation_accuracy(result.pair.primary_config, result.pair.primary, validation,
                                config.eval_num_clips, config.temporal.primary_frames,
                                config.temporal.primary_stride);
        record.val_acc_aux =
            aux_active ? validation_accuracy(result.pair.aux_config, result.pair.aux, validation,
                                             config.eval_num_clips, config.temporal.aux_frames,
                                             config.temporal.aux_stride)
                       : 0.0;
        result.log.epochs.push_back(record);

        const bool snapshot_due = config.snapshot_interval > 0 &&
                                  (epoch % config.snapshot_interval == 0 || epoch == config.epochs);
        if (snapshot_due && config.mode == TrainMode::Cmpl && !split.unlabeled.empty()) {
            result.log.snapshots.push_back(
                take_snapshot(config, result.pair, dataset, split.unlabeled, epoch));
        }
    }
    return result;
}

Prediction infer(const ScalableNetConfig& config, const ParamStore& params, const Video& video,
                 int num_clips, int frames, int stride) {
    if (num_clips < 1) throw PreconditionError("infer: num_clips must be >= 1");
    const int max_offset = video.raw_length - frames * stride;
    if (max_offset < 0) throw ConfigError("infer: clip spec does not fit the video");

    std::vector<int> offsets;
    offsets.reserve(static_cast<std::size_t>(num_clips));
    if (num_clips == 1) {
        offsets.push_back(max_offset / 2);
    } else {
        for (int i = 0; i < num_clips; ++i) {
            offsets.push_back(static_cast<int>(
                std::lround(static_cast<double>(i) * max_offset / (num_clips - 1))));
        }
    }

    std::vector<double> mean(static_cast<std::size_t>(config.num_classes), 0.0);
    for (int offset : offsets) {
        const auto clip = sample_clip(video, frames, stride, offset);
        const auto probs = softmax(forward_logits(config, params, clip));
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += probs[k];
    }
    const double inv = 1.0 / static_cast<double>(num_clips);
    for (auto& p : mean) p *= inv;
    return Prediction{std::move(mean)};
}

double validation_accuracy(const ScalableNetConfig& config, const ParamStore& params,
                           std::span<const Video> videos, int num_clips, int frames, int stride) {
    if (videos.empty()) return 0.0;
    long correct = 0;
    for (const auto& video : videos) {
        const auto pred = infer(config, params, video, num_clips, frames, stride);
        if (pred.argmax() == video.class_id) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(videos.size());
}

}  // namespace cmpl
