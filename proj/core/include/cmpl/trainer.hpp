#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmpl/augment.hpp"
#include "cmpl/netcore.hpp"
#include "cmpl/pseudolabel.hpp"
#include "cmpl/synthdata.hpp"
#include "cmpl/tape.hpp"

namespace cmpl {

enum class TrainMode { Cmpl, Supervised };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

struct NetPairConfig {
    int base_channels = 32;
    int depth_blocks = 2;
    double primary_width = 1.0;
    double aux_width = 0.25;
    int aux_depth_blocks = 2;
};

struct AugmentConfig {
    double jitter_sigma = 0.01;
    int standard_transforms = 1;
    int strong_transforms = 2;
    double cutout_fraction = 0.25;

    AugmentationSpec standard_spec() const;
    AugmentationSpec weak_spec() const;
    AugmentationSpec strong_spec() const;
};

// Everything a run needs. Parsed from flat `key = value` config text by the
// config module; defaults follow the 1%-labels setting.
struct ExperimentConfig {
    TrainMode mode = TrainMode::Cmpl;
    std::uint64_t seed = 42;

    DatasetSpec dataset;
    int val_videos_per_class = 20;
    std::string dataset_file;  // optional: load instead of generating

    double labeled_fraction = 0.01;
    SplitScheme split_scheme = SplitScheme::Uniform;

    NetPairConfig net;
    TemporalViewSpec temporal;
    AugmentConfig augment;

    SchemeId scheme = SchemeId::Cross;
    double tau = 0.9;
    double lambda = 5.0;

    int labeled_batch = 2;
    int unlabeled_batch = 10;
    int epochs = 50;
    // The classic large-scale recipe (base_lr 0.1) assumes batch-normalized
    // ResNets; these small unnormalized nets train stably around 3e-3.
    OptimizerConfig optimizer{0.003, 0.9, 1e-4, 1, LrSchedule::Cosine};

    int eval_num_clips = 3;
    int snapshot_interval = 10;

    ScalableNetConfig primary_net_config() const;
    ScalableNetConfig aux_net_config() const;
    bool aux_active() const;  // false in single-model (FixMatch) training
    void validate() const;    // throws ConfigError
};

struct NetPair {
    ScalableNetConfig primary_config;
    ScalableNetConfig aux_config;
    ParamStore primary;
    ParamStore aux;
};

NetPair build_net_pair(const ExperimentConfig& config);

// One labeled sample, already viewed and standard-augmented for each net.
struct LabeledItem {
    Clip primary_clip;
    Clip aux_clip;
    int label = 0;
};

// One unlabeled sample with its weak and strong views for both nets.
struct UnlabeledItem {
    Clip weak_primary;
    Clip weak_aux;
    Clip strong_primary;
    Clip strong_aux;
    int true_class = 0;
    int video_index = 0;
};

std::vector<LabeledItem> make_labeled_batch(const std::vector<Video>& videos,
                                            std::span<const int> indices,
                                            const ExperimentConfig& config, RngStream& rng);
std::vector<UnlabeledItem> make_unlabeled_batch(const std::vector<Video>& videos,
                                                std::span<const int> indices,
                                                const ExperimentConfig& config, RngStream& rng);

// A network registered on a tape: parameter leaves plus eval-mode access to
// the underlying store for gradient-free (stop-gradient) passes.
struct TapedNet {
    const ScalableNetConfig* config = nullptr;
    ParamStore* store = nullptr;
    Tape::NodeId embed_w = Tape::kInvalid;
    Tape::NodeId embed_b = Tape::kInvalid;
    std::vector<std::pair<Tape::NodeId, Tape::NodeId>> blocks;
    Tape::NodeId head_w = Tape::kInvalid;
    Tape::NodeId head_b = Tape::kInvalid;
};

TapedNet register_net(Tape& tape, const ScalableNetConfig& config, ParamStore& store);
Tape::NodeId forward_on_tape(Tape& tape, const TapedNet& net, const Clip& clip);

// Mean supervised cross-entropy of one net over a labeled batch.
Tape::NodeId supervised_loss_single(Tape& tape, const TapedNet& net,
                                    std::span<const LabeledItem> batch, bool use_aux_clip);
// Both nets' supervised losses (Eq. pair): each is the batch mean of
// cross-entropy on its standard-augmented view.
std::pair<Tape::NodeId, Tape::NodeId> supervised_losses(Tape& tape, const TapedNet& primary,
                                                        const TapedNet& aux,
                                                        std::span<const LabeledItem> batch);

struct UnsupervisedLosses {
    Tape::NodeId loss_primary = Tape::kInvalid;
    Tape::NodeId loss_aux = Tape::kInvalid;
    std::vector<DecisionPair> decisions;
};

// Weak-view predictions are computed with gradients severed; confident
// decisions gate the strong-view cross-entropy terms, and the sum is
// normalized by the full batch size (not the confident count).
UnsupervisedLosses unsupervised_losses(Tape& tape, const TapedNet& primary, const TapedNet& aux,
                                       std::span<const UnlabeledItem> batch, SchemeId scheme,
                                       double tau);

// The gated strong-view loss terms for fixed decisions. normalizer <= 0 means
// "use batch.size()"; exposed so oracles can re-normalize filtered batches.
std::pair<Tape::NodeId, Tape::NodeId> masked_unsupervised_losses(
    Tape& tape, const TapedNet& primary, const TapedNet& aux, std::span<const UnlabeledItem> batch,
    std::span<const DecisionPair> decisions, long normalizer = 0);

Tape::NodeId total_loss(Tape& tape, Tape::NodeId sup_primary, Tape::NodeId sup_aux,
                        Tape::NodeId unsup_primary, Tape::NodeId unsup_aux, double lambda);
double total_loss(double sup_primary, double sup_aux, double unsup_primary, double unsup_aux,
                  double lambda);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double lr = 0.0;
    double loss_sup_primary = 0.0;
    double loss_sup_aux = 0.0;
    double loss_unsup_primary = 0.0;
    double loss_unsup_aux = 0.0;
    long n_confident = 0;  // primary-side decisions over the epoch
    long n_correct = 0;
    double pl_ratio = 0.0;  // n_correct / |unlabeled pool|
    double val_acc_primary = 0.0;
    double val_acc_aux = 0.0;
};

// Per-video weak-view statistics recorded at snapshot epochs; used for the
// pseudo-label quality curves.
struct SnapshotEntry {
    int video_index = 0;
    int true_class = 0;
    int primary_class = 0;
    double primary_conf = 0.0;
    int aux_class = 0;
    double aux_conf = 0.0;
};

struct SnapshotRecord {
    int epoch = 0;
    std::vector<SnapshotEntry> entries;
};

struct MetricsLog {
    long unlabeled_total = 0;
    double tau = 0.9;
    std::vector<EpochRecord> epochs;
    std::vector<SnapshotRecord> snapshots;
};

struct TrainResult {
    NetPair pair;
    MetricsLog log;
};

TrainResult train(const ExperimentConfig& config, const std::vector<Video>& dataset,
                  const SplitResult& split, const std::vector<Video>& validation);

// Uniformly spaced clips over the legal offset range (a single clip is taken
// from the center), softmax probabilities averaged.
Prediction infer(const ScalableNetConfig& config, const ParamStore& params, const Video& video,
                 int num_clips, int frames, int stride);

double validation_accuracy(const ScalableNetConfig& config, const ParamStore& params,
                           std::span<const Video> videos, int num_clips, int frames, int stride);

}  // namespace cmpl
