#pragma once

#include <span>
#include <vector>

#include "cmpl/trainer.hpp"

namespace cmpl {

struct ClassAccuracyTable {
    std::vector<long> correct;
    std::vector<long> total;

    int num_classes() const { return static_cast<int>(total.size()); }
    double accuracy(int class_id) const;
    double overall_accuracy() const;
    // Accuracy restricted to a subset of classes.
    double subset_accuracy(std::span<const int> class_ids) const;
};

// Per-class accuracy of one net over a video set, using the inference
// protocol (num_clips uniformly spaced clips, averaged softmax).
ClassAccuracyTable class_accuracy(const ScalableNetConfig& config, const ParamStore& params,
                                  std::span<const Video> videos, int num_clips, int frames,
                                  int stride);

// Fraction of the unlabeled pool carrying a confident AND correct decision.
double pseudo_label_ratio(std::span<const PseudoLabelDecision> decisions,
                          std::span<const int> true_labels);

struct ClassGapEntry {
    int class_id = 0;
    double acc_small = 0.0;
    double acc_large = 0.0;
    double gap = 0.0;  // acc_small - acc_large
};

// Per-class (small - large) accuracy gaps, sorted by the large net's accuracy
// ascending (the plotting order of the capacity-bias figure).
std::vector<ClassGapEntry> per_class_gap(const ClassAccuracyTable& acc_small,
                                         const ClassAccuracyTable& acc_large);

struct StrideDegradationRow {
    int stride = 1;
    double accuracy = 0.0;
    double drop_ratio = 0.0;  // 1 - acc(stride)/acc(1)
    ClassAccuracyTable per_class;
};

struct StrideDegradation {
    std::vector<StrideDegradationRow> rows;
    // Drop ratio at `stride` restricted to a class subset.
    double subset_drop_ratio(int stride, std::span<const int> class_ids) const;
};

// Re-samples each evaluation clip at the given strides and extends it back to
// the net's frame count by nearest-repeat, then measures the accuracy drop.
StrideDegradation stride_degradation(const ScalableNetConfig& config, const ParamStore& params,
                                     std::span<const Video> videos, std::span<const int> strides,
                                     int clip_stride);

struct GainBin {
    int bin = 0;          // floor(aux_accuracy / bin_width)
    double lo = 0.0;      // bin * bin_width
    double mean_gain = 0.0;
    int count = 0;
};

// Groups classes by binned auxiliary accuracy and averages the primary gain
// within each bin; empty bins are omitted.
std::vector<GainBin> gain_vs_aux_bins(std::span<const double> primary_gain_per_class,
                                      std::span<const double> aux_acc_per_class,
                                      double bin_width = 0.05);

struct SubsetAccuracyPoint {
    int epoch = 0;
    long subset_size = 0;
    double acc_primary = 0.0;
    double acc_aux = 0.0;
    double acc_reference = -1.0;  // -1 when no reference log was supplied
};

// Accuracy of the primary, the auxiliary, and (optionally) a reference net on
// the subset of unlabeled samples the auxiliary labeled confidently, at every
// recorded snapshot epoch that is a multiple of interval_epochs. Epochs whose
// subset is empty are omitted.
std::vector<SubsetAccuracyPoint> subset_accuracy_curve(const MetricsLog& log,
                                                       const MetricsLog* reference_log = nullptr,
                                                       int interval_epochs = 10);

}  // namespace cmpl
