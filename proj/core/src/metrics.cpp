#include "cmpl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cmpl/errors.hpp"

namespace cmpl {

double ClassAccuracyTable::accuracy(int class_id) const {
    const auto c = static_cast<std::size_t>(class_id);
    if (total[c] == 0) return 0.0;
    return static_cast<double>(correct[c]) / static_cast<double>(total[c]);
}

double ClassAccuracyTable::overall_accuracy() const {
    long num = 0;
    long den = 0;
    for (std::size_t c = 0; c < total.size(); ++c) {
        num += correct[c];
        den += total[c];
    }
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double ClassAccuracyTable::subset_accuracy(std::span<const int> class_ids) const {
    long num = 0;
    long den = 0;
    for (int c : class_ids) {
        num += correct[static_cast<std::size_t>(c)];
        den += total[static_cast<std::size_t>(c)];
    }
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassAccuracyTable class_accuracy(const ScalableNetConfig& config, const ParamStore& params,
                                  std::span<const Video> videos, int num_clips, int frames,
                                  int stride) {
    ClassAccuracyTable table;
    table.correct.assign(static_cast<std::size_t>(config.num_classes), 0);
    table.total.assign(static_cast<std::size_t>(config.num_classes), 0);
    for (const auto& video : videos) {
        if (video.class_id < 0 || video.class_id >= config.num_classes)
            throw PreconditionError("class_accuracy: video class outside the net's class range");
        const auto pred = infer(config, params, video, num_clips, frames, stride);
        ++table.total[static_cast<std::size_t>(video.class_id)];
        if (pred.argmax() == video.class_id) ++table.correct[static_cast<std::size_t>(video.class_id)];
    }
    return table;
}

double pseudo_label_ratio(std::span<const PseudoLabelDecision> decisions,
                          std::span<const int> true_labels) {
    if (decisions.size() != true_labels.size())
        throw PreconditionError("pseudo_label_ratio: length mismatch");
    if (decisions.empty()) return 0.0;
    long correct = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (decisions[i].confident && decisions[i].target_class == true_labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(decisions.size());
}

std::vector<ClassGapEntry> per_class_gap(const ClassAccuracyTable& acc_small,
                                         const ClassAccuracyTable& acc_large) {
    if (acc_small.num_classes() != acc_large.num_classes())
        throw PreconditionError("per_class_gap: class counts differ");
    std::vector<ClassGapEntry> entries;
    entries.reserve(static_cast<std::size_t>(acc_small.num_classes()));
    for (int c = 0; c < acc_small.num_classes(); ++c) {
        ClassGapEntry e;
        e.class_id = c;
        e.acc_small = acc_small.accuracy(c);
        e.acc_large = acc_large.accuracy(c);
        e.gap = e.acc_small - e.acc_large;
        entries.push_back(e);
    }
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.acc_large != b.acc_large) return a.acc_large < b.acc_large;
        return a.class_id < b.class_id;
    });
    return entries;
}

namespace {

// Decimate a clip by `stride` and extend back by repeating each kept frame.
Clip repeat_extend(const Clip& clip, int stride) {
    Clip out = clip;
    const int kept = clip.num_frames / stride;
    for (int t = 0; t < clip.num_frames; ++t) {
        const int src = std::min(t / stride, kept - 1) * stride;
        const double* src_frame = clip.frame(src);
        std::copy(src_frame, src_frame + clip.spatial_dim, out.frame(t));
    }
    return out;
}

}  // namespace

double StrideDegradation::subset_drop_ratio(int stride, std::span<const int> class_ids) const {
    const StrideDegradationRow* base = nullptr;
    const StrideDegradationRow* at = nullptr;
    for (const auto& row : rows) {
        if (row.stride == 1) base = &row;
        if (row.stride == stride) at = &row;
    }
    if (base == nullptr || at == nullptr)
        throw PreconditionError("subset_drop_ratio: stride not evaluated");
    const double acc1 = base->per_class.subset_accuracy(class_ids);
    if (acc1 == 0.0) return 0.0;
    return 1.0 - at->per_class.subset_accuracy(class_ids) / acc1;
}

StrideDegradation stride_degradation(const ScalableNetConfig& config, const ParamStore& params,
                                     std::span<const Video> videos, std::span<const int> strides,
                                     int clip_stride) {
    const int frames = config.input_frames;
    for (int s : strides) {
        if (s < 1 || frames % s != 0)
            throw PreconditionError("stride_degradation: stride must divide the clip length");
    }

    StrideDegradation result;
    for (int s : strides) {
        StrideDegradationRow row;
        row.stride = s;
        row.per_class.correct.assign(static_cast<std::size_t>(config.num_classes), 0);
        row.per_class.total.assign(static_cast<std::size_t>(config.num_classes), 0);
        result.rows.push_back(std::move(row));
    }

    for (const auto& video : videos) {
        if (video.class_id < 0 || video.class_id >= config.num_classes)
            throw PreconditionError("stride_degradation: video class outside the net's class range");
        const int max_offset = video.raw_length - frames * clip_stride;
        if (max_offset < 0) throw ConfigError("stride_degradation: clip spec does not fit the video");
        const Clip eval_clip = sample_clip(video, frames, clip_stride, max_offset / 2);
        for (auto& row : result.rows) {
            const Clip degraded = row.stride == 1 ? eval_clip : repeat_extend(eval_clip, row.stride);
            const auto logits = forward_logits(config, params, degraded);
            Prediction pred{softmax(logits)};
            ++row.per_class.total[static_cast<std::size_t>(video.class_id)];
            if (pred.argmax() == video.class_id)
                ++row.per_class.correct[static_cast<std::size_t>(video.class_id)];
        }
    }

    double base_acc = 0.0;
    for (auto& row : result.rows) {
        row.accuracy = row.per_class.overall_accuracy();
        if (row.stride == 1) base_acc = row.accuracy;
    }
    for (auto& row : result.rows) {
        row.drop_ratio = base_acc == 0.0 ? 0.0 : 1.0 - row.accuracy / base_acc;
    }
    return result;
}

std::vector<GainBin> gain_vs_aux_bins(std::span<const double> primary_gain_per_class,
                                      std::span<const double> aux_acc_per_class, double bin_width) {
    if (primary_gain_per_class.size() != aux_acc_per_class.size())
        throw PreconditionError("gain_vs_aux_bins: length mismatch");
    std::map<int, std::pair<double, int>> bins;  // bin -> (gain sum, count)
    for (std::size_t c = 0; c < aux_acc_per_class.size(); ++c) {
        const int bin = static_cast<int>(std::floor(aux_acc_per_class[c] / bin_width));
        auto& [sum, count] = bins[bin];
        sum += primary_gain_per_class[c];
        ++count;
    }
    std::vector<GainBin> out;
    out.reserve(bins.size());
    for (const auto& [bin, acc] : bins) {
        GainBin g;
        g.bin = bin;
        g.lo = bin * bin_width;
        g.mean_gain = acc.first / acc.second;
        g.count = acc.second;
        out.push_back(g);
    }
    return out;
}

std::vector<SubsetAccuracyPoint> subset_accuracy_curve(const MetricsLog& log,
                                                       const MetricsLog* reference_log,
                                                       int interval_epochs) {
    if (log.snapshots.empty())
        throw ReportError("subset_accuracy_curve: the metrics log holds no snapshots");
    if (interval_epochs < 1)
        throw PreconditionError("subset_accuracy_curve: interval must be >= 1");

    std::vector<SubsetAccuracyPoint> points;
    for (const auto& snapshot : log.snapshots) {
        if (snapshot.epoch % interval_epochs != 0) continue;

        const SnapshotRecord* reference = nullptr;
        if (reference_log != nullptr) {
            for (const auto& candidate : reference_log->snapshots) {
                if (candidate.epoch == snapshot.epoch) {
                    reference = &candidate;
                    break;
                }
            }
            if (reference == nullptr)
                throw ReportError("subset_accuracy_curve: reference log is missing epoch " +
                                  std::to_string(snapshot.epoch));
        }
        std::map<int, int> reference_class;
        if (reference != nullptr) {
            for (const auto& e : reference->entries) reference_class[e.video_index] = e.primary_class;
        }

        SubsetAccuracyPoint point;
        point.epoch = snapshot.epoch;
        long correct_primary = 0;
        long correct_aux = 0;
        long correct_reference = 0;
        for (const auto& e : snapshot.entries) {
            if (e.aux_conf < log.tau) continue;  // subset: confidently aux-labeled samples
            ++point.subset_size;
            if (e.primary_class == e.true_class) ++correct_primary;
            if (e.aux_class == e.true_class) ++correct_aux;
            if (reference != nullptr) {
                const auto it = reference_class.find(e.video_index);
                if (it == reference_class.end())
                    throw ReportError("subset_accuracy_curve: reference log is missing video " +
                                      std::to_string(e.video_index));
                if (it->second == e.true_class) ++correct_reference;
            }
        }
        if (point.subset_size == 0) continue;
        point.acc_primary = static_cast<double>(correct_primary) / static_cast<double>(point.subset_size);
        point.acc_aux = static_cast<double>(correct_aux) / static_cast<double>(point.subset_size);
        point.acc_reference =
            reference != nullptr
                ? static_cast<double>(correct_reference) / static_cast<double>(point.subset_size)
                : -1.0;
        points.push_back(point);
    }
    return points;
}

}  // namespace cmpl
