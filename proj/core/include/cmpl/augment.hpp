#pragma once

#include "cmpl/rng.hpp"
#include "cmpl/synthdata.hpp"

namespace cmpl {

enum class AugmentKind { Standard, Weak, Strong };

// Feature-space analogue of the usual video augmentation stack. Weak is
// near-identity (temporally consistent jitter only); Strong applies
// transform_count random spatial transforms plus a contiguous cutout block;
// Standard sits between them for labeled-data training. Every spatial
// transform and the cutout mask are shared by all frames of a clip.
struct AugmentationSpec {
    AugmentKind kind = AugmentKind::Weak;
    double jitter_sigma = 0.0;
    double cutout_fraction = 0.0;
    int transform_count = 0;

    static AugmentationSpec standard(double jitter_sigma = 0.01, int transforms = 1);
    static AugmentationSpec weak(double jitter_sigma = 0.01);
    static AugmentationSpec strong(int transforms = 2, double cutout_fraction = 0.25);

    void validate() const;  // throws ConfigError
};

// Temporal-view geometry for the two networks: frame counts, strides, and the
// time offset t_s (in raw frames) separating the auxiliary clip from the
// primary clip.
struct TemporalViewSpec {
    int primary_frames = 8;
    int primary_stride = 8;
    int aux_frames = 16;
    int aux_stride = 4;
    int time_offset = 0;
    // When true (default) the weak and strong views of an unlabeled sample are
    // two augmentations of the same temporal clip; when false the strong view
    // is drawn from an independently sampled clip.
    bool shared_clip = true;

    int primary_max_offset(int raw_length) const { return raw_length - primary_frames * primary_stride; }
    int aux_max_offset(int raw_length) const { return raw_length - aux_frames * aux_stride; }
    void validate(int raw_length) const;  // throws ConfigError
};

Clip apply_augmentation(const Clip& clip, const AugmentationSpec& spec, RngStream& rng);

Clip weak_augment(const Clip& clip, const AugmentationSpec& spec, RngStream& rng);
Clip strong_augment(const Clip& clip, const AugmentationSpec& spec, RngStream& rng);
Clip standard_augment(const Clip& clip, const AugmentationSpec& spec, RngStream& rng);

// Samples the primary clip at a random legal base offset and the auxiliary
// clip at base + t_s, clamped to its legal range.
std::pair<Clip, Clip> temporal_views(const Video& video, const TemporalViewSpec& spec,
                                     RngStream& rng);
// Deterministic variant with an explicit base offset.
std::pair<Clip, Clip> temporal_views_at(const Video& video, const TemporalViewSpec& spec,
                                        int base_offset);

}  // namespace cmpl
