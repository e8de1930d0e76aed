#include "cmpl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmpl/errors.hpp"

namespace cmpl {

namespace {

void add_jitter(Clip& clip, double sigma, RngStream& rng) {
    if (sigma <= 0.0) return;
    std::vector<double> field(static_cast<std::size_t>(clip.spatial_dim));
    for (auto& v : field) v = sigma * rng.normal();
    for (int t = 0; t < clip.num_frames; ++t) {
        double* frame = clip.frame(t);
        for (int d = 0; d < clip.spatial_dim; ++d) frame[d] += field[d];
    }
}

void apply_scale(Clip& clip, RngStream& rng) {
    const double factor = rng.uniform(0.85, 1.15);
    for (auto& v : clip.data) v *= factor;
}

void apply_bias(Clip& clip, RngStream& rng) {
    const double bias = rng.uniform(-0.1, 0.1);
    for (auto& v : clip.data) v += bias;
}

void apply_block_permutation(Clip& clip, RngStream& rng) {
    const int block = std::min(8, clip.spatial_dim);
    std::vector<int> perm(static_cast<std::size_t>(clip.spatial_dim));
    std::iota(perm.begin(), perm.end(), 0);
    for (int start = 0; start + block <= clip.spatial_dim; start += block) {
        // Fisher-Yates within the block; the same permutation is reused on
        // every frame.
        for (int i = block - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.uniform_int(0, i));
            std::swap(perm[static_cast<std::size_t>(start + i)], perm[static_cast<std::size_t>(start + j)]);
        }
    }
    std::vector<double> scratch(static_cast<std::size_t>(clip.spatial_dim));
    for (int t = 0; t < clip.num_frames; ++t) {
        double* frame = clip.frame(t);
        for (int d = 0; d < clip.spatial_dim; ++d) scratch[static_cast<std::size_t>(d)] = frame[perm[static_cast<std::size_t>(d)]];
        std::copy(scratch.begin(), scratch.end(), frame);
    }
}

void apply_spatial_blur(Clip& clip, RngStream& rng) {
    const double sigma = rng.uniform(0.5, 1.5);
    constexpr int kRadius = 2;
    double kernel[2 * kRadius + 1];
    for (int k = -kRadius; k <= kRadius; ++k) {
        kernel[k + kRadius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    }
    std::vector<double> scratch(static_cast<std::size_t>(clip.spatial_dim));
    for (int t = 0; t < clip.num_frames; ++t) {
        double* frame = clip.frame(t);
        for (int d = 0; d < clip.spatial_dim; ++d) {
            double acc = 0.0;
            double weight = 0.0;
            for (int k = -kRadius; k <= kRadius; ++k) {
                const int src = d + k;
                if (src < 0 || src >= clip.spatial_dim) continue;
                acc += kernel[k + kRadius] * frame[src];
                weight += kernel[k + kRadius];
            }
            scratch[static_cast<std::size_t>(d)] = acc / weight;
        }
        std::copy(scratch.begin(), scratch.end(), frame);
    }
}

void apply_cutout(Clip& clip, double fraction, RngStream& rng) {
    const int len = static_cast<int>(std::lround(fraction * clip.spatial_dim));
    if (len <= 0) return;
    const int start = static_cast<int>(rng.uniform_int(0, clip.spatial_dim - len));
    for (int t = 0; t < clip.num_frames; ++t) {
        double* frame = clip.frame(t);
        std::fill(frame + start, frame + start + len, 0.0);
    }
}

}  // namespace

AugmentationSpec AugmentationSpec::standard(double jitter_sigma, int transforms) {
    return {AugmentKind::Standard, jitter_sigma, 0.0, transforms};
}

AugmentationSpec AugmentationSpec::weak(double jitter_sigma) {
    return {AugmentKind::Weak, jitter_sigma, 0.0, 0};
}

AugmentationSpec AugmentationSpec::strong(int transforms, double cutout_fraction) {
    return {AugmentKind::Strong, 0.0, cutout_fraction, transforms};
}

void AugmentationSpec::validate() const {
    if (jitter_sigma < 0.0) throw ConfigError("augment: jitter_sigma must be >= 0");
    if (!(cutout_fraction >= 0.0 && cutout_fraction < 1.0))
        throw ConfigError("augment: cutout_fraction must lie in [0, 1)");
    if (transform_count < 0) throw ConfigError("augment: transform_count must be >= 0");
    if (kind == AugmentKind::Weak && (transform_count != 0 || cutout_fraction != 0.0))
        throw ConfigError("augment: weak augmentation must have no transforms and no cutout");
}

void TemporalViewSpec::validate(int raw_length) const {
    if (primary_frames < 1 || primary_stride < 1 || aux_frames < 1 || aux_stride < 1)
        throw ConfigError("temporal: frame counts and strides must be >= 1");
    if (time_offset < 0) throw ConfigError("temporal: time_offset must be >= 0");
    if (primary_max_offset(raw_length) < 0)
        throw ConfigError("temporal: primary view does not fit in the raw clip");
    if (aux_max_offset(raw_length) < 0)
        throw ConfigError("temporal: auxiliary view does not fit in the raw clip");
}

Clip apply_augmentation(const Clip& clip, const AugmentationSpec& spec, RngStream& rng) {
    spec.validate();
    Clip out = clip;
    add_jitter(out, spec.jitter_sigma, rng);
    for (int i = 0; i < spec.transform_count; ++i) {
        switch (rng.uniform_int(0, 3)) {
            case 0: apply_scale(out, rng); break;
            case 1: apply_bias(out, rng); break;
            case 2: apply_block_permutation(out, rng); break;
            default: apply_spatial_blur(out, rng); break;
        }
    }
    if (spec.cutout_fraction > 0.0) apply_cutout(out, spec.cutout_fraction, rng);
    return out;
}

Clip weak_augment(const Clip& clip, const AugmentationSpec& spec, RngStream& rng) {
    return apply_augmentation(clip, spec, rng);
}

Clip strong_augment(const Clip& clip, const AugmentationSpec& spec, RngStream& rng) {
    return apply_augmentation(clip, spec, rng);
}

Clip standard_augment(const Clip& clip, const AugmentationSpec& spec, RngStream& rng) {
    return apply_augmentation(clip, spec, rng);
}

std::pair<Clip, Clip> temporal_views(const Video& video, const TemporalViewSpec& spec,
                                     RngStream& rng) {
    spec.validate(video.raw_length);
    const int base = static_cast<int>(rng.uniform_int(0, spec.primary_max_offset(video.raw_length)));
    return temporal_views_at(video, spec, base);
}

std::pair<Clip, Clip> temporal_views_at(const Video& video, const TemporalViewSpec& spec,
                                        int base_offset) {
    spec.validate(video.raw_length);
    const int max_primary = spec.primary_max_offset(video.raw_length);
    if (base_offset < 0 || base_offset > max_primary)
        throw PreconditionError("temporal_views: base offset outside the legal range");
    const int max_aux = spec.aux_max_offset(video.raw_length);
    const int aux_offset = std::clamp(base_offset + spec.time_offset, 0, max_aux);
    Clip primary = sample_clip(video, spec.primary_frames, spec.primary_stride, base_offset);
    Clip aux = sample_clip(video, spec.aux_frames, spec.aux_stride, aux_offset);
    return {std::move(primary), std::move(aux)};
}

}  // namespace cmpl
