#include <doctest.h>

#include <set>

#include "cmpl/augment.hpp"
#include "cmpl/errors.hpp"
#include "cmpl/synthdata.hpp"

using namespace cmpl;

namespace {

Clip make_clip(int frames, int dim, double fill = 1.0) {
    Clip clip;
    clip.num_frames = frames;
    clip.spatial_dim = dim;
    clip.data.assign(static_cast<std::size_t>(frames) * dim, fill);
    // Non-constant content so permutations are observable.
    for (std::size_t i = 0; i < clip.data.size(); ++i) clip.data[i] += 0.01 * static_cast<double>(i);
    return clip;
}

Video make_video(int raw_length, int dim) {
    Video v;
    v.id = 0;
    v.raw_length = raw_length;
    v.spatial_dim = dim;
    v.frames.resize(static_cast<std::size_t>(raw_length) * dim);
    for (std::size_t i = 0; i < v.frames.size(); ++i) v.frames[i] = static_cast<double>(i);
    return v;
}

}  // namespace

TEST_CASE("weak augmentation with zero jitter is the identity") {
    const auto clip = make_clip(4, 16);
    RngStream rng(1);
    const auto out = weak_augment(clip, AugmentationSpec::weak(0.0), rng);
    CHECK(out.data == clip.data);
}

TEST_CASE("augmentations always preserve the clip shape") {
    RngStream rng(7);
    const auto specs = {AugmentationSpec::weak(0.05), AugmentationSpec::standard(0.05, 2),
                        AugmentationSpec::strong(3, 0.25)};
    for (const auto& spec : specs) {
        for (int frames : {1, 4, 8}) {
            for (int dim : {8, 64}) {
                const auto clip = make_clip(frames, dim);
                const auto out = apply_augmentation(clip, spec, rng);
                CHECK(out.num_frames == frames);
                CHECK(out.spatial_dim == dim);
                CHECK(out.data.size() == clip.data.size());
            }
        }
    }
}

TEST_CASE("same stream seed reproduces the same augmentation") {
    const auto clip = make_clip(6, 32);
    RngStream a(42);
    RngStream b(42);
    const auto spec = AugmentationSpec::strong(2, 0.25);
    const auto out_a = strong_augment(clip, spec, a);
    const auto out_b = strong_augment(clip, spec, b);
    CHECK(out_a.data == out_b.data);
}

TEST_CASE("weak jitter is temporally consistent") {
    // Identical frames, so "same jitter field on every frame" implies the
    // output frames stay bitwise identical to each other.
    Clip clip;
    clip.num_frames = 5;
    clip.spatial_dim = 12;
    clip.data.resize(60);
    for (int t = 0; t < 5; ++t) {
        for (int d = 0; d < 12; ++d) clip.frame(t)[d] = 0.25 * d - 1.0;
    }
    RngStream rng(3);
    const auto out = weak_augment(clip, AugmentationSpec::weak(0.5), rng);
    for (int t = 1; t < 5; ++t) {
        for (int d = 0; d < 12; ++d) {
            CHECK(out.frame(0)[d] == out.frame(t)[d]);
        }
    }
}

TEST_CASE("cutout zeroes one contiguous block, identically on every frame") {
    Clip clip = make_clip(7, 64);
    for (auto& v : clip.data) v += 1.0;  // keep all entries nonzero
    RngStream rng(11);
    const auto spec = AugmentationSpec::strong(0, 0.25);
    const auto out = strong_augment(clip, spec, rng);

    std::set<int> zeroed_frame0;
    for (int d = 0; d < 64; ++d) {
        if (out.frame(0)[d] == 0.0) zeroed_frame0.insert(d);
    }
    CHECK(zeroed_frame0.size() == 16);
    const int lo = *zeroed_frame0.begin();
    const int hi = *zeroed_frame0.rbegin();
    CHECK(hi - lo + 1 == 16);  // contiguous

    for (int t = 1; t < 7; ++t) {
        std::set<int> zeroed;
        for (int d = 0; d < 64; ++d) {
            if (out.frame(t)[d] == 0.0) zeroed.insert(d);
        }
        CHECK(zeroed == zeroed_frame0);
    }
}

TEST_CASE("strong augmentation with no transforms and no cutout is the identity") {
    const auto clip = make_clip(4, 16);
    RngStream rng(5);
    const auto out = strong_augment(clip, AugmentationSpec::strong(0, 0.0), rng);
    CHECK(out.data == clip.data);
}

TEST_CASE("weak spec invariant is enforced") {
    AugmentationSpec bad = AugmentationSpec::weak(0.01);
    bad.transform_count = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("temporal views") {
    const auto video = make_video(64, 4);

    SUBCASE("degenerate offset gives identical clips") {
        TemporalViewSpec spec;
        spec.primary_frames = 8;
        spec.primary_stride = 8;
        spec.aux_frames = 8;
        spec.aux_stride = 8;
        spec.time_offset = 0;
        RngStream rng(2);
        const auto [f, a] = temporal_views(video, spec, rng);
        CHECK(f.data == a.data);
        CHECK(f.offset == a.offset);
    }
    SUBCASE("16x4 view contains every 8x8 frame index") {
        TemporalViewSpec spec;  // defaults: 8x8 and 16x4
        const auto [f, a] = temporal_views_at(video, spec, 0);
        for (int t = 0; t < 8; ++t) {
            for (int d = 0; d < 4; ++d) {
                CHECK(f.frame(t)[d] == a.frame(2 * t)[d]);  // 8t = 4 * (2t)
            }
        }
    }
    SUBCASE("time offset clamps to the legal range") {
        TemporalViewSpec spec;
        spec.primary_frames = 4;
        spec.primary_stride = 4;  // span 16, max offset 48
        spec.aux_frames = 4;
        spec.aux_stride = 4;
        spec.time_offset = 100;  // far beyond the legal maximum
        const auto [f, a] = temporal_views_at(video, spec, 0);
        CHECK(f.offset == 0);
        CHECK(a.offset == 48);  // min(t_s, legal max)
    }
    SUBCASE("infeasible view spec is a configuration error") {
        TemporalViewSpec spec;
        spec.primary_frames = 32;
        spec.primary_stride = 4;  // span 128 > 64
        RngStream rng(2);
        CHECK_THROWS_AS(temporal_views(video, spec, rng), ConfigError);
    }
}

TEST_CASE("weak composed with weak at zero jitter is still the identity") {
    const auto clip = make_clip(4, 16);
    RngStream rng(9);
    const auto spec = AugmentationSpec::weak(0.0);
    const auto out = weak_augment(weak_augment(clip, spec, rng), spec, rng);
    CHECK(out.data == clip.data);
}

TEST_CASE("temporal views are deterministic per stream seed") {
    const auto video = make_video(64, 4);
    TemporalViewSpec spec;
    spec.primary_frames = 4;
    spec.primary_stride = 4;
    spec.aux_frames = 4;
    spec.aux_stride = 4;
    spec.time_offset = 3;
    RngStream a(77);
    RngStream b(77);
    const auto [f1, a1] = temporal_views(video, spec, a);
    const auto [f2, a2] = temporal_views(video, spec, b);
    CHECK(f1.offset == f2.offset);
    CHECK(a1.offset == a2.offset);
    CHECK(f1.data == f2.data);
    CHECK(a1.data == a2.data);
}
