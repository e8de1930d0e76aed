#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "cmpl/errors.hpp"
#include "cmpl/synthdata.hpp"

using namespace cmpl;

namespace {

DatasetSpec small_spec() {
    DatasetSpec spec;
    spec.num_classes = 4;
    spec.spatial_class_count = 2;
    spec.temporal_class_count = 2;
    spec.videos_per_class = 6;
    spec.noise_sigma = 0.1;
    spec.seed = 11;
    spec.raw_length = 16;
    spec.spatial_dim = 8;
    return spec;
}

}  // namespace

TEST_CASE("generate_dataset is deterministic and counts match") {
    const auto spec = small_spec();
    const auto a = generate_dataset(spec);
    const auto b = generate_dataset(spec);
    REQUIRE(a.size() == 24);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].class_id == b[i].class_id);
        CHECK(a[i].frames == b[i].frames);  // bitwise
    }
    // 6 videos per class, grouped by class.
    for (int c = 0; c < 4; ++c) {
        const long count = std::count_if(a.begin(), a.end(),
                                         [c](const Video& v) { return v.class_id == c; });
        CHECK(count == 6);
    }
}

TEST_CASE("zero noise spatial frames equal the class template exactly") {
    DatasetSpec spec;
    spec.num_classes = 2;
    spec.spatial_class_count = 2;
    spec.temporal_class_count = 0;
    spec.videos_per_class = 3;
    spec.noise_sigma = 0.0;
    spec.seed = 5;
    spec.raw_length = 8;
    spec.spatial_dim = 6;
    const auto videos = generate_dataset(spec);
    const auto tmpl = class_template(spec, 0);
    for (const auto& video : videos) {
        if (video.class_id != 0) continue;
        for (int t = 0; t < video.raw_length; ++t) {
            for (int d = 0; d < video.spatial_dim; ++d) {
                CHECK(video.frame(t)[d] == tmpl[static_cast<std::size_t>(d)]);
            }
        }
    }
}

TEST_CASE("same-class videos at zero noise are identical up to phase") {
    auto spec = small_spec();
    spec.noise_sigma = 0.0;
    RngStream unused_a(1);
    RngStream unused_b(2);
    // Temporal class, pinned equal phases -> identical videos.
    const auto v1 = render_video(spec, 2, 100, 1.25, unused_a);
    const auto v2 = render_video(spec, 2, 101, 1.25, unused_b);
    CHECK(v1.frames == v2.frames);
    // Different phases -> different frames for temporal classes.
    const auto v3 = render_video(spec, 2, 102, 2.5, unused_b);
    CHECK(v1.frames != v3.frames);
    // Spatial classes with zero motion amplitude ignore the phase entirely.
    const auto s1 = render_video(spec, 0, 103, 0.3, unused_a);
    const auto s2 = render_video(spec, 0, 104, 2.9, unused_b);
    CHECK(s1.frames == s2.frames);
}

TEST_CASE("nearest-centroid oracle classifies spatial videos") {
    // Independent brute-force oracle: frame mean, nearest class template in
    // squared distance. Run on the default benchmark shape at sigma = 0.1.
    DatasetSpec spec;
    spec.num_classes = 10;
    spec.spatial_class_count = 5;
    spec.temporal_class_count = 5;
    spec.videos_per_class = 20;
    spec.noise_sigma = 0.1;
    spec.seed = 3;
    const auto videos = generate_dataset(spec);

    std::vector<std::vector<double>> templates;
    for (int c = 0; c < spec.num_classes; ++c) templates.push_back(class_template(spec, c));

    long spatial_total = 0;
    long spatial_correct = 0;
    for (const auto& video : videos) {
        std::vector<double> mean(static_cast<std::size_t>(video.spatial_dim), 0.0);
        for (int t = 0; t < video.raw_length; ++t) {
            for (int d = 0; d < video.spatial_dim; ++d) mean[static_cast<std::size_t>(d)] += video.frame(t)[d];
        }
        for (auto& m : mean) m /= video.raw_length;
        int best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int c = 0; c < spec.num_classes; ++c) {
            double dist = 0.0;
            for (std::size_t d = 0; d < mean.size(); ++d) {
                const double diff = mean[d] - templates[static_cast<std::size_t>(c)][d];
                dist += diff * diff;
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = c;
            }
        }
        if (video.kind == VideoKind::Spatial) {
            ++spatial_total;
            if (best == video.class_id) ++spatial_correct;
        }
    }
    REQUIRE(spatial_total == 100);
    CHECK(static_cast<double>(spatial_correct) / static_cast<double>(spatial_total) >= 0.95);
}

TEST_CASE("split_labeled uniform arithmetic") {
    DatasetSpec spec;
    spec.num_classes = 10;
    spec.spatial_class_count = 5;
    spec.temporal_class_count = 5;
    spec.videos_per_class = 200;
    spec.noise_sigma = 0.0;
    spec.seed = 1;
    spec.raw_length = 4;
    spec.spatial_dim = 2;
    const auto videos = generate_dataset(spec);

    SUBCASE("one percent takes 2 per class") {
        const auto split = split_labeled(videos, 0.01, SplitScheme::Uniform, 9);
        CHECK(split.labeled.size() == 20);
        CHECK(split.unlabeled.size() == 1980);
        for (int c = 0; c < 10; ++c) {
            const long n = std::count_if(split.labeled.begin(), split.labeled.end(), [&](int i) {
                return videos[static_cast<std::size_t>(i)].class_id == c;
            });
            CHECK(n == 2);
        }
    }
    SUBCASE("ten percent takes 20 per class") {
        const auto split = split_labeled(videos, 0.10, SplitScheme::Uniform, 9);
        CHECK(split.labeled.size() == 200);
        for (int c = 0; c < 10; ++c) {
            const long n = std::count_if(split.labeled.begin(), split.labeled.end(), [&](int i) {
                return videos[static_cast<std::size_t>(i)].class_id == c;
            });
            CHECK(n == 20);
        }
    }
    SUBCASE("partition property") {
        const auto split = split_labeled(videos, 0.05, SplitScheme::Uniform, 12);
        CHECK(split.labeled.size() + split.unlabeled.size() == videos.size());
        std::set<int> all(split.labeled.begin(), split.labeled.end());
        all.insert(split.unlabeled.begin(), split.unlabeled.end());
        CHECK(all.size() == videos.size());
    }
    SUBCASE("deterministic per seed") {
        const auto s1 = split_labeled(videos, 0.05, SplitScheme::Uniform, 12);
        const auto s2 = split_labeled(videos, 0.05, SplitScheme::Uniform, 12);
        CHECK(s1.labeled == s2.labeled);
        CHECK(s1.unlabeled == s2.unlabeled);
    }
}

TEST_CASE("split_labeled category-wise proportionality") {
    // Imbalanced toy set: 300 videos of class 0, 100 of class 1.
    std::vector<Video> videos;
    for (int i = 0; i < 400; ++i) {
        Video v;
        v.id = i;
        v.class_id = i < 300 ? 0 : 1;
        v.raw_length = 1;
        v.spatial_dim = 1;
        v.frames = {0.0};
        videos.push_back(v);
    }
    const auto split = split_labeled(videos, 0.1, SplitScheme::CategoryWise, 4);
    const long n0 = std::count_if(split.labeled.begin(), split.labeled.end(),
                                  [&](int i) { return videos[static_cast<std::size_t>(i)].class_id == 0; });
    const long n1 = static_cast<long>(split.labeled.size()) - n0;
    CHECK(n0 == 30);
    CHECK(n1 == 10);
}

TEST_CASE("split_labeled rejects fractions that empty a class") {
    const auto videos = generate_dataset(small_spec());  // 6 per class
    CHECK_THROWS_AS(split_labeled(videos, 0.01, SplitScheme::Uniform, 1), ConfigError);
}

TEST_CASE("sample_clip index arithmetic") {
    DatasetSpec spec = small_spec();
    spec.raw_length = 64;
    spec.spatial_dim = 4;
    spec.noise_sigma = 0.2;
    const auto videos = generate_dataset(spec);
    const auto& video = videos[0];

    SUBCASE("8x8 sparse sampling") {
        const auto clip = sample_clip(video, 8, 8, 0);
        REQUIRE(clip.num_frames == 8);
        for (int t = 0; t < 8; ++t) {
            for (int d = 0; d < 4; ++d) CHECK(clip.frame(t)[d] == video.frame(8 * t)[d]);
        }
    }
    SUBCASE("16x4 sparse sampling") {
        const auto clip = sample_clip(video, 16, 4, 0);
        REQUIRE(clip.num_frames == 16);
        for (int t = 0; t < 16; ++t) {
            for (int d = 0; d < 4; ++d) CHECK(clip.frame(t)[d] == video.frame(4 * t)[d]);
        }
    }
    SUBCASE("identity sampling") {
        const auto clip = sample_clip(video, 64, 1, 0);
        CHECK(clip.data == video.frames);
    }
    SUBCASE("length is always the requested count") {
        for (int t : {1, 2, 4, 8}) {
            for (int s : {1, 2, 4}) {
                for (int off : {0, 3}) {
                    if (t * s + off > video.raw_length) continue;
                    CHECK(sample_clip(video, t, s, off).num_frames == t);
                }
            }
        }
    }
    SUBCASE("out of range throws") {
        CHECK_THROWS_AS(sample_clip(video, 8, 8, 1), PreconditionError);
        CHECK_THROWS_AS(sample_clip(video, 65, 1, 0), PreconditionError);
    }
}

TEST_CASE("dataset file round trip is lossless") {
    const auto spec = small_spec();
    const auto videos = generate_dataset(spec);
    const auto dir = std::filesystem::temp_directory_path() / "cmpl_test_dataset";
    std::filesystem::create_directories(dir);
    const auto file = dir / "dataset.bin";
    save_dataset(file, spec, videos);
    save_dataset_manifest(dir / "dataset.manifest", spec);

    const auto loaded = load_dataset(file);
    REQUIRE(loaded.size() == videos.size());
    for (std::size_t i = 0; i < videos.size(); ++i) {
        CHECK(loaded[i].class_id == videos[i].class_id);
        CHECK((loaded[i].kind == videos[i].kind));
        CHECK(loaded[i].frames == videos[i].frames);  // float-quantized at generation
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("invalid dataset specs are rejected") {
    auto spec = small_spec();
    spec.spatial_class_count = 3;  // 3 + 2 != 4
    CHECK_THROWS_AS(generate_dataset(spec), ConfigError);
    spec = small_spec();
    spec.videos_per_class = 0;
    CHECK_THROWS_AS(generate_dataset(spec), ConfigError);
    spec = small_spec();
    spec.noise_sigma = -1.0;
    CHECK_THROWS_AS(generate_dataset(spec), ConfigError);
}
