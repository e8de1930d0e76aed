#include <doctest.h>

#include <cmath>

#include "cmpl/errors.hpp"
#include "cmpl/metrics.hpp"

using namespace cmpl;

namespace {

PseudoLabelDecision make_decision(bool confident, int target) {
    PseudoLabelDecision d;
    d.confident = confident;
    d.target_class = target;
    d.confidence = confident ? 0.95 : 0.2;
    return d;
}

ClassAccuracyTable table_from(std::vector<long> correct, std::vector<long> total) {
    ClassAccuracyTable t;
    t.correct = std::move(correct);
    t.total = std::move(total);
    return t;
}

ScalableNetConfig tiny_net_config() {
    ScalableNetConfig cfg;
    cfg.depth_blocks = 1;
    cfg.width_factor = 1.0;
    cfg.base_channels = 4;
    cfg.num_classes = 2;
    cfg.input_frames = 8;
    cfg.spatial_dim = 6;
    return cfg;
}

}  // namespace

TEST_CASE("pseudo label ratio counting") {
    std::vector<int> truth = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0};

    SUBCASE("no confident decisions") {
        std::vector<PseudoLabelDecision> decisions(10, make_decision(false, 0));
        CHECK(pseudo_label_ratio(decisions, truth) == 0.0);
    }
    SUBCASE("all confident and correct") {
        std::vector<PseudoLabelDecision> decisions;
        for (int t : truth) decisions.push_back(make_decision(true, t));
        CHECK(pseudo_label_ratio(decisions, truth) == 1.0);
    }
    SUBCASE("three confident, two correct") {
        std::vector<PseudoLabelDecision> decisions(10, make_decision(false, 0));
        decisions[0] = make_decision(true, 0);   // correct
        decisions[1] = make_decision(true, 1);   // correct
        decisions[2] = make_decision(true, 0);   // wrong (truth 2)
        CHECK(pseudo_label_ratio(decisions, truth) == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("length mismatch throws") {
        std::vector<PseudoLabelDecision> decisions(3);
        CHECK_THROWS_AS(pseudo_label_ratio(decisions, truth), PreconditionError);
    }
    SUBCASE("monotone under adding decisions with a fixed denominator") {
        std::vector<PseudoLabelDecision> decisions(10, make_decision(false, 0));
        const double base = pseudo_label_ratio(decisions, truth);
        auto plus_correct = decisions;
        plus_correct[4] = make_decision(true, truth[4]);
        CHECK(pseudo_label_ratio(plus_correct, truth) >= base);
        auto plus_wrong = plus_correct;
        plus_wrong[5] = make_decision(true, (truth[5] + 1) % 3);
        CHECK(pseudo_label_ratio(plus_wrong, truth) == pseudo_label_ratio(plus_correct, truth));
    }
}

TEST_CASE("per-class gap") {
    SUBCASE("identical tables give zero gaps") {
        const auto t = table_from({5, 3, 8}, {10, 10, 10});
        for (const auto& g : per_class_gap(t, t)) CHECK(g.gap == 0.0);
    }
    SUBCASE("opposing tables") {
        const auto small = table_from({10, 0}, {10, 10});
        const auto large = table_from({0, 10}, {10, 10});
        const auto gaps = per_class_gap(small, large);
        REQUIRE(gaps.size() == 2);
        // Sorted by the large net's accuracy ascending: class 0 first.
        CHECK(gaps[0].class_id == 0);
        CHECK(gaps[0].gap == 1.0);
        CHECK(gaps[1].class_id == 1);
        CHECK(gaps[1].gap == -1.0);
    }
    SUBCASE("random tables match elementwise subtraction") {
        const auto small = table_from({1, 9, 4, 6}, {10, 10, 10, 10});
        const auto large = table_from({5, 2, 8, 6}, {10, 10, 10, 10});
        for (const auto& g : per_class_gap(small, large)) {
            CHECK(g.gap == doctest::Approx(small.accuracy(g.class_id) - large.accuracy(g.class_id))
                               .epsilon(1e-15));
        }
    }
    SUBCASE("class count mismatch throws") {
        CHECK_THROWS_AS(per_class_gap(table_from({1}, {2}), table_from({1, 1}, {2, 2})),
                        PreconditionError);
    }
}

TEST_CASE("stride degradation") {
    DatasetSpec spec;
    spec.num_classes = 2;
    spec.spatial_class_count = 1;
    spec.temporal_class_count = 1;
    spec.videos_per_class = 10;
    spec.noise_sigma = 0.1;
    spec.seed = 29;
    spec.raw_length = 16;
    spec.spatial_dim = 6;
    const auto videos = generate_dataset(spec);
    const auto cfg = tiny_net_config();
    const std::vector<int> strides = {1, 2, 4, 8};

    SUBCASE("stride one drops nothing by construction") {
        const auto params = build_net(cfg, 3);
        const auto result = stride_degradation(cfg, params, videos, strides, 2);
        CHECK(result.rows[0].stride == 1);
        CHECK(result.rows[0].drop_ratio == 0.0);
    }
    SUBCASE("constant-output nets never degrade") {
        auto params = build_net(cfg, 3);
        for (auto& e : params.entries) std::fill(e.value.begin(), e.value.end(), 0.0);
        const auto result = stride_degradation(cfg, params, videos, strides, 2);
        for (const auto& row : result.rows) CHECK(row.drop_ratio == 0.0);
    }
    SUBCASE("full-stride evaluation matches a frame-repeat oracle") {
        const auto params = build_net(cfg, 7);
        const auto result = stride_degradation(cfg, params, videos, strides, 2);

        // Oracle: repeat the first frame of the evaluation clip eight times.
        long correct = 0;
        for (const auto& video : videos) {
            const auto clip = sample_clip(video, 8, 2, 0);  // max offset 0 -> center is 0
            Clip repeated = clip;
            for (int t = 0; t < 8; ++t) {
                const double* src = clip.frame(0);
                std::copy(src, src + clip.spatial_dim, repeated.frame(t));
            }
            Prediction pred{softmax(forward_logits(cfg, params, repeated))};
            if (pred.argmax() == video.class_id) ++correct;
        }
        const double oracle_acc = static_cast<double>(correct) / static_cast<double>(videos.size());
        CHECK(result.rows[3].stride == 8);
        CHECK(result.rows[3].accuracy == oracle_acc);
    }
    SUBCASE("stride not dividing the clip length throws") {
        const auto params = build_net(cfg, 3);
        const std::vector<int> bad = {3};
        CHECK_THROWS_AS(stride_degradation(cfg, params, videos, bad, 2), PreconditionError);
    }
}

TEST_CASE("gain vs auxiliary accuracy bins") {
    SUBCASE("all classes in one bin give the global mean") {
        const std::vector<double> gains = {0.1, 0.3, 0.2};
        const std::vector<double> aux = {0.51, 0.52, 0.54};
        const auto bins = gain_vs_aux_bins(gains, aux);
        REQUIRE(bins.size() == 1);
        CHECK(bins[0].mean_gain == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(bins[0].count == 3);
    }
    SUBCASE("bin boundaries split at multiples of 0.05") {
        const std::vector<double> gains = {0.1, 0.2};
        const std::vector<double> aux = {0.02, 0.07};
        const auto bins = gain_vs_aux_bins(gains, aux);
        REQUIRE(bins.size() == 2);
        CHECK(bins[0].bin == 0);
        CHECK(bins[1].bin == 1);
    }
    SUBCASE("zero gains give zero bin means") {
        const std::vector<double> gains = {0.0, 0.0, 0.0, 0.0};
        const std::vector<double> aux = {0.1, 0.4, 0.4, 0.9};
        for (const auto& b : gain_vs_aux_bins(gains, aux)) CHECK(b.mean_gain == 0.0);
    }
    SUBCASE("bin means stay within the member range") {
        const std::vector<double> gains = {-0.2, 0.5, 0.1, 0.4, 0.3};
        const std::vector<double> aux = {0.12, 0.13, 0.38, 0.41, 0.44};
        for (const auto& b : gain_vs_aux_bins(gains, aux)) {
            CHECK(b.mean_gain >= -0.2);
            CHECK(b.mean_gain <= 0.5);
        }
    }
}

TEST_CASE("subset accuracy curve") {
    MetricsLog log;
    log.tau = 0.9;

    SnapshotRecord epoch10;
    epoch10.epoch = 10;
    // Four entries: two aux-confident (one where the primary is right and the
    // aux wrong, one where both are right), two unconfident.
    epoch10.entries = {
        {0, 1, 1, 0.80, 1, 0.95},   // in subset: primary right, aux right
        {1, 0, 0, 0.70, 1, 0.93},   // in subset: primary right, aux wrong
        {2, 1, 0, 0.60, 1, 0.50},   // not confident
        {3, 0, 1, 0.55, 0, 0.89},   // not confident (0.89 < 0.9)
    };
    log.snapshots.push_back(epoch10);

    SnapshotRecord epoch20;
    epoch20.epoch = 20;
    epoch20.entries = {
        {0, 1, 1, 0.80, 1, 0.99},
        {1, 0, 1, 0.70, 1, 0.99},  // primary wrong, aux wrong
        {2, 1, 1, 0.60, 1, 0.99},
        {3, 0, 0, 0.55, 0, 0.10},  // not confident
    };
    log.snapshots.push_back(epoch20);

    SUBCASE("recount oracle") {
        const auto curve = subset_accuracy_curve(log, nullptr, 10);
        REQUIRE(curve.size() == 2);
        CHECK(curve[0].epoch == 10);
        CHECK(curve[0].subset_size == 2);
        CHECK(curve[0].acc_primary == 1.0);   // both subset entries predicted right
        CHECK(curve[0].acc_aux == 0.5);       // one of two aux labels correct
        CHECK(curve[0].acc_reference == -1.0);
        CHECK(curve[1].epoch == 20);
        CHECK(curve[1].subset_size == 3);
        CHECK(curve[1].acc_primary == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(curve[1].acc_aux == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("reference net joined by video index") {
        MetricsLog ref;
        ref.tau = 0.9;
        SnapshotRecord r10;
        r10.epoch = 10;
        r10.entries = {
            {0, 1, 0, 0.5, 0, 0.5},  // reference predicts 0, truth 1 -> wrong
            {1, 0, 0, 0.5, 0, 0.5},  // right
            {2, 1, 1, 0.5, 1, 0.5},
            {3, 0, 0, 0.5, 0, 0.5},
        };
        ref.snapshots.push_back(r10);
        SnapshotRecord r20 = log.snapshots[1];
        ref.snapshots.push_back(r20);

        const auto curve = subset_accuracy_curve(log, &ref, 10);
        REQUIRE(curve.size() == 2);
        CHECK(curve[0].acc_reference == 0.5);  // subset {0, 1}: wrong, right
    }
    SUBCASE("epochs with empty subsets are omitted") {
        MetricsLog sparse;
        sparse.tau = 0.9;
        SnapshotRecord r;
        r.epoch = 10;
        r.entries = {{0, 1, 1, 0.5, 1, 0.2}};  // never confident
        sparse.snapshots.push_back(r);
        SnapshotRecord r2;
        r2.epoch = 20;
        r2.entries = {{0, 1, 1, 0.5, 1, 0.95}};
        sparse.snapshots.push_back(r2);
        const auto curve = subset_accuracy_curve(sparse, nullptr, 10);
        REQUIRE(curve.size() == 1);
        CHECK(curve[0].epoch == 20);
        CHECK(curve[0].acc_aux == 1.0);  // a perfect aux subset scores one
    }
    SUBCASE("missing snapshots raise a reporting error") {
        MetricsLog empty;
        CHECK_THROWS_AS(subset_accuracy_curve(empty, nullptr, 10), ReportError);
        MetricsLog ref;  // reference without matching epochs
        ref.tau = 0.9;
        CHECK_THROWS_AS(subset_accuracy_curve(log, &ref, 10), ReportError);
    }
}
