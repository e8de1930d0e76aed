#include <benchmark/benchmark.h>

#include "cmpl/augment.hpp"
#include "cmpl/config.hpp"
#include "cmpl/netcore.hpp"
#include "cmpl/pseudolabel.hpp"
#include "cmpl/synthdata.hpp"
#include "cmpl/tape.hpp"
#include "cmpl/trainer.hpp"

namespace {

using namespace cmpl;

ExperimentConfig bench_config() {
    auto cfg = default_config();
    cfg.dataset.videos_per_class = 4;
    return cfg;
}

Clip bench_clip(int frames, int dim, std::uint64_t seed) {
    RngStream rng(seed);
    Clip clip;
    clip.num_frames = frames;
    clip.spatial_dim = dim;
    clip.data.resize(static_cast<std::size_t>(frames) * dim);
    for (auto& v : clip.data) v = rng.normal();
    return clip;
}

void BM_RenderVideo(benchmark::State& state) {
    const auto cfg = bench_config();
    RngStream rng(1);
    int id = 0;
    for (auto _ : state) {
        auto video = render_video(cfg.dataset, id % cfg.dataset.num_classes, id, 0.7, rng);
        benchmark::DoNotOptimize(video.frames.data());
        ++id;
    }
}
BENCHMARK(BM_RenderVideo);

void BM_ForwardPrimary(benchmark::State& state) {
    const auto cfg = bench_config();
    const auto net_cfg = cfg.primary_net_config();
    const auto params = build_net(net_cfg, 3);
    const auto clip = bench_clip(net_cfg.input_frames, net_cfg.spatial_dim, 5);
    for (auto _ : state) {
        auto logits = forward_logits(net_cfg, params, clip);
        benchmark::DoNotOptimize(logits.data());
    }
}
BENCHMARK(BM_ForwardPrimary);

void BM_ForwardBackwardPrimary(benchmark::State& state) {
    const auto cfg = bench_config();
    const auto net_cfg = cfg.primary_net_config();
    auto params = build_net(net_cfg, 3);
    const auto clip = bench_clip(net_cfg.input_frames, net_cfg.spatial_dim, 5);
    for (auto _ : state) {
        Tape tape;
        const auto net = register_net(tape, net_cfg, params);
        const auto loss = tape.softmax_cross_entropy(forward_on_tape(tape, net, clip), 0);
        params.zero_grad();
        tape.backward(loss);
        benchmark::DoNotOptimize(params.entries.front().grad.data());
    }
}
BENCHMARK(BM_ForwardBackwardPrimary);

void BM_StrongAugment(benchmark::State& state) {
    const auto clip = bench_clip(8, 64, 7);
    const auto spec = AugmentationSpec::strong(2, 0.25);
    RngStream rng(11);
    for (auto _ : state) {
        auto out = strong_augment(clip, spec, rng);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_StrongAugment);

void BM_BatchDecide(benchmark::State& state) {
    RngStream rng(13);
    std::vector<Prediction> f;
    std::vector<Prediction> a;
    for (int i = 0; i < 10; ++i) {
        Prediction p;
        p.probs.assign(10, 0.0);
        double sum = 0.0;
        for (auto& v : p.probs) {
            v = rng.uniform(0.01, 1.0);
            sum += v;
        }
        for (auto& v : p.probs) v /= sum;
        f.push_back(p);
        a.push_back(p);
        std::swap(a.back().probs[0], a.back().probs[1]);
    }
    for (auto _ : state) {
        auto decisions = batch_decide(SchemeId::Cross, f, a, 0.9);
        benchmark::DoNotOptimize(decisions.data());
    }
}
BENCHMARK(BM_BatchDecide);

void BM_TrainEpoch(benchmark::State& state) {
    auto cfg = bench_config();
    cfg.dataset.videos_per_class = 20;
    cfg.val_videos_per_class = 2;
    cfg.labeled_fraction = 0.1;
    cfg.epochs = 1;
    cfg.snapshot_interval = 0;
    const auto dataset = generate_dataset(cfg.dataset);
    const auto split = split_labeled(dataset, cfg.labeled_fraction, cfg.split_scheme, cfg.seed);
    auto spec = cfg.dataset;
    spec.videos_per_class = cfg.val_videos_per_class;
    const auto validation =
        generate_dataset(spec, cfg.dataset.num_classes * cfg.dataset.videos_per_class);
    for (auto _ : state) {
        auto result = train(cfg, dataset, split, validation);
        benchmark::DoNotOptimize(result.log.epochs.data());
    }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
