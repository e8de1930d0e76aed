#include "cmpl/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cmpl/binio.hpp"
#include "cmpl/errors.hpp"
#include "cmpl/rng.hpp"

namespace cmpl {

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'M', 'P', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kPi = 3.14159265358979323846;

std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void fill_fan_in_uniform(std::vector<double>& values, std::size_t fan_in, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : values) v = rng.uniform(-bound, bound);
}

}  // namespace

int ScalableNetConfig::channels() const {
    return std::max(1, static_cast<int>(std::lround(base_channels * width_factor)));
}

void ScalableNetConfig::validate() const {
    if (depth_blocks < 1) throw ConfigError("net: depth_blocks must be >= 1");
    if (!(width_factor > 0.0 && width_factor <= 1.0))
        throw ConfigError("net: width_factor must lie in (0, 1]");
    if (base_channels < 1) throw ConfigError("net: base_channels must be >= 1");
    if (num_classes < 2) throw ConfigError("net: num_classes must be >= 2");
    if (input_frames < 1) throw ConfigError("net: input_frames must be >= 1");
    if (spatial_dim < 1) throw ConfigError("net: spatial_dim must be >= 1");
}

ParamStore::Entry& ParamStore::add(std::string name, std::vector<std::size_t> shape) {
    Entry entry;
    entry.name = std::move(name);
    entry.shape = std::move(shape);
    const auto n = shape_size(entry.shape);
    entry.value.assign(n, 0.0);
    entry.grad.assign(n, 0.0);
    entry.momentum.assign(n, 0.0);
    entries.push_back(std::move(entry));
    return entries.back();
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
    for (auto& e : entries) {
        if (e.name == name) return e;
    }
    throw UsageError("ParamStore: no entry named " + name);
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return e;
    }
    throw UsageError("ParamStore: no entry named " + name);
}

std::size_t ParamStore::total_parameters() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& e : entries) std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

void OptimizerConfig::validate() const {
    if (!(base_lr > 0.0)) throw ConfigError("optimizer: base_lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("optimizer: momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("optimizer: weight_decay must be >= 0");
    if (total_steps < 1) throw ConfigError("optimizer: total_steps must be >= 1");
}

ParamStore build_net(const ScalableNetConfig& config, std::uint64_t seed) {
    config.validate();
    const int channels = config.channels();
    const auto c = static_cast<std::size_t>(channels);
    const auto d = static_cast<std::size_t>(config.spatial_dim);
    const auto k = static_cast<std::size_t>(config.num_classes);

    ParamStore store;
    RngStream rng(seed);

    auto& embed_w = store.add("embed.w", {d, c});
    fill_fan_in_uniform(embed_w.value, d, rng);
    store.add("embed.b", {c});

    for (int i = 0; i < config.depth_blocks; ++i) {
        auto& conv_w = store.add("block" + std::to_string(i) + ".w", {3, c, c});
        fill_fan_in_uniform(conv_w.value, 3 * c, rng);
        store.add("block" + std::to_string(i) + ".b", {c});
    }

    auto& head_w = store.add("head.w", {c, k});
    fill_fan_in_uniform(head_w.value, c, rng);
    store.add("head.b", {k});
    return store;
}

namespace kernels {

void frames_affine(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, int frames, int in_dim, int out_dim,
                   std::span<double> out) {
    for (int t = 0; t < frames; ++t) {
        double* out_t = out.data() + static_cast<std::size_t>(t) * out_dim;
        std::copy(b.begin(), b.end(), out_t);
        const double* x_t = x.data() + static_cast<std::size_t>(t) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            const double xv = x_t[i];
            const double* w_row = w.data() + static_cast<std::size_t>(i) * out_dim;
            for (int o = 0; o < out_dim; ++o) out_t[o] += xv * w_row[o];
        }
    }
}

void conv1d_time(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                 int frames, int channels, std::span<double> out) {
    const auto c = static_cast<std::size_t>(channels);
    for (int t = 0; t < frames; ++t) {
        double* out_t = out.data() + static_cast<std::size_t>(t) * c;
        std::copy(b.begin(), b.end(), out_t);
        for (int k = 0; k < 3; ++k) {
            const int src = t + k - 1;
            if (src < 0 || src >= frames) continue;
            const double* x_s = x.data() + static_cast<std::size_t>(src) * c;
            const double* w_k = w.data() + static_cast<std::size_t>(k) * c * c;
            for (std::size_t ci = 0; ci < c; ++ci) {
                const double xv = x_s[ci];
                const double* w_row = w_k + ci * c;
                for (std::size_t co = 0; co < c; ++co) out_t[co] += xv * w_row[co];
            }
        }
    }
}

void relu(std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void time_mean(std::span<const double> x, int frames, int channels, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int t = 0; t < frames; ++t) {
        const double* x_t = x.data() + static_cast<std::size_t>(t) * channels;
        for (int c = 0; c < channels; ++c) out[c] += x_t[c];
    }
    const double inv = 1.0 / frames;
    for (int c = 0; c < channels; ++c) out[c] *= inv;
}

}  // namespace kernels

std::vector<double> forward_logits(const ScalableNetConfig& config, const ParamStore& params,
                                   std::span<const double> frames) {
    const int t = config.input_frames;
    const int c = config.channels();
    if (frames.size() != static_cast<std::size_t>(t) * config.spatial_dim)
        throw PreconditionError("forward: clip shape does not match the net config");

    std::vector<double> a(static_cast<std::size_t>(t) * c);
    std::vector<double> b(a.size());
    kernels::frames_affine(frames, params.at("embed.w").value, params.at("embed.b").value, t,
                           config.spatial_dim, c, a);
    kernels::relu(a, a);
    for (int i = 0; i < config.depth_blocks; ++i) {
        const auto& w = params.at("block" + std::to_string(i) + ".w").value;
        const auto& bias = params.at("block" + std::to_string(i) + ".b").value;
        kernels::conv1d_time(a, w, bias, t, c, b);
        kernels::relu(b, b);
        std::swap(a, b);
    }
    std::vector<double> pooled(static_cast<std::size_t>(c));
    kernels::time_mean(a, t, c, pooled);
    std::vector<double> logits(static_cast<std::size_t>(config.num_classes));
    kernels::frames_affine(pooled, params.at("head.w").value, params.at("head.b").value, 1, c,
                           config.num_classes, logits);
    for (double v : logits) {
        if (!std::isfinite(v)) throw NumericError("forward: non-finite logits");
    }
    return logits;
}

std::vector<double> forward_logits(const ScalableNetConfig& config, const ParamStore& params,
                                   const Clip& clip) {
    if (clip.num_frames != config.input_frames)
        throw PreconditionError("forward: clip frame count does not match config.input_frames");
    return forward_logits(config, params, std::span<const double>(clip.data));
}

std::vector<std::vector<double>> forward(const ScalableNetConfig& config, const ParamStore& params,
                                         std::span<const Clip> batch) {
    std::vector<std::vector<double>> out;
    out.reserve(batch.size());
    for (const auto& clip : batch) out.push_back(forward_logits(config, params, clip));
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw PreconditionError("softmax: empty logits");
    double max_logit = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");
        max_logit = std::max(max_logit, v);
    }
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        sum += probs[i];
    }
    const double inv = 1.0 / sum;
    for (auto& p : probs) p *= inv;
    return probs;
}

double cross_entropy_logits(std::span<const double> logits, int target_class) {
    if (target_class < 0 || target_class >= static_cast<int>(logits.size()))
        throw PreconditionError("cross_entropy: target class out of range");
    double max_logit = logits[0];
    for (double v : logits) max_logit = std::max(max_logit, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - max_logit);
    return max_logit + std::log(sum) - logits[static_cast<std::size_t>(target_class)];
}

double cross_entropy_probs(std::span<const double> probs, int target_class) {
    if (target_class < 0 || target_class >= static_cast<int>(probs.size()))
        throw PreconditionError("cross_entropy: target class out of range");
    return -std::log(probs[static_cast<std::size_t>(target_class)]);
}

double cosine_lr(const OptimizerConfig& config, long step) {
    if (step < 0 || step > config.total_steps)
        throw PreconditionError("cosine_lr: step outside [0, total_steps]");
    // step/total first: the fraction is exact at 0, 1/2 and 1, which keeps the
    // schedule's endpoint values exact as well.
    const double progress = static_cast<double>(step) / static_cast<double>(config.total_steps);
    return 0.5 * config.base_lr * (1.0 + std::cos(kPi * progress));
}

double learning_rate(const OptimizerConfig& config, long step) {
    return config.schedule == LrSchedule::Cosine ? cosine_lr(config, step) : config.base_lr;
}

void sgd_step(ParamStore& params, const OptimizerConfig& config, long step) {
    const double lr = learning_rate(config, step);
    for (auto& e : params.entries) {
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            e.momentum[i] =
                config.momentum * e.momentum[i] + e.grad[i] + config.weight_decay * e.value[i];
            e.value[i] -= lr * e.momentum[i];
        }
    }
}

void save_checkpoint(const std::filesystem::path& file, const ScalableNetConfig& config,
                     const ParamStore& params) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("save_checkpoint: cannot open " + file.string());
    binio::write_magic(out, kCheckpointMagic);
    binio::write_u32(out, kCheckpointVersion);
    binio::write_u32(out, static_cast<std::uint32_t>(config.depth_blocks));
    binio::write_f64(out, config.width_factor);
    binio::write_u32(out, static_cast<std::uint32_t>(config.base_channels));
    binio::write_u32(out, static_cast<std::uint32_t>(config.num_classes));
    binio::write_u32(out, static_cast<std::uint32_t>(config.input_frames));
    binio::write_u32(out, static_cast<std::uint32_t>(config.spatial_dim));
    binio::write_u32(out, static_cast<std::uint32_t>(params.entries.size()));
    for (const auto& e : params.entries) {
        binio::write_string(out, e.name);
        binio::write_u32(out, static_cast<std::uint32_t>(e.shape.size()));
        for (auto d : e.shape) binio::write_u64(out, d);
        for (double v : e.value) binio::write_f64(out, v);
    }
    if (!out) throw ConfigError("save_checkpoint: write failed for " + file.string());
}

std::pair<ScalableNetConfig, ParamStore> load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("load_checkpoint: cannot open " + file.string());
    if (!binio::check_magic(in, kCheckpointMagic))
        throw ConfigError("load_checkpoint: bad magic in " + file.string());
    const auto version = binio::read_u32(in);
    if (version != kCheckpointVersion)
        throw ConfigError("load_checkpoint: unsupported version " + std::to_string(version));

    ScalableNetConfig config;
    config.depth_blocks = static_cast<int>(binio::read_u32(in));
    config.width_factor = binio::read_f64(in);
    config.base_channels = static_cast<int>(binio::read_u32(in));
    config.num_classes = static_cast<int>(binio::read_u32(in));
    config.input_frames = static_cast<int>(binio::read_u32(in));
    config.spatial_dim = static_cast<int>(binio::read_u32(in));

    ParamStore store;
    const auto entry_count = binio::read_u32(in);
    for (std::uint32_t i = 0; i < entry_count; ++i) {
        const auto name = binio::read_string(in);
        const auto ndims = binio::read_u32(in);
        std::vector<std::size_t> shape(ndims);
        for (auto& d : shape) d = static_cast<std::size_t>(binio::read_u64(in));
        auto& e = store.add(name, shape);
        for (auto& v : e.value) v = binio::read_f64(in);
    }
    if (!in) throw ConfigError("load_checkpoint: truncated file " + file.string());
    return {config, store};
}

}  // namespace cmpl
