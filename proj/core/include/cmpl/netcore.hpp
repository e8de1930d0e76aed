#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cmpl/synthdata.hpp"

namespace cmpl {

// Architecture knobs of the scalable temporal-conv classifier:
// per-frame linear embed -> depth_blocks x (temporal conv k=3, ReLU)
// -> temporal mean pool -> linear head. No temporal downsampling, so the
// temporal receptive field and the channel width are the two scaling axes.
struct ScalableNetConfig {
    int depth_blocks = 2;
    double width_factor = 1.0;  // (0, 1]
    int base_channels = 32;
    int num_classes = 10;
    int input_frames = 8;
    int spatial_dim = 64;

    int channels() const;
    void validate() const;  // throws ConfigError
};

// Named parameter arrays with shape-congruent gradient and momentum buffers.
struct ParamStore {
    struct Entry {
        std::string name;
        std::vector<std::size_t> shape;
        std::vector<double> value;
        std::vector<double> grad;
        std::vector<double> momentum;

        std::size_t size() const { return value.size(); }
    };

    std::vector<Entry> entries;

    Entry& add(std::string name, std::vector<std::size_t> shape);
    Entry& at(const std::string& name);
    const Entry& at(const std::string& name) const;
    std::size_t total_parameters() const;
    void zero_grad();
};

enum class LrSchedule { Cosine, Constant };

struct OptimizerConfig {
    double base_lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    long total_steps = 1;
    LrSchedule schedule = LrSchedule::Cosine;

    void validate() const;
};

// Deterministic fan-in-scaled uniform initialization.
ParamStore build_net(const ScalableNetConfig& config, std::uint64_t seed);

// Evaluation-mode forward pass (no gradient bookkeeping). frames must hold
// config.input_frames * config.spatial_dim values, frame-major.
std::vector<double> forward_logits(const ScalableNetConfig& config, const ParamStore& params,
                                   std::span<const double> frames);
std::vector<double> forward_logits(const ScalableNetConfig& config, const ParamStore& params,
                                   const Clip& clip);
// Batched variant; returns one logits row per clip.
std::vector<std::vector<double>> forward(const ScalableNetConfig& config, const ParamStore& params,
                                         std::span<const Clip> batch);

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);
// -ln softmax(logits)[target]
double cross_entropy_logits(std::span<const double> logits, int target_class);
// -ln probs[target]
double cross_entropy_probs(std::span<const double> probs, int target_class);

double cosine_lr(const OptimizerConfig& config, long step);
double learning_rate(const OptimizerConfig& config, long step);

// v <- momentum * v + grad + weight_decay * param;  param <- param - lr(step) * v
void sgd_step(ParamStore& params, const OptimizerConfig& config, long step);

void save_checkpoint(const std::filesystem::path& file, const ScalableNetConfig& config,
                     const ParamStore& params);
std::pair<ScalableNetConfig, ParamStore> load_checkpoint(const std::filesystem::path& file);

// Shared dense kernels; also used by the autodiff tape so the training and
// evaluation forward paths compute identical values.
namespace kernels {

// out[T x C] += X[T x D] . W[D x C]   (out must be pre-filled with the bias)
void frames_affine(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, int frames, int in_dim, int out_dim,
                   std::span<double> out);
// Temporal conv, kernel 3, zero padding, weight layout [3][Cin][Cout].
void conv1d_time(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                 int frames, int channels, std::span<double> out);
void relu(std::span<const double> x, std::span<double> out);
void time_mean(std::span<const double> x, int frames, int channels, std::span<double> out);

}  // namespace kernels

}  // namespace cmpl
