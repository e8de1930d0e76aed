#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cmpl {

// Named RNG purposes. Every consumer of randomness owns a stream derived from
// (run seed, tag, a, b), so adding or removing one consumer never perturbs the
// draws seen by another. This is what makes e.g. a lambda=0 run bitwise equal
// to a supervised-only run.
enum class StreamTag : std::uint64_t {
    DatasetTemplate = 1,
    DatasetVideo,
    ValDataset,
    Split,
    InitPrimary,
    InitAuxiliary,
    LabeledOrder,
    UnlabeledOrder,
    LabeledViews,
    UnlabeledViews,
    Snapshot,
    Generic,
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

// Deterministic random stream with explicit, stdlib-independent draw logic so
// that datasets and checkpoints reproduce bit-for-bit across toolchains.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}
    RngStream(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0)
        : engine_(mix_seed(seed, static_cast<std::uint64_t>(tag), a, b)) {}

    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    // Standard normal via Box-Muller (cached second draw).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace cmpl
