#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmpl/rng.hpp"

namespace cmpl {

enum class VideoKind { Spatial, Temporal };

// A synthetic raw clip: raw_length frames, each a spatial_dim feature vector,
// stored frame-major. Values are quantized to float32 at generation time so
// the binary dataset file round-trips losslessly.
struct Video {
    int id = 0;
    int class_id = 0;
    VideoKind kind = VideoKind::Spatial;
    int raw_length = 0;
    int spatial_dim = 0;
    std::vector<double> frames;  // raw_length * spatial_dim

    const double* frame(int t) const { return frames.data() + static_cast<std::size_t>(t) * spatial_dim; }
};

// A sub-sampled view of a video: frames at offset, offset+stride, ...
struct Clip {
    int source_video_id = -1;
    int num_frames = 0;
    int spatial_dim = 0;
    int stride = 1;
    int offset = 0;
    std::vector<double> data;  // num_frames * spatial_dim

    double* frame(int t) { return data.data() + static_cast<std::size_t>(t) * spatial_dim; }
    const double* frame(int t) const { return data.data() + static_cast<std::size_t>(t) * spatial_dim; }
};

struct DatasetSpec {
    int num_classes = 10;
    int spatial_class_count = 5;
    int temporal_class_count = 5;
    int videos_per_class = 200;
    double noise_sigma = 0.3;
    std::uint64_t seed = 7;
    int raw_length = 64;
    int spatial_dim = 64;
    // Amplitude of the sinusoidal amplitude modulation. Spatial classes default
    // to 0 (static frames equal their template); temporal classes are modulated
    // at a class-specific frequency with a per-video random phase.
    double spatial_amplitude = 0.0;
    double temporal_amplitude = 0.5;
    // Spatial templates are base + spread * unique: a smaller spread packs the
    // spatial classes closer together, which stresses channel width.
    double spatial_template_spread = 0.1;

    void validate() const;  // throws ConfigError
};

enum class SplitScheme { Uniform, CategoryWise };

// Index-based partition of a dataset into labeled and unlabeled pools.
struct SplitResult {
    std::vector<int> labeled;    // video indices, class known from the video
    std::vector<int> unlabeled;  // video indices
    SplitScheme scheme = SplitScheme::Uniform;
};

VideoKind class_kind(const DatasetSpec& spec, int class_id);
// Modulation frequency (cycles per raw window) for a temporal class.
double class_frequency(const DatasetSpec& spec, int class_id);
// The static spatial template of a class, quantized to file precision. All
// temporal classes share one template; spatial classes each have their own.
std::vector<double> class_template(const DatasetSpec& spec, int class_id);

// Renders one video given an explicit modulation phase; exposed so tests can
// pin the per-video phase. noise_rng supplies the per-element Gaussian noise.
Video render_video(const DatasetSpec& spec, int class_id, int video_id, double phase,
                   RngStream& noise_rng);

// video_id_base offsets the per-video random streams; a held-out set drawn
// from the same spec uses the training set's size as its base so it shares
// the class templates and frequencies but none of the per-video randomness.
std::vector<Video> generate_dataset(const DatasetSpec& spec, int video_id_base = 0);

SplitResult split_labeled(const std::vector<Video>& videos, double labeled_fraction,
                          SplitScheme scheme, std::uint64_t seed);

Clip sample_clip(const Video& video, int num_frames, int stride, int offset);

// Binary dataset file plus UTF-8 `key=value` sidecar manifest.
void save_dataset(const std::filesystem::path& file, const DatasetSpec& spec,
                  const std::vector<Video>& videos);
std::vector<Video> load_dataset(const std::filesystem::path& file);
void save_dataset_manifest(const std::filesystem::path& file, const DatasetSpec& spec);

std::string to_string(SplitScheme scheme);
SplitScheme split_scheme_from_string(const std::string& name);

}  // namespace cmpl
