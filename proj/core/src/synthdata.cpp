#include "cmpl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "cmpl/binio.hpp"
#include "cmpl/errors.hpp"

namespace cmpl {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr char kDatasetMagic[8] = {'C', 'M', 'P', 'L', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kDatasetVersion = 1;

std::vector<double> draw_template(const DatasetSpec& spec, std::uint64_t tag_index) {
    RngStream rng(spec.seed, StreamTag::DatasetTemplate, tag_index);
    std::vector<double> tmpl(static_cast<std::size_t>(spec.spatial_dim));
    for (auto& v : tmpl) {
        v = static_cast<double>(static_cast<float>(rng.normal()));
    }
    return tmpl;
}

}  // namespace

void DatasetSpec::validate() const {
    if (num_classes < 1) throw ConfigError("dataset: num_classes must be >= 1");
    if (spatial_class_count < 0 || temporal_class_count < 0)
        throw ConfigError("dataset: class counts must be non-negative");
    if (spatial_class_count + temporal_class_count != num_classes)
        throw ConfigError("dataset: spatial_class_count + temporal_class_count must equal num_classes");
    if (videos_per_class < 1) throw ConfigError("dataset: videos_per_class must be >= 1");
    if (noise_sigma < 0.0) throw ConfigError("dataset: noise_sigma must be >= 0");
    if (raw_length < 1 || spatial_dim < 1)
        throw ConfigError("dataset: raw_length and spatial_dim must be >= 1");
    if (spatial_amplitude < 0.0 || temporal_amplitude < 0.0)
        throw ConfigError("dataset: modulation amplitudes must be >= 0");
    if (spatial_template_spread < 0.0)
        throw ConfigError("dataset: spatial_template_spread must be >= 0");
}

VideoKind class_kind(const DatasetSpec& spec, int class_id) {
    return class_id < spec.spatial_class_count ? VideoKind::Spatial : VideoKind::Temporal;
}

double class_frequency(const DatasetSpec& spec, int class_id) {
    if (class_kind(spec, class_id) == VideoKind::Spatial) {
        return 1.0;  // shared motion profile of the spatial classes
    }
    const int j = class_id - spec.spatial_class_count;
    // Groups of five: three slow frequencies any view resolves, plus one pair
    // (2.5, 5.5) that aliases exactly under stride-8 sampling of a 64-frame
    // window (5.5 = 8 - 2.5) while a stride-4 view still separates it.
    // Larger class counts reuse the pattern in higher bands.
    static constexpr double kTable[5] = {1.0, 2.0, 3.0, 2.5, 5.5};
    return kTable[j % 5] + 6.0 * (j / 5);
}

std::vector<double> class_template(const DatasetSpec& spec, int class_id) {
    if (class_id < 0 || class_id >= spec.num_classes)
        throw PreconditionError("class_template: class_id out of range");
    if (class_kind(spec, class_id) == VideoKind::Temporal) {
        // All temporal classes share one spatial template, tagged past the
        // last spatial class index.
        return draw_template(spec, static_cast<std::uint64_t>(spec.num_classes));
    }
    const auto base = draw_template(spec, static_cast<std::uint64_t>(spec.num_classes) + 1);
    auto unique = draw_template(spec, static_cast<std::uint64_t>(class_id));
    for (std::size_t d = 0; d < unique.size(); ++d) {
        unique[d] = static_cast<double>(
            static_cast<float>(base[d] + spec.spatial_template_spread * unique[d]));
    }
    return unique;
}

Video render_video(const DatasetSpec& spec, int class_id, int video_id, double phase,
                   RngStream& noise_rng) {
    const VideoKind kind = class_kind(spec, class_id);
    const double amplitude =
        kind == VideoKind::Spatial ? spec.spatial_amplitude : spec.temporal_amplitude;
    const double freq = class_frequency(spec, class_id);
    const std::vector<double> tmpl = class_template(spec, class_id);

    Video video;
    video.id = video_id;
    video.class_id = class_id;
    video.kind = kind;
    video.raw_length = spec.raw_length;
    video.spatial_dim = spec.spatial_dim;
    video.frames.resize(static_cast<std::size_t>(spec.raw_length) * spec.spatial_dim);

    for (int t = 0; t < spec.raw_length; ++t) {
        const double modulation =
            1.0 + amplitude * std::sin(kTwoPi * freq * t / spec.raw_length + phase);
        double* frame = video.frames.data() + static_cast<std::size_t>(t) * spec.spatial_dim;
        for (int d = 0; d < spec.spatial_dim; ++d) {
            const double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise_rng.normal() : 0.0;
            // Quantize to float32 so the on-disk format is lossless.
            frame[d] = static_cast<double>(static_cast<float>(tmpl[d] * modulation + noise));
        }
    }
    return video;
}

std::vector<Video> generate_dataset(const DatasetSpec& spec, int video_id_base) {
    spec.validate();
    std::vector<Video> videos;
    videos.reserve(static_cast<std::size_t>(spec.num_classes) * spec.videos_per_class);
    int video_id = video_id_base;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int i = 0; i < spec.videos_per_class; ++i, ++video_id) {
            // Each video's randomness derives from (seed, video id) only, so
            // generation order or parallelism cannot change the output.
            RngStream rng(spec.seed, StreamTag::DatasetVideo, static_cast<std::uint64_t>(video_id));
            const double phase = rng.uniform(0.0, kTwoPi);
            videos.push_back(render_video(spec, c, video_id, phase, rng));
        }
    }
    return videos;
}

SplitResult split_labeled(const std::vector<Video>& videos, double labeled_fraction,
                          SplitScheme scheme, std::uint64_t seed) {
    if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0))
        throw ConfigError("split: labeled_fraction must lie in (0, 1)");
    if (videos.empty()) throw ConfigError("split: empty dataset");

    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        by_class[videos[i].class_id].push_back(static_cast<int>(i));
    }

    const auto num_classes = by_class.size();
    const auto total = videos.size();
    // Uniform takes equal counts per class; CategoryWise takes counts
    // proportional to each class's size.
    const long uniform_take =
        std::lround(labeled_fraction * static_cast<double>(total) / static_cast<double>(num_classes));

    RngStream rng(seed, StreamTag::Split);
    SplitResult result;
    result.scheme = scheme;
    for (auto& [class_id, indices] : by_class) {
        long take = uniform_take;
        if (scheme == SplitScheme::CategoryWise) {
            take = std::lround(labeled_fraction * static_cast<double>(indices.size()));
        }
        if (take < 1) {
            throw ConfigError("split: labeled_fraction yields 0 labeled samples for class " +
                              std::to_string(class_id));
        }
        if (take > static_cast<long>(indices.size())) {
            throw ConfigError("split: class " + std::to_string(class_id) +
                              " has too few videos for the requested fraction");
        }
        rng.shuffle(indices);
        std::vector<int> chosen(indices.begin(), indices.begin() + take);
        std::sort(chosen.begin(), chosen.end());
        std::vector<int> rest(indices.begin() + take, indices.end());
        std::sort(rest.begin(), rest.end());
        result.labeled.insert(result.labeled.end(), chosen.begin(), chosen.end());
        result.unlabeled.insert(result.unlabeled.end(), rest.begin(), rest.end());
    }
    std::sort(result.labeled.begin(), result.labeled.end());
    std::sort(result.unlabeled.begin(), result.unlabeled.end());
    return result;
}

Clip sample_clip(const Video& video, int num_frames, int stride, int offset) {
    if (num_frames < 1 || stride < 1 || offset < 0)
        throw PreconditionError("sample_clip: num_frames and stride must be >= 1, offset >= 0");
    if (num_frames * stride + offset > video.raw_length)
        throw PreconditionError("sample_clip: T * stride + offset exceeds the raw length");

    Clip clip;
    clip.source_video_id = video.id;
    clip.num_frames = num_frames;
    clip.spatial_dim = video.spatial_dim;
    clip.stride = stride;
    clip.offset = offset;
    clip.data.resize(static_cast<std::size_t>(num_frames) * video.spatial_dim);
    for (int t = 0; t < num_frames; ++t) {
        const double* src = video.frame(offset + t * stride);
        std::copy(src, src + video.spatial_dim, clip.frame(t));
    }
    return clip;
}

void save_dataset(const std::filesystem::path& file, const DatasetSpec& spec,
                  const std::vector<Video>& videos) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("save_dataset: cannot open " + file.string());
    binio::write_magic(out, kDatasetMagic);
    binio::write_u32(out, kDatasetVersion);
    binio::write_u32(out, static_cast<std::uint32_t>(spec.num_classes));
    binio::write_u32(out, static_cast<std::uint32_t>(spec.raw_length));
    binio::write_u32(out, static_cast<std::uint32_t>(spec.spatial_dim));
    binio::write_u64(out, videos.size());
    for (const auto& v : videos) {
        binio::write_u32(out, static_cast<std::uint32_t>(v.class_id));
        binio::write_u32(out, v.kind == VideoKind::Spatial ? 0u : 1u);
        for (double x : v.frames) binio::write_f32(out, static_cast<float>(x));
    }
    if (!out) throw ConfigError("save_dataset: write failed for " + file.string());
}

std::vector<Video> load_dataset(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("load_dataset: cannot open " + file.string());
    if (!binio::check_magic(in, kDatasetMagic))
        throw ConfigError("load_dataset: bad magic in " + file.string());
    const auto version = binio::read_u32(in);
    if (version != kDatasetVersion)
        throw ConfigError("load_dataset: unsupported version " + std::to_string(version));
    binio::read_u32(in);  // num_classes (informational; classes are per video)
    const int raw_length = static_cast<int>(binio::read_u32(in));
    const int spatial_dim = static_cast<int>(binio::read_u32(in));
    const auto count = binio::read_u64(in);

    std::vector<Video> videos;
    videos.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Video v;
        v.id = static_cast<int>(i);
        v.class_id = static_cast<int>(binio::read_u32(in));
        v.kind = binio::read_u32(in) == 0 ? VideoKind::Spatial : VideoKind::Temporal;
        v.raw_length = raw_length;
        v.spatial_dim = spatial_dim;
        v.frames.resize(static_cast<std::size_t>(raw_length) * spatial_dim);
        for (auto& x : v.frames) x = static_cast<double>(binio::read_f32(in));
        videos.push_back(std::move(v));
    }
    if (!in) throw ConfigError("load_dataset: truncated file " + file.string());
    return videos;
}

void save_dataset_manifest(const std::filesystem::path& file, const DatasetSpec& spec) {
    std::ofstream out(file);
    if (!out) throw ConfigError("save_dataset_manifest: cannot open " + file.string());
    out << "num_classes=" << spec.num_classes << "\n";
    out << "spatial_classes=" << spec.spatial_class_count << "\n";
    out << "temporal_classes=" << spec.temporal_class_count << "\n";
    out << "videos_per_class=" << spec.videos_per_class << "\n";
    out << "noise_sigma=" << spec.noise_sigma << "\n";
    out << "seed=" << spec.seed << "\n";
    out << "raw_length=" << spec.raw_length << "\n";
    out << "spatial_dim=" << spec.spatial_dim << "\n";
    std::string kinds;
    for (int c = 0; c < spec.num_classes; ++c) {
        kinds += class_kind(spec, c) == VideoKind::Spatial ? 'S' : 'T';
    }
    out << "kind_map=" << kinds << "\n";
}

std::string to_string(SplitScheme scheme) {
    return scheme == SplitScheme::Uniform ? "uniform" : "category_wise";
}

SplitScheme split_scheme_from_string(const std::string& name) {
    if (name == "uniform") return SplitScheme::Uniform;
    if (name == "category_wise") return SplitScheme::CategoryWise;
    throw ConfigError("unknown split scheme: " + name);
}

}  // namespace cmpl
