#include "cmpl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cmpl/errors.hpp"

namespace cmpl {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: key '" + key + "' expects true/false, got '" + value + "'");
}

struct KeyBinding {
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

const std::map<std::string, KeyBinding>& bindings() {
    static const std::map<std::string, KeyBinding> table = [] {
        std::map<std::string, KeyBinding> m;
        auto add = [&m](const std::string& key, auto setter, auto getter) {
            m[key] = KeyBinding{setter, getter};
        };

        add("mode",
            [](ExperimentConfig& c, const std::string&, const std::string& v) {
                c.mode = train_mode_from_string(v);
            },
            [](const ExperimentConfig& c) { return to_string(c.mode); });
        add("seed",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.seed = parse_u64(k, v);
            },
            [](const ExperimentConfig& c) { return std::to_string(c.seed); });

        add("dataset.num_classes",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.num_classes = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.dataset.num_classes); });
        add("dataset.spatial_classes",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.spatial_class_count = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.dataset.spatial_class_count); });
        add("dataset.temporal_classes",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.temporal_class_count = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.dataset.temporal_class_count); });
        add("dataset.videos_per_class",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.videos_per_class = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.dataset.videos_per_class); });
        add("dataset.noise_sigma",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.noise_sigma = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.dataset.noise_sigma); });
        add("dataset.seed",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.seed = parse_u64(k, v);
            },
            [](const ExperimentConfig& c) { return std::to_string(c.dataset.seed); });
        add("dataset.raw_length",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.raw_length = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.dataset.raw_length); });
        add("dataset.spatial_dim",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.spatial_dim = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.dataset.spatial_dim); });
        add("dataset.spatial_amplitude",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.spatial_amplitude = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.dataset.spatial_amplitude); });
        add("dataset.temporal_amplitude",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.temporal_amplitude = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.dataset.temporal_amplitude); });
        add("dataset.spatial_spread",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.dataset.spatial_template_spread = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.dataset.spatial_template_spread); });
        add("dataset.val_videos_per_class",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.val_videos_per_class = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.val_videos_per_class); });
        add("dataset.file",
            [](ExperimentConfig& c, const std::string&, const std::string& v) { c.dataset_file = v; },
            [](const ExperimentConfig& c) { return c.dataset_file; });

        add("split.labeled_fraction",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.labeled_fraction = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.labeled_fraction); });
        add("split.scheme",
            [](ExperimentConfig& c, const std::string&, const std::string& v) {
                c.split_scheme = split_scheme_from_string(v);
            },
            [](const ExperimentConfig& c) { return to_string(c.split_scheme); });

        add("net.base_channels",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.net.base_channels = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.net.base_channels); });
        add("net.depth_blocks",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.net.depth_blocks = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.net.depth_blocks); });
        add("net.primary_width",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.net.primary_width = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.net.primary_width); });
        add("net.aux_width",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.net.aux_width = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.net.aux_width); });
        add("net.aux_depth_blocks",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.net.aux_depth_blocks = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.net.aux_depth_blocks); });

        add("temporal.primary_frames",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.temporal.primary_frames = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.temporal.primary_frames); });
        add("temporal.primary_stride",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.temporal.primary_stride = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.temporal.primary_stride); });
        add("temporal.aux_frames",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.temporal.aux_frames = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.temporal.aux_frames); });
        add("temporal.aux_stride",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.temporal.aux_stride = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.temporal.aux_stride); });
        add("temporal.time_offset",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.temporal.time_offset = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.temporal.time_offset); });
        add("temporal.shared_clip",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.temporal.shared_clip = parse_bool(k, v);
            },
            [](const ExperimentConfig& c) { return c.temporal.shared_clip ? "true" : "false"; });

        add("augment.jitter_sigma",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.augment.jitter_sigma = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.augment.jitter_sigma); });
        add("augment.standard_transforms",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.augment.standard_transforms = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.augment.standard_transforms); });
        add("augment.strong_transforms",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.augment.strong_transforms = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.augment.strong_transforms); });
        add("augment.cutout_fraction",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.augment.cutout_fraction = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.augment.cutout_fraction); });

        add("pseudo_label.scheme",
            [](ExperimentConfig& c, const std::string&, const std::string& v) {
                c.scheme = scheme_from_string(v);
            },
            [](const ExperimentConfig& c) { return to_string(c.scheme); });
        add("pseudo_label.tau",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.tau = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.tau); });
        add("loss.lambda",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.lambda = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.lambda); });

        add("train.labeled_batch",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.labeled_batch = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.labeled_batch); });
        add("train.unlabeled_batch",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.unlabeled_batch = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.unlabeled_batch); });
        add("train.epochs",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.epochs = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.epochs); });

        add("optimizer.base_lr",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.optimizer.base_lr = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.optimizer.base_lr); });
        add("optimizer.momentum",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.optimizer.momentum = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.optimizer.momentum); });
        add("optimizer.weight_decay",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.optimizer.weight_decay = parse_double(k, v);
            },
            [](const ExperimentConfig& c) { return format_double(c.optimizer.weight_decay); });
        add("optimizer.schedule",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v == "cosine") c.optimizer.schedule = LrSchedule::Cosine;
                else if (v == "constant") c.optimizer.schedule = LrSchedule::Constant;
                else throw ConfigError("config: key '" + k + "' expects cosine|constant, got '" + v + "'");
            },
            [](const ExperimentConfig& c) {
                return c.optimizer.schedule == LrSchedule::Cosine ? "cosine" : "constant";
            });

        add("eval.num_clips",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.eval_num_clips = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.eval_num_clips); });
        add("metrics.snapshot_interval",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.snapshot_interval = static_cast<int>(parse_long(k, v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.snapshot_interval); });

        return m;
    }();
    return table;
}

std::string resolve_alias(const ExperimentConfig& config, const std::string& key,
                          std::string& value) {
    if (key == "tau") return "pseudo_label.tau";
    if (key == "lambda") return "loss.lambda";
    if (key == "scheme") return "pseudo_label.scheme";
    if (key == "epochs") return "train.epochs";
    if (key == "time_offset") return "temporal.time_offset";
    if (key == "batch_ratio") {
        // B_u = ratio * B_l, using the current labeled batch size.
        const long ratio = parse_long(key, value);
        value = std::to_string(ratio * config.labeled_batch);
        return "train.unlabeled_batch";
    }
    return key;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

void apply_config_value(ExperimentConfig& config, const std::string& key,
                        const std::string& value) {
    std::string v = value;
    std::string canonical_key = resolve_alias(config, key, v);

    // aux_frames shorthand: pick the matching stride covering the raw window.
    if (key == "aux_frames") {
        const long frames = parse_long(key, v);
        if (frames < 1 || config.dataset.raw_length % frames != 0)
            throw ConfigError("config: aux_frames must divide dataset.raw_length");
        apply_config_value(config, "temporal.aux_frames", std::to_string(frames));
        apply_config_value(config, "temporal.aux_stride",
                           std::to_string(config.dataset.raw_length / frames));
        return;
    }

    const auto& table = bindings();
    const auto it = table.find(canonical_key);
    if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second.set(config, canonical_key, v);
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config = default_config();
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_number) +
                              " is not a key = value pair");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: line " + std::to_string(line_number) + " has an empty key");
        apply_config_value(config, key, value);
    }
    return config;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

void apply_overrides(ExperimentConfig& config, std::span<const std::string> overrides) {
    for (const auto& entry : overrides) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + entry + "' is not of the form key=value");
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = trim(entry.substr(eq + 1));
        apply_config_value(config, key, value);
    }
}

std::string canonical_config_text(const ExperimentConfig& config) {
    std::string out;
    for (const auto& [key, binding] : bindings()) {  // std::map iterates sorted
        out += key;
        out += " = ";
        out += binding.get(config);
        out += "\n";
    }
    return out;
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = canonical_config_text(config);
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001B3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string hex(16, '0');
    for (int i = 15; i >= 0; --i) {
        hex[static_cast<std::size_t>(i)] = digits[hash & 0xF];
        hash >>= 4;
    }
    return hex;
}

std::string run_id(const ExperimentConfig& config) { return config_hash(config).substr(0, 12); }

}  // namespace cmpl
