#include "cmpl/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "cmpl/errors.hpp"

namespace cmpl {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

std::map<std::string, std::string> read_kv_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

ExperimentConfig load_run_config(const fs::path& run_dir) {
    return load_config_file(run_dir / "config.txt");
}

}  // namespace

std::vector<Video> make_validation_set(const ExperimentConfig& config) {
    // Same seed (same class templates and frequencies), disjoint per-video
    // streams: the held-out ids start after the training set's.
    DatasetSpec val_spec = config.dataset;
    val_spec.videos_per_class = config.val_videos_per_class;
    const int base = config.dataset.num_classes * config.dataset.videos_per_class;
    return generate_dataset(val_spec, base);
}

void write_manifest(const std::filesystem::path& file, const RunManifest& manifest) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string());
    out << "run_id = " << manifest.run_id << "\n";
    out << "status = " << (manifest.complete ? "complete" : "incomplete") << "\n";
    out << "config_hash = " << manifest.config_hash << "\n";
    out << "seed = " << manifest.seed << "\n";
    out << "mode = " << manifest.mode << "\n";
    out << "scheme = " << manifest.scheme << "\n";
    out << "config = config.txt\n";
    out << "metrics = metrics.csv\n";
    out << "decisions = decisions.csv\n";
    out << "eval = eval.csv\n";
    out << "checkpoints = checkpoints\n";
    out << "duration_seconds = " << format_double(manifest.duration_seconds) << "\n";
    out << "final_val_acc_primary = " << format_double(manifest.final_val_acc_primary) << "\n";
    out << "final_val_acc_aux = " << format_double(manifest.final_val_acc_aux) << "\n";
    out << "final_pl_ratio = " << format_double(manifest.final_pl_ratio) << "\n";
}

RunManifest load_manifest(const std::filesystem::path& file) {
    const auto kv = read_kv_file(file);
    RunManifest m;
    auto get = [&kv](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("manifest: missing key " + key);
        return it->second;
    };
    m.run_id = get("run_id");
    m.complete = get("status") == "complete";
    m.config_hash = get("config_hash");
    m.seed = std::stoull(get("seed"));
    m.mode = get("mode");
    m.scheme = get("scheme");
    m.duration_seconds = std::stod(get("duration_seconds"));
    m.final_val_acc_primary = std::stod(get("final_val_acc_primary"));
    m.final_val_acc_aux = std::stod(get("final_val_acc_aux"));
    m.final_pl_ratio = std::stod(get("final_pl_ratio"));
    m.out_dir = file.parent_path();
    return m;
}

void write_metrics_csv(const std::filesystem::path& file, const MetricsLog& log) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string());
    out << "epoch,lr,loss_sup_F,loss_sup_A,loss_unsup_F,loss_unsup_A,"
           "n_confident,pl_ratio,val_acc_F,val_acc_A\n";
    for (const auto& r : log.epochs) {
        out << r.epoch << ',' << format_double(r.lr) << ',' << format_double(r.loss_sup_primary)
            << ',' << format_double(r.loss_sup_aux) << ',' << format_double(r.loss_unsup_primary)
            << ',' << format_double(r.loss_unsup_aux) << ',' << r.n_confident << ','
            << format_double(r.pl_ratio) << ',' << format_double(r.val_acc_primary) << ','
            << format_double(r.val_acc_aux) << "\n";
    }
}

void write_decisions_csv(const std::filesystem::path& file, const MetricsLog& log) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string());
    out << "epoch,video_index,true_class,primary_class,primary_conf,aux_class,aux_conf\n";
    for (const auto& snapshot : log.snapshots) {
        for (const auto& e : snapshot.entries) {
            out << snapshot.epoch << ',' << e.video_index << ',' << e.true_class << ','
                << e.primary_class << ',' << format_double(e.primary_conf) << ',' << e.aux_class
                << ',' << format_double(e.aux_conf) << "\n";
        }
    }
}

MetricsLog load_decisions_csv(const std::filesystem::path& file, double tau) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    MetricsLog log;
    log.tau = tau;
    std::string line;
    std::getline(in, line);  // header
    std::map<int, SnapshotRecord> by_epoch;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw ReportError("decisions.csv: malformed row '" + line + "'");
        SnapshotEntry e;
        const int epoch = std::stoi(f[0]);
        e.video_index = std::stoi(f[1]);
        e.true_class = std::stoi(f[2]);
        e.primary_class = std::stoi(f[3]);
        e.primary_conf = std::stod(f[4]);
        e.aux_class = std::stoi(f[5]);
        e.aux_conf = std::stod(f[6]);
        auto& record = by_epoch[epoch];
        record.epoch = epoch;
        record.entries.push_back(e);
    }
    for (auto& [epoch, record] : by_epoch) log.snapshots.push_back(std::move(record));
    if (!log.snapshots.empty()) {
        log.unlabeled_total = static_cast<long>(log.snapshots.front().entries.size());
    }
    return log;
}

void write_eval_csv(const std::filesystem::path& file, const ExperimentConfig& config,
                    const ClassAccuracyTable& primary, const ClassAccuracyTable& aux) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string());
    out << "class,kind,count,acc_F,acc_A\n";
    for (int c = 0; c < primary.num_classes(); ++c) {
        const char kind = class_kind(config.dataset, c) == VideoKind::Spatial ? 'S' : 'T';
        out << c << ',' << kind << ',' << primary.total[static_cast<std::size_t>(c)] << ','
            << format_double(primary.accuracy(c)) << ',' << format_double(aux.accuracy(c)) << "\n";
    }
    out << "-1,all,"
        << std::accumulate(primary.total.begin(), primary.total.end(), 0L) << ','
        << format_double(primary.overall_accuracy()) << ','
        << format_double(aux.overall_accuracy()) << "\n";
}

std::pair<std::vector<double>, std::vector<double>> load_eval_csv(
    const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    std::vector<double> acc_primary;
    std::vector<double> acc_aux;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw ReportError("eval.csv: malformed row '" + line + "'");
        if (std::stoi(f[0]) < 0) continue;  // overall row
        acc_primary.push_back(std::stod(f[3]));
        acc_aux.push_back(std::stod(f[4]));
    }
    return {acc_primary, acc_aux};
}

RunManifest run_single(const ExperimentConfig& config, const std::filesystem::path& out_root) {
    config.validate();

    RunManifest manifest;
    manifest.run_id = run_id(config);
    manifest.config_hash = config_hash(config);
    manifest.seed = config.seed;
    manifest.mode = to_string(config.mode);
    manifest.scheme = to_string(config.scheme);
    manifest.out_dir = out_root / "runs" / manifest.run_id;

    fs::create_directories(manifest.out_dir / "checkpoints");
    {
        std::ofstream cfg_out(manifest.out_dir / "config.txt");
        cfg_out << canonical_config_text(config);
    }
    write_manifest(manifest.out_dir / "manifest.txt", manifest);

    const auto start = std::chrono::steady_clock::now();

    std::vector<Video> dataset = config.dataset_file.empty()
                                     ? generate_dataset(config.dataset)
                                     : load_dataset(config.dataset_file);
    if (!config.dataset_file.empty()) {
        int max_class = -1;
        for (const auto& v : dataset) {
            max_class = std::max(max_class, v.class_id);
            if (v.raw_length != config.dataset.raw_length ||
                v.spatial_dim != config.dataset.spatial_dim) {
                throw ConfigError("dataset.file geometry does not match the configured dataset");
            }
        }
        if (max_class + 1 != config.dataset.num_classes)
            throw ConfigError("dataset.file class count does not match dataset.num_classes");
    }
    const std::vector<Video> validation = make_validation_set(config);
    const SplitResult split =
        split_labeled(dataset, config.labeled_fraction, config.split_scheme, config.seed);

    TrainResult result = train(config, dataset, split, validation);

    write_metrics_csv(manifest.out_dir / "metrics.csv", result.log);
    write_decisions_csv(manifest.out_dir / "decisions.csv", result.log);

    const auto acc_primary =
        class_accuracy(result.pair.primary_config, result.pair.primary, validation,
                       config.eval_num_clips, config.temporal.primary_frames,
                       config.temporal.primary_stride);
    const auto acc_aux = class_accuracy(result.pair.aux_config, result.pair.aux, validation,
                                        config.eval_num_clips, config.temporal.aux_frames,
                                        config.temporal.aux_stride);
    write_eval_csv(manifest.out_dir / "eval.csv", config, acc_primary, acc_aux);

    save_checkpoint(manifest.out_dir / "checkpoints" / "primary.ckpt", result.pair.primary_config,
                    result.pair.primary);
    save_checkpoint(manifest.out_dir / "checkpoints" / "auxiliary.ckpt", result.pair.aux_config,
                    result.pair.aux);

    if (!result.log.epochs.empty()) {
        const auto& last = result.log.epochs.back();
        manifest.final_val_acc_primary = last.val_acc_primary;
        manifest.final_val_acc_aux = last.val_acc_aux;
        manifest.final_pl_ratio = last.pl_ratio;
    }
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.complete = true;
    write_manifest(manifest.out_dir / "manifest.txt", manifest);
    return manifest;
}

RunAggregate run(const ExperimentConfig& base, std::span<const std::uint64_t> seeds,
                 const std::filesystem::path& out_root) {
    RunAggregate aggregate;
    std::vector<std::uint64_t> seed_list(seeds.begin(), seeds.end());
    if (seed_list.empty()) seed_list.push_back(base.seed);

    for (const auto seed : seed_list) {
        ExperimentConfig config = base;
        config.seed = seed;
        aggregate.runs.push_back(run_single(config, out_root));
    }

    auto stats = [](const std::vector<RunManifest>& runs, auto field) {
        double lo = field(runs.front());
        double hi = lo;
        double sum = 0.0;
        for (const auto& r : runs) {
            const double v = field(r);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        return std::pair<double, double>{sum / static_cast<double>(runs.size()), hi - lo};
    };
    std::tie(aggregate.mean_acc_primary, aggregate.range_acc_primary) =
        stats(aggregate.runs, [](const RunManifest& r) { return r.final_val_acc_primary; });
    std::tie(aggregate.mean_acc_aux, aggregate.range_acc_aux) =
        stats(aggregate.runs, [](const RunManifest& r) { return r.final_val_acc_aux; });

    fs::create_directories(out_root);
    std::ofstream out(out_root / "summary.csv");
    out << "stat,seed,run_id,val_acc_F,val_acc_A,pl_ratio\n";
    for (const auto& r : aggregate.runs) {
        out << "run," << r.seed << ',' << r.run_id << ',' << format_double(r.final_val_acc_primary)
            << ',' << format_double(r.final_val_acc_aux) << ',' << format_double(r.final_pl_ratio)
            << "\n";
    }
    out << "mean,,," << format_double(aggregate.mean_acc_primary) << ','
        << format_double(aggregate.mean_acc_aux) << ",\n";
    out << "range,,," << format_double(aggregate.range_acc_primary) << ','
        << format_double(aggregate.range_acc_aux) << ",\n";
    return aggregate;
}

std::vector<RunManifest> sweep(const ExperimentConfig& base, const std::string& axis,
                               std::span<const std::string> values,
                               std::span<const std::uint64_t> seeds,
                               const std::filesystem::path& out_root) {
    std::vector<RunManifest> manifests;
    std::vector<std::pair<std::string, RunManifest>> rows;
    for (const auto& value : values) {
        ExperimentConfig config = base;
        apply_config_value(config, axis, value);  // unknown axis fails here
        const auto aggregate = run(config, seeds, out_root);
        for (const auto& manifest : aggregate.runs) {
            manifests.push_back(manifest);
            rows.emplace_back(value, manifest);
        }
    }

    fs::create_directories(out_root);
    std::ofstream out(out_root / "sweep.csv");
    out << "axis,value,seed,run_id,val_acc_F,val_acc_A\n";
    for (const auto& [value, r] : rows) {
        out << axis << ',' << value << ',' << r.seed << ',' << r.run_id << ','
            << format_double(r.final_val_acc_primary) << ',' << format_double(r.final_val_acc_aux)
            << "\n";
    }
    return manifests;
}

void report_gap(const std::filesystem::path& run_dir, const std::filesystem::path& out_csv) {
    const auto config = load_run_config(run_dir);
    const auto validation = make_validation_set(config);
    auto [primary_cfg, primary] = load_checkpoint(run_dir / "checkpoints" / "primary.ckpt");
    auto [aux_cfg, aux] = load_checkpoint(run_dir / "checkpoints" / "auxiliary.ckpt");
    const auto table_large =
        class_accuracy(primary_cfg, primary, validation, config.eval_num_clips,
                       config.temporal.primary_frames, config.temporal.primary_stride);
    const auto table_small = class_accuracy(aux_cfg, aux, validation, config.eval_num_clips,
                                            config.temporal.aux_frames, config.temporal.aux_stride);
    const auto gaps = per_class_gap(table_small, table_large);

    std::ofstream out(out_csv);
    if (!out) throw ConfigError("cannot open " + out_csv.string());
    out << "class,kind,acc_small,acc_large,gap\n";
    for (const auto& g : gaps) {
        const char kind = class_kind(config.dataset, g.class_id) == VideoKind::Spatial ? 'S' : 'T';
        out << g.class_id << ',' << kind << ',' << format_double(g.acc_small) << ','
            << format_double(g.acc_large) << ',' << format_double(g.gap) << "\n";
    }
}

void report_subset(const std::filesystem::path& cmpl_run_dir,
                   const std::filesystem::path& reference_run_dir,
                   const std::filesystem::path& out_csv) {
    const auto config = load_run_config(cmpl_run_dir);
    const auto log = load_decisions_csv(cmpl_run_dir / "decisions.csv", config.tau);
    const auto ref_config = load_run_config(reference_run_dir);
    const auto ref_log = load_decisions_csv(reference_run_dir / "decisions.csv", ref_config.tau);
    const auto curve = subset_accuracy_curve(log, &ref_log, config.snapshot_interval);

    std::ofstream out(out_csv);
    if (!out) throw ConfigError("cannot open " + out_csv.string());
    out << "epoch,subset_size,acc_primary,acc_aux,acc_reference\n";
    for (const auto& p : curve) {
        out << p.epoch << ',' << p.subset_size << ',' << format_double(p.acc_primary) << ','
            << format_double(p.acc_aux) << ',' << format_double(p.acc_reference) << "\n";
    }
}

void report_bins(const std::filesystem::path& cmpl_run_dir,
                 const std::filesystem::path& fixmatch_run_dir,
                 const std::filesystem::path& aux_reference_run_dir,
                 const std::filesystem::path& out_csv) {
    const auto [cmpl_acc, cmpl_aux] = load_eval_csv(cmpl_run_dir / "eval.csv");
    const auto [fixmatch_acc, fixmatch_aux] = load_eval_csv(fixmatch_run_dir / "eval.csv");
    const auto [ref_primary, ref_aux] = load_eval_csv(aux_reference_run_dir / "eval.csv");
    if (cmpl_acc.size() != fixmatch_acc.size() || cmpl_acc.size() != ref_aux.size())
        throw ReportError("report_bins: run class counts differ");

    std::vector<double> gains(cmpl_acc.size());
    for (std::size_t c = 0; c < gains.size(); ++c) gains[c] = cmpl_acc[c] - fixmatch_acc[c];
    const auto bins = gain_vs_aux_bins(gains, ref_aux);

    std::ofstream out(out_csv);
    if (!out) throw ConfigError("cannot open " + out_csv.string());
    out << "bin_lo,mean_gain,count\n";
    for (const auto& b : bins) {
        out << format_double(b.lo) << ',' << format_double(b.mean_gain) << ',' << b.count << "\n";
    }
}

void report_stride(const std::filesystem::path& run_dir, const std::filesystem::path& out_csv) {
    const auto config = load_run_config(run_dir);
    const auto validation = make_validation_set(config);
    auto [primary_cfg, primary] = load_checkpoint(run_dir / "checkpoints" / "primary.ckpt");
    auto [aux_cfg, aux] = load_checkpoint(run_dir / "checkpoints" / "auxiliary.ckpt");

    std::vector<int> spatial_classes;
    std::vector<int> temporal_classes;
    for (int c = 0; c < config.dataset.num_classes; ++c) {
        (class_kind(config.dataset, c) == VideoKind::Spatial ? spatial_classes : temporal_classes)
            .push_back(c);
    }

    std::ofstream out(out_csv);
    if (!out) throw ConfigError("cannot open " + out_csv.string());
    out << "net,stride,accuracy,drop_ratio,acc_spatial,acc_temporal,drop_spatial,drop_temporal\n";
    auto emit = [&](const char* name, const ScalableNetConfig& cfg, const ParamStore& params,
                    int clip_stride) {
        std::vector<int> strides;
        for (int s : {1, 2, 4, 8}) {
            if (cfg.input_frames % s == 0) strides.push_back(s);
        }
        const auto degradation = stride_degradation(cfg, params, validation, strides, clip_stride);
        for (const auto& row : degradation.rows) {
            out << name << ',' << row.stride << ',' << format_double(row.accuracy) << ','
                << format_double(row.drop_ratio) << ','
                << format_double(row.per_class.subset_accuracy(spatial_classes)) << ','
                << format_double(row.per_class.subset_accuracy(temporal_classes)) << ','
                << format_double(degradation.subset_drop_ratio(row.stride, spatial_classes)) << ','
                << format_double(degradation.subset_drop_ratio(row.stride, temporal_classes))
                << "\n";
        }
    };
    emit("primary", primary_cfg, primary, config.temporal.primary_stride);
    emit("auxiliary", aux_cfg, aux, config.temporal.aux_stride);
}

void evaluate_run(const std::filesystem::path& run_dir, const std::filesystem::path& out_csv) {
    const auto config = load_run_config(run_dir);
    const auto validation = make_validation_set(config);
    auto [primary_cfg, primary] = load_checkpoint(run_dir / "checkpoints" / "primary.ckpt");
    auto [aux_cfg, aux] = load_checkpoint(run_dir / "checkpoints" / "auxiliary.ckpt");
    const auto acc_primary =
        class_accuracy(primary_cfg, primary, validation, config.eval_num_clips,
                       config.temporal.primary_frames, config.temporal.primary_stride);
    const auto acc_aux = class_accuracy(aux_cfg, aux, validation, config.eval_num_clips,
                                        config.temporal.aux_frames, config.temporal.aux_stride);
    write_eval_csv(out_csv, config, acc_primary, acc_aux);
}

}  // namespace cmpl
