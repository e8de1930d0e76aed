#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cmpl/config.hpp"
#include "cmpl/metrics.hpp"
#include "cmpl/trainer.hpp"

namespace cmpl {

// One training run = one (config, seed). Output layout:
//   <root>/runs/<run_id>/{manifest.txt, config.txt, metrics.csv,
//                         decisions.csv, eval.csv, checkpoints/}
struct RunManifest {
    std::string run_id;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string mode;
    std::string scheme;
    std::filesystem::path out_dir;
    double duration_seconds = 0.0;
    bool complete = false;
    double final_val_acc_primary = 0.0;
    double final_val_acc_aux = 0.0;
    double final_pl_ratio = 0.0;
};

struct RunAggregate {
    std::vector<RunManifest> runs;
    double mean_acc_primary = 0.0;
    double range_acc_primary = 0.0;  // max - min over seeds
    double mean_acc_aux = 0.0;
    double range_acc_aux = 0.0;
};

RunManifest run_single(const ExperimentConfig& config, const std::filesystem::path& out_root);

// generate -> split -> train -> evaluate -> export, once per seed; writes
// <out_root>/summary.csv with per-seed rows plus mean and range rows.
RunAggregate run(const ExperimentConfig& base, std::span<const std::uint64_t> seeds,
                 const std::filesystem::path& out_root);

// Sequential runs along one config axis with identical seeds per value;
// writes <out_root>/sweep.csv.
std::vector<RunManifest> sweep(const ExperimentConfig& base, const std::string& axis,
                               std::span<const std::string> values,
                               std::span<const std::uint64_t> seeds,
                               const std::filesystem::path& out_root);

// Regenerates the validation set exactly as run_single does.
std::vector<Video> make_validation_set(const ExperimentConfig& config);

void write_manifest(const std::filesystem::path& file, const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& file);

void write_metrics_csv(const std::filesystem::path& file, const MetricsLog& log);
void write_decisions_csv(const std::filesystem::path& file, const MetricsLog& log);
// Reads snapshot records (plus tau / unlabeled_total) back from a run dir.
MetricsLog load_decisions_csv(const std::filesystem::path& file, double tau);

void write_eval_csv(const std::filesystem::path& file, const ExperimentConfig& config,
                    const ClassAccuracyTable& primary, const ClassAccuracyTable& aux);
// Returns per-class accuracy columns from an eval.csv: {acc_primary, acc_aux}.
std::pair<std::vector<double>, std::vector<double>> load_eval_csv(
    const std::filesystem::path& file);

// Post-hoc reports over finished run directories.
void report_gap(const std::filesystem::path& run_dir, const std::filesystem::path& out_csv);
void report_subset(const std::filesystem::path& cmpl_run_dir,
                   const std::filesystem::path& reference_run_dir,
                   const std::filesystem::path& out_csv);
void report_bins(const std::filesystem::path& cmpl_run_dir,
                 const std::filesystem::path& fixmatch_run_dir,
                 const std::filesystem::path& aux_reference_run_dir,
                 const std::filesystem::path& out_csv);
void report_stride(const std::filesystem::path& run_dir, const std::filesystem::path& out_csv);

// Re-evaluates a finished run's checkpoints on its validation set and
// rewrites eval.csv next to out_csv (used by the `evaluate` verb).
void evaluate_run(const std::filesystem::path& run_dir, const std::filesystem::path& out_csv);

}  // namespace cmpl
