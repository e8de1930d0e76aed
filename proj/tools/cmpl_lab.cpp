// Experiment runner for the cross-model pseudo-labeling lab.
//
// Verbs: generate, train, evaluate, sweep, report.
// Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmpl/config.hpp"
#include "cmpl/errors.hpp"
#include "cmpl/runner.hpp"
#include "cmpl/synthdata.hpp"

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& item : split_list(text)) seeds.push_back(std::stoull(item));
    return seeds;
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seeds;
    std::string out_dir = "out";
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "experiment config file (key = value lines)");
    sub->add_option("--set", args.overrides, "config override key=value (repeatable)");
    sub->add_option("--seeds", args.seeds, "comma-separated seeds, one run each");
    sub->add_option("--out", args.out_dir, "output directory");
}

cmpl::ExperimentConfig build_config(const CommonArgs& args,
                                    std::vector<std::string>* sweep_override = nullptr) {
    cmpl::ExperimentConfig config = args.config_path.empty()
                                        ? cmpl::default_config()
                                        : cmpl::load_config_file(args.config_path);
    std::vector<std::string> plain;
    for (const auto& entry : args.overrides) {
        if (sweep_override != nullptr && entry.rfind("sweep=", 0) == 0) {
            sweep_override->push_back(entry.substr(6));
            continue;
        }
        plain.push_back(entry);
    }
    cmpl::apply_overrides(config, plain);
    return config;
}

void print_aggregate(const cmpl::RunAggregate& aggregate) {
    for (const auto& r : aggregate.runs) {
        std::cout << "run " << r.run_id << " seed=" << r.seed
                  << " val_acc_F=" << cmpl::format_double(r.final_val_acc_primary)
                  << " val_acc_A=" << cmpl::format_double(r.final_val_acc_aux)
                  << " pl_ratio=" << cmpl::format_double(r.final_pl_ratio) << " ("
                  << cmpl::format_double(r.duration_seconds) << "s)\n";
    }
    std::cout << "mean val_acc_F = " << cmpl::format_double(aggregate.mean_acc_primary)
              << " +- " << cmpl::format_double(aggregate.range_acc_primary / 2.0) << " (range "
              << cmpl::format_double(aggregate.range_acc_primary) << " over "
              << aggregate.runs.size() << " seeds)\n";
}

int run_generate(const CommonArgs& args) {
    const auto config = build_config(args);
    const auto videos = cmpl::generate_dataset(config.dataset);
    fs::create_directories(args.out_dir);
    const fs::path file = fs::path(args.out_dir) / "dataset.bin";
    cmpl::save_dataset(file, config.dataset, videos);
    cmpl::save_dataset_manifest(fs::path(args.out_dir) / "dataset.manifest", config.dataset);
    std::cout << "wrote " << videos.size() << " videos to " << file.string() << "\n";
    return 0;
}

int run_train(const CommonArgs& args) {
    std::vector<std::string> sweep_spec;
    const auto config = build_config(args, &sweep_spec);
    const auto seeds = parse_seeds(args.seeds);

    if (!sweep_spec.empty()) {
        // `--set sweep=axis:v1,v2,...` turns a train invocation into a sweep.
        const auto& spec = sweep_spec.back();
        const auto colon = spec.find(':');
        if (colon == std::string::npos)
            throw cmpl::ConfigError("sweep override must look like sweep=axis:v1,v2");
        const auto values = split_list(spec.substr(colon + 1));
        const auto manifests =
            cmpl::sweep(config, spec.substr(0, colon), values, seeds, args.out_dir);
        std::cout << "sweep finished: " << manifests.size() << " runs\n";
        return 0;
    }

    const auto aggregate = cmpl::run(config, seeds, args.out_dir);
    print_aggregate(aggregate);
    return 0;
}

int run_sweep(const CommonArgs& args, const std::string& axis, const std::string& values) {
    const auto config = build_config(args);
    const auto seeds = parse_seeds(args.seeds);
    const auto manifests = cmpl::sweep(config, axis, split_list(values), seeds, args.out_dir);
    std::cout << "sweep finished: " << manifests.size() << " runs, results under " << args.out_dir
              << "\n";
    return 0;
}

int run_evaluate(const std::string& run_dir, std::string out_dir) {
    if (out_dir.empty()) out_dir = run_dir;
    fs::create_directories(out_dir);
    cmpl::evaluate_run(run_dir, fs::path(out_dir) / "eval.csv");
    cmpl::report_stride(run_dir, fs::path(out_dir) / "stride.csv");
    std::cout << "wrote " << (fs::path(out_dir) / "eval.csv").string() << " and "
              << (fs::path(out_dir) / "stride.csv").string() << "\n";
    return 0;
}

int run_report(const std::string& kind, const std::vector<std::string>& runs,
               std::string out_file) {
    if (out_file.empty()) out_file = "report_" + kind + ".csv";
    auto need = [&](std::size_t n) {
        if (runs.size() != n)
            throw cmpl::ConfigError("report " + kind + " expects " + std::to_string(n) +
                                    " run directories");
    };
    if (kind == "gap") {
        need(1);
        cmpl::report_gap(runs[0], out_file);
    } else if (kind == "subset") {
        need(2);
        cmpl::report_subset(runs[0], runs[1], out_file);
    } else if (kind == "bins") {
        need(3);
        cmpl::report_bins(runs[0], runs[1], runs[2], out_file);
    } else if (kind == "stride") {
        need(1);
        cmpl::report_stride(runs[0], out_file);
    } else {
        throw cmpl::ConfigError("unknown report kind '" + kind + "' (gap|subset|bins|stride)");
    }
    std::cout << "wrote " << out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cmpl_lab: semi-supervised cross-model pseudo-labeling experiments"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string axis;
    std::string values;
    std::string run_dir;
    std::string report_kind;
    std::string report_out;
    std::vector<std::string> report_runs;

    auto* generate = app.add_subcommand("generate", "generate a dataset and write it to disk");
    add_common(generate, args);

    auto* train = app.add_subcommand("train", "run the full pipeline for each seed");
    add_common(train, args);

    std::string evaluate_out;
    auto* evaluate = app.add_subcommand("evaluate", "re-evaluate a finished run's checkpoints");
    evaluate->add_option("--run", run_dir, "run directory (runs/<id>)")->required();
    evaluate->add_option("--out", evaluate_out, "output directory (default: the run dir)");

    auto* sweep = app.add_subcommand("sweep", "run one config axis over a value list");
    add_common(sweep, args);
    sweep->add_option("--axis", axis, "config key to sweep")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();

    auto* report = app.add_subcommand("report", "assemble figures' CSV tables from run dirs");
    report->add_option("kind", report_kind, "gap|subset|bins|stride")->required();
    report->add_option("runs", report_runs, "run directories");
    report->add_option("--out", report_out, "output csv file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (generate->parsed()) return run_generate(args);
        if (train->parsed()) return run_train(args);
        if (evaluate->parsed()) return run_evaluate(run_dir, evaluate_out);
        if (sweep->parsed()) return run_sweep(args, axis, values);
        if (report->parsed()) return run_report(report_kind, report_runs, report_out);
    } catch (const cmpl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
