#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uwsn/harness.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::optional<unsigned> workers;
    std::optional<std::size_t> trials;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path,
                    "Key-value config file (empty or absent: defaults)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "Master seed override");
    cmd->add_option("--out", flags.out_dir, "Output directory");
    cmd->add_option("--workers", flags.workers, "Worker thread override");
    cmd->add_option("--trials", flags.trials, "Trial count override");
}

uwsn::ExperimentConfig resolve(const CommonFlags& flags) {
    uwsn::ExperimentConfig cfg = flags.config_path.empty()
                                     ? uwsn::parse_config("")
                                     : uwsn::load_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.workers) cfg.workers = *flags.workers;
    if (flags.trials) cfg.trials = *flags.trials;
    return cfg;
}

int run_simulate(const CommonFlags& flags) {
    const uwsn::ExperimentConfig cfg = resolve(flags);
    uwsn::Experiment exp(cfg);
    const uwsn::RunSummary summary = exp.run_monte_carlo();
    uwsn::write_results(summary, cfg, flags.out_dir);
    std::printf("simulate: %zu trials, %zu steps, final mse %.6g, "
                "%zu underflow events, %.1f s\n",
                summary.trials, summary.mse.size(), summary.mse.back(),
                summary.underflow_events, summary.wall_seconds);
    std::printf("wrote %s/mse.csv\n", flags.out_dir.c_str());
    return 0;
}

int run_front(const CommonFlags& flags, std::size_t step) {
    uwsn::ExperimentConfig cfg = resolve(flags);
    if (cfg.scheme != uwsn::Scheme::Fiss &&
        cfg.scheme != uwsn::Scheme::Miubss)
        throw std::runtime_error(
            "front: selection.scheme must be fiss or miubss");
    if (step >= cfg.steps) cfg.steps = step + 1;
    uwsn::Experiment exp(cfg);

    std::vector<uwsn::FrontPoint> captured;
    exp.run_trial(exp.trial_seed(0), [&](const uwsn::Experiment::StepProbe& p) {
        if (p.step == step && p.front)
            captured = uwsn::to_front_points(*p.front);
    });
    if (captured.empty())
        throw std::runtime_error("front: no front captured at that step");
    std::filesystem::create_directories(flags.out_dir);
    const std::string path = (std::filesystem::path(flags.out_dir) /
                              ("front_" + std::to_string(step) + ".csv"))
                                 .string();
    uwsn::write_front_csv(captured, path);
    std::printf("front: %zu points at step %zu -> %s\n", captured.size(), step,
                path.c_str());
    return 0;
}

int run_metrics(const CommonFlags& flags, std::size_t step) {
    uwsn::ExperimentConfig cfg = resolve(flags);
    if (step >= cfg.steps) cfg.steps = step + 1;
    uwsn::Experiment exp(cfg);

    bool written = false;
    std::filesystem::create_directories(flags.out_dir);
    const std::string path =
        (std::filesystem::path(flags.out_dir) / "metrics.csv").string();
    exp.run_trial(exp.trial_seed(0), [&](const uwsn::Experiment::StepProbe& p) {
        if (p.step != step) return;
        uwsn::write_metrics_csv(*p.table, exp.field(),
                                uwsn::estimate(*p.cloud), path);
        written = true;
    });
    if (!written)
        throw std::runtime_error("metrics: step out of range");
    std::printf("metrics: %zu sensors at step %zu -> %s\n",
                exp.field().sensors.size(), step, path.c_str());
    return 0;
}

int run_compare(const CommonFlags& flags,
                const std::vector<std::string>& config_paths) {
    if (config_paths.size() < 2)
        throw std::runtime_error("compare: need at least two --config files");
    std::vector<std::string> names;
    std::vector<uwsn::RunSummary> summaries;
    std::size_t steps = 0;
    for (const std::string& path : config_paths) {
        CommonFlags one = flags;
        one.config_path = path;
        const uwsn::ExperimentConfig cfg = resolve(one);
        uwsn::Experiment exp(cfg);
        summaries.push_back(exp.run_monte_carlo());
        std::string stem = std::filesystem::path(path).stem().string();
        if (stem.empty()) stem = "config" + std::to_string(names.size());
        names.push_back(stem);
        steps = std::max(steps, summaries.back().mse.size());
        std::printf("compare: %s final mse %.6g\n", stem.c_str(),
                    summaries.back().mse.back());
    }
    std::filesystem::create_directories(flags.out_dir);
    const std::string path =
        (std::filesystem::path(flags.out_dir) / "compare.csv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "step";
    for (const std::string& n : names) out << ",mse_" << n;
    out << '\n';
    for (std::size_t t = 0; t < steps; ++t) {
        out << t;
        for (const uwsn::RunSummary& s : summaries)
            out << ','
                << (t < s.mse.size() ? uwsn::format_double(s.mse[t]) : "");
        out << '\n';
    }
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Target tracking with adaptive sensor selection"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::size_t step = 0;
    std::vector<std::string> compare_configs;

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Monte-Carlo tracking run; writes mse.csv");
    add_common(simulate, flags);

    CLI::App* front = app.add_subcommand(
        "front", "Dump the Pareto front of one step of a single trial");
    add_common(front, flags);
    front->add_option("--step", step, "Step index to capture");

    CLI::App* metrics = app.add_subcommand(
        "metrics", "Dump per-sensor information metrics at one step");
    add_common(metrics, flags);
    metrics->add_option("--step", step, "Step index to capture");

    CLI::App* compare = app.add_subcommand(
        "compare", "Run several configs and tabulate their MSE curves");
    compare->add_option("--config", compare_configs, "Config files (repeat)")
        ->check(CLI::ExistingFile);
    compare->add_option("--seed", flags.seed, "Master seed override");
    compare->add_option("--out", flags.out_dir, "Output directory");
    compare->add_option("--workers", flags.workers, "Worker thread override");
    compare->add_option("--trials", flags.trials, "Trial count override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return run_simulate(flags);
        if (front->parsed()) return run_front(flags, step);
        if (metrics->parsed()) return run_metrics(flags, step);
        if (compare->parsed()) return run_compare(flags, compare_configs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
