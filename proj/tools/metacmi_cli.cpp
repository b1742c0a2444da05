#include <cinttypes>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metacmi/metacmi.hpp"

namespace {

using namespace metacmi;

void print_check_table(const std::vector<CheckResult>& checks) {
    std::printf("%-42s %14s %12s %12s %8s  %s\n", "check", "statistic", "threshold", "stderr", "trials", "result");
    for (const auto& c : checks)
        std::printf("%-42s %14.6g %12.4g %12.4g %8zu  %s\n", c.name.c_str(), c.statistic, c.threshold, c.std_error,
                    c.trials, c.passed ? "PASS" : "FAIL");
}

int run_bound(const ExperimentConfig& cfg, std::size_t n, bool write_out) {
    const SweepPoint point = sweep_point(cfg, n);
    const BoundReport& rep = point.report;
    std::printf("n = %zu, m = %zu, trials = %zu, seed = %" PRIu64 "\n", rep.n, rep.m, rep.trials, rep.seed);
    std::printf("env CMI      : %.6g nats (stderr %.3g, cap %.6g)\n", rep.env_cmi.value, rep.env_cmi.std_error,
                entropy_cap_env(rep.n, rep.m));
    std::printf("mean task CMI: %.6g nats (cap %.6g)\n", rep.mean_task_cmi(), entropy_cap_task(rep.m));
    std::printf("env term     : %.6g\n", rep.env_term);
    std::printf("task term    : %.6g\n", rep.task_term);
    std::printf("bound        : %.6g (stderr %.3g, cap %.6g)\n", rep.bound_value, rep.bound_stderr, rep.cap_value);
    std::printf("E[L(U)]      : %.6g\n", point.row.expected_meta_loss);
    std::printf("true gap     : %.6g (stderr %.3g)\n", point.row.true_gap, point.row.true_gap_stderr);
    if (write_out) {
        std::filesystem::create_directories(cfg.output_dir);
        const auto path = std::filesystem::path(cfg.output_dir) / "bound.csv";
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            std::fprintf(stderr, "error: cannot write %s\n", path.string().c_str());
            return 1;
        }
        out << sweep_csv({{point.row}});
        std::printf("wrote %s\n", path.string().c_str());
    }
    return 0;
}

int run_sweep_cmd(const ExperimentConfig& cfg) {
    const auto rows = write_sweep_outputs(cfg);
    std::printf("%4s %12s %12s %12s %12s %12s\n", "n", "bound", "env_term", "task_term", "E[L(U)]", "true_gap");
    for (const auto& r : rows)
        std::printf("%4zu %12.6g %12.6g %12.6g %12.6g %12.6g\n", r.n, r.bound_value, r.env_term, r.task_term,
                    r.expected_meta_loss, r.true_gap);
    std::printf("wrote %s/sweep.csv and %s/sweep.svg\n", cfg.output_dir.c_str(), cfg.output_dir.c_str());
    return 0;
}

int run_validate(const ExperimentConfig& cfg, std::size_t trials) {
    const auto checks =
        run_default_checks(cfg.environment(), cfg.m, cfg.learner(), trials, cfg.seed, cfg.threads);
    print_check_table(checks);
    for (const auto& c : checks)
        if (!c.passed) return 1;
    return 0;
}

int run_oracle(const ExperimentConfig& cfg, std::size_t instances) {
    // Brute-force cross-checks of the exact CMI pipeline at N=2, M=2.
    constexpr std::size_t n = 2, m = 2;
    const TaskEnvironment env({0.5, 0.5}, {0.3, 0.7});
    const BaseLearnerConfig learner = cfg.learner();
    const RandomStream root(cfg.seed);
    double max_env_diff = 0.0, max_task_diff = 0.0;
    for (std::size_t inst = 0; inst < instances; ++inst) {
        RandomStream r = root.substream(inst);
        const MetaSupersample ss = build_meta_supersample(env, n, m, r);
        max_env_diff = std::max(max_env_diff, std::abs(env_cmi_exact_given_supersample(ss, learner) -
                                                       enumeration::env_cmi_by_selection_enumeration(ss)));
        for (std::size_t i = 0; i < n; ++i)
            for (std::uint8_t r_i = 0; r_i <= 1; ++r_i)
                max_task_diff =
                    std::max(max_task_diff, std::abs(task_cmi_exact_given_supersample(ss, i, r_i, learner) -
                                                     enumeration::task_cmi_by_selection_enumeration(ss, i, r_i, learner)));
    }
    const CheckResult decomp = check_decomposition_exact(env, n, m, learner);
    const bool env_ok = max_env_diff <= 1e-12;
    const bool task_ok = max_task_diff <= 1e-12;
    std::printf("env CMI vs selection enumeration : max |diff| = %.3g over %zu supersamples  %s\n", max_env_diff,
                instances, env_ok ? "PASS" : "FAIL");
    std::printf("task CMI vs selection enumeration: max |diff| = %.3g over %zu supersamples  %s\n", max_task_diff,
                instances, task_ok ? "PASS" : "FAIL");
    std::printf("decomposition identity (exact)   : |lhs-rhs| = %.3g  %s\n", decomp.statistic,
                decomp.passed ? "PASS" : "FAIL");
    return env_ok && task_ok && decomp.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional-mutual-information generalization bounds for meta-learning"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    std::string out_dir;
    unsigned threads = 0;
    app.add_option("--config", config_path, "key = value config file (see configs/fig2.cfg)");
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    auto* trials_opt = app.add_option("--trials", trials, "override mc_trials");
    auto* out_opt = app.add_option("--out", out_dir, "override output_dir");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads (0 = hardware)");

    std::size_t bound_n = 10;
    auto* cmd_bound = app.add_subcommand("bound", "compute one bound report for a given n");
    cmd_bound->add_option("--n", bound_n, "number of meta-training tasks")->check(CLI::PositiveNumber);

    auto* cmd_sweep = app.add_subcommand("sweep", "run the n-sweep study and write CSV + SVG");

    auto* cmd_validate = app.add_subcommand("validate", "run the numerical validation battery");

    std::size_t oracle_instances = 100;
    auto* cmd_oracle = app.add_subcommand("oracle", "brute-force enumeration cross-checks at N=2, M=2");
    cmd_oracle->add_option("--instances", oracle_instances, "random supersamples to check");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_experiment_config(config_path);
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (trials_opt->count() > 0) cfg.mc_trials = trials;
        if (out_opt->count() > 0) cfg.output_dir = out_dir;
        if (threads_opt->count() > 0) cfg.threads = threads;
        cfg.validate();

        if (cmd_bound->parsed()) return run_bound(cfg, bound_n, out_opt->count() > 0);
        if (cmd_sweep->parsed()) return run_sweep_cmd(cfg);
        if (cmd_validate->parsed()) return run_validate(cfg, cfg.mc_trials);
        if (cmd_oracle->parsed()) return run_oracle(cfg, oracle_instances);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
