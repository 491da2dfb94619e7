#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spikeop/config.hpp"
#include "spikeop/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "run";
    std::uint64_t seed = 0;
    bool force = false;
    std::size_t threads = 1;
    CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "experiment configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out_dir, "output directory");
    args.seed_opt = sub->add_option("--seed", args.seed, "override the configured master seed");
    sub->add_flag("--force", args.force, "overwrite existing artifacts");
    sub->add_option("--threads", args.threads, "worker threads for the integrator")
        ->check(CLI::PositiveNumber);
}

spikeop::ExperimentConfig load_config(const CommonArgs& args) {
    spikeop::ExperimentConfig cfg = spikeop::ExperimentConfig::from_file(args.config_path);
    if (args.seed_opt && args.seed_opt->count() > 0) cfg.seed = args.seed;
    return cfg;
}

void print_stage(const char* stage, const spikeop::StageResult& result) {
    std::printf("%s: wrote %zu artifacts in %.0f ms\n", stage, result.artifacts.size(),
                result.wall_ms);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spiking operator surrogates with conformal uncertainty"};
    app.require_subcommand(1);

    CommonArgs simulate_args, train_args, calibrate_args, evaluate_args, reliability_args,
        energy_args, all_args;
    bool self_check = false;

    CLI::App* simulate = app.add_subcommand("simulate", "sample excitations and integrate");
    add_common(simulate, simulate_args);
    CLI::App* train = app.add_subcommand("train", "fit one surrogate per response dof");
    add_common(train, train_args);
    CLI::App* calibrate = app.add_subcommand("calibrate", "compute conformal quantiles");
    add_common(calibrate, calibrate_args);
    CLI::App* evaluate = app.add_subcommand("evaluate", "test accuracy and coverage");
    add_common(evaluate, evaluate_args);
    evaluate->add_flag("--self-check", self_check,
                       "score the stored truths as predictions (harness validation)");
    CLI::App* reliability = app.add_subcommand("reliability", "failure-probability curves");
    add_common(reliability, reliability_args);
    CLI::App* energy = app.add_subcommand("energy-report", "dense vs event-driven energy sweep");
    add_common(energy, energy_args);
    CLI::App* all = app.add_subcommand("all", "run every stage in order");
    add_common(all, all_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            print_stage("simulate", spikeop::run_simulate(load_config(simulate_args),
                                                          simulate_args.out_dir,
                                                          simulate_args.force,
                                                          simulate_args.threads));
        } else if (train->parsed()) {
            print_stage("train", spikeop::run_train(load_config(train_args), train_args.out_dir,
                                                    train_args.force));
        } else if (calibrate->parsed()) {
            print_stage("calibrate",
                        spikeop::run_calibrate(load_config(calibrate_args),
                                               calibrate_args.out_dir, calibrate_args.force));
        } else if (evaluate->parsed()) {
            std::vector<spikeop::EvaluateMetrics> metrics;
            const spikeop::StageResult result =
                spikeop::run_evaluate(load_config(evaluate_args), evaluate_args.out_dir,
                                      evaluate_args.force, self_check, &metrics);
            for (const auto& m : metrics)
                std::printf("dof %zu: nmse %.4g, coverage avg %.2f%% (min %.2f%%)\n",
                            m.response_dof, m.nmse_value, m.coverage.avg_pct,
                            m.coverage.min_pct);
            print_stage("evaluate", result);
        } else if (reliability->parsed()) {
            print_stage("reliability",
                        spikeop::run_reliability(load_config(reliability_args),
                                                 reliability_args.out_dir, reliability_args.force,
                                                 reliability_args.threads));
        } else if (energy->parsed()) {
            spikeop::EnergyCurve curve;
            const spikeop::StageResult result = spikeop::run_energy_report(
                load_config(energy_args), energy_args.out_dir, energy_args.force, &curve);
            if (curve.has_crossover)
                std::printf("break-even input activity: %.4f\n", curve.alpha_star);
            print_stage("energy-report", result);
        } else if (all->parsed()) {
            spikeop::run_all(load_config(all_args), all_args.out_dir, all_args.force,
                             all_args.threads);
            std::printf("all stages completed\n");
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
