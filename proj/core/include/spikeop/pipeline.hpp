#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikeop/config.hpp"
#include "spikeop/io.hpp"
#include "spikeop/rng.hpp"

namespace spikeop {

// Every randomized stage draws from a stream derived from the experiment
// master seed, so stages can rerun independently and still agree. The
// prediction stream is shared by calibration, evaluation and reliability:
// conformal validity needs the deployed predictor to be the exact function
// that was calibrated.
struct SeedPlan {
    std::uint64_t master = 0;

    std::uint64_t excitation_train() const { return derive_seed(master, 1); }
    std::uint64_t excitation_cal() const { return derive_seed(master, 2); }
    std::uint64_t excitation_test() const { return derive_seed(master, 3); }
    std::uint64_t excitation_reliability() const { return derive_seed(master, 4); }
    std::uint64_t predict() const { return derive_seed(master, 11); }
    std::uint64_t training(std::size_t dof_index) const {
        return derive_seed(master, 100 + dof_index);
    }
};

struct StageResult {
    std::vector<std::string> artifacts;  // file names relative to the output directory
    double wall_ms = 0.0;
};

std::string dataset_stem(const std::string& role, std::size_t dof);
std::string excitation_file(const std::string& role);
std::string checkpoint_stem(std::size_t dof);
std::string schedule_stem(std::size_t dof);

// Samples train/cal/test excitations, integrates the reference model and
// writes one dataset per (role, response dof).
StageResult run_simulate(const ExperimentConfig& cfg, const std::string& out_dir,
                         bool force = false, std::size_t n_threads = 1);

// Trains one surrogate per response dof on the training datasets.
StageResult run_train(const ExperimentConfig& cfg, const std::string& out_dir,
                      bool force = false);

// Computes per-timestep conformal quantiles from the calibration datasets.
StageResult run_calibrate(const ExperimentConfig& cfg, const std::string& out_dir,
                          bool force = false);

struct EvaluateMetrics {
    std::size_t response_dof = 0;
    double nmse_value = 0.0;
    CoverageReport coverage;
    std::vector<double> activity_pct;
};

// Prediction accuracy and interval coverage on the test datasets. With
// self_check the stored truths stand in for the predictions, which must
// give zero error and full coverage; it validates the harness, not the
// model.
StageResult run_evaluate(const ExperimentConfig& cfg, const std::string& out_dir,
                         bool force = false, bool self_check = false,
                         std::vector<EvaluateMetrics>* metrics_out = nullptr);

// Failure-probability curves from fresh excitations through the calibrated
// surrogate; optionally also through the reference model for comparison.
StageResult run_reliability(const ExperimentConfig& cfg, const std::string& out_dir,
                            bool force = false, std::size_t n_threads = 1,
                            std::vector<ReliabilityCurve>* curves_out = nullptr);

// Dense-versus-event-driven energy sweep for the configured layer shape.
StageResult run_energy_report(const ExperimentConfig& cfg, const std::string& out_dir,
                              bool force = false, EnergyCurve* curve_out = nullptr);

// All stages in order (reliability only when thresholds are configured).
void run_all(const ExperimentConfig& cfg, const std::string& out_dir, bool force = false,
             std::size_t n_threads = 1);

}  // namespace spikeop
