#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "spikeop/opnet.hpp"

namespace spikeop {

// Per-timestep calibration output. q[k] is the conformal parameter for
// grid time times[k]; a rank past the calibration sample count makes it
// +infinity and flags the timestep.
struct ConformalSchedule {
    double alpha = 0.05;
    double z = 0.0;      // standard normal quantile at 1 - alpha/2
    bool use_z = true;   // multiply intervals by z as well as q
    std::vector<double> times;
    std::vector<double> q;
    std::vector<std::size_t> n_cal;
    std::vector<std::uint8_t> flagged_infinite;

    // Half-width multiplier applied to sigma_hat at timestep k.
    double multiplier(std::size_t k) const { return (use_z ? z : 1.0) * q[k]; }
};

// e_i = |u_i - mu_i| / sigma_i. Zero sigma cannot be normalized.
Eigen::VectorXd nonconformity_scores(const Eigen::VectorXd& truths, const Eigen::VectorXd& mu_hat,
                                     const Eigen::VectorXd& sigma_hat);

// Order statistic at 1-based rank ceil((n+1)(1-alpha)) of the ascending
// scores; +infinity (flagged) when the rank exceeds n. Ranks that land
// within 1e-9 of an integer are rounded before the ceiling so binary
// representations of alpha cannot shift the index.
double conformal_quantile(std::vector<double> scores, double alpha,
                          bool* flagged_infinite = nullptr);

// Builds a schedule directly from per-timestep score lists (synthetic and
// test harness entry point).
ConformalSchedule schedule_from_scores(const std::vector<double>& times,
                                       const std::vector<std::vector<double>>& scores_per_time,
                                       double alpha, bool use_z = true);

// Predicts the calibration set with the same (n1, n2, seed) the deployment
// predictions use, scores each timestep, and extracts quantiles. Refuses
// datasets marked as training data: split-conformal validity requires the
// calibration split to be disjoint from training.
ConformalSchedule calibrate_schedule(const ModelBundle& model, const OperatorDataset& cal,
                                     double alpha, std::size_t n1, std::size_t n2,
                                     std::uint64_t seed, bool use_z = true);

// [mu - m q sigma, mu + m q sigma] with m = z or 1 per the schedule; an
// infinite q yields an unbounded interval.
std::pair<double, double> calibrated_interval(double mu_hat, double sigma_hat, double q, double z);

struct IntervalMatrix {
    Eigen::MatrixXd lower;  // n_inputs x n_times
    Eigen::MatrixXd upper;
};

IntervalMatrix calibrated_intervals(const PredictiveBand& band, const ConformalSchedule& sched);

}  // namespace spikeop
