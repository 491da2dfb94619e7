#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "spikeop/conformal.hpp"
#include "spikeop/excitation.hpp"
#include "spikeop/grid.hpp"
#include "spikeop/opnet.hpp"

namespace spikeop {

// Whether failure means the response exceeding the threshold from below
// (Above) or dropping through it (Below).
enum class ExceedanceSense { Above, Below };

// Failure threshold on the monitored response. A non-empty schedule gives a
// per-grid-time threshold and overrides the constant.
struct PerformanceSpec {
    double u_crit = 0.0;
    ExceedanceSense sense = ExceedanceSense::Above;
    std::vector<double> u_crit_schedule;

    double threshold_at(std::size_t k) const {
        return u_crit_schedule.empty() ? u_crit : u_crit_schedule.at(k);
    }
};

// Signed margin; failure is margin <= 0.
double performance_margin(double u, const PerformanceSpec& spec, std::size_t time_index = 0);

struct FirstFailure {
    double tau = 0.0;     // first grid time with margin <= 0, or the grid end
    bool failed = false;  // false when the trajectory never crosses
};

FirstFailure first_time_to_failure(const Eigen::VectorXd& u, const TimeGrid& grid,
                                   const PerformanceSpec& spec);

// Empirical CDF of the failure times over the whole batch: entry k is the
// fraction of trajectories that have failed by grid time k. Trajectories
// that never fail contribute to no entry.
Eigen::VectorXd pof_curve(const std::vector<FirstFailure>& failures, const TimeGrid& grid);

struct ReliabilityCurve {
    TimeGrid grid;
    Eigen::VectorXd pf_mean;
    Eigen::VectorXd pf_lower;
    Eigen::VectorXd pf_upper;
    std::vector<std::uint8_t> bounds_usable;  // false from the first unbounded interval onward
    std::size_t n_samples = 0;
};

// Probability-of-failure curve from predictive means plus conformal bounds:
// pf_mean from the mean trajectories, pf_lower/pf_upper as the pointwise
// envelope of the curves traced by the interval edges.
ReliabilityCurve reliability_from_bands(const PredictiveBand& band, const ConformalSchedule& sched,
                                        const TimeGrid& grid, const PerformanceSpec& spec);

// Convenience wrapper: predict fresh inputs with the model, then apply
// reliability_from_bands.
ReliabilityCurve surrogate_reliability(const ModelBundle& model, const ConformalSchedule& sched,
                                       const FunctionSampleSet& inputs, const PerformanceSpec& spec,
                                       std::size_t n1, std::size_t n2, std::uint64_t seed);

// Same curve from direct trajectories (Monte Carlo ground truth).
Eigen::VectorXd pof_from_trajectories(const Eigen::MatrixXd& u, const TimeGrid& grid,
                                      const PerformanceSpec& spec);

// Mean squared error normalized by the variance of the truth around its
// global mean.
double nmse(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths);

struct CoverageReport {
    Eigen::VectorXd per_time_pct;  // percentage of samples covered at each grid time
    double avg_pct = 0.0;
    double min_pct = 0.0;
    double max_pct = 0.0;
    double nominal_pct = 0.0;
    std::size_t n_below_nominal = 0;
    std::size_t n_at_or_above_nominal = 0;
};

// Fraction of truths inside [lower, upper] per timestep, compared against
// the nominal level (e.g. 95 for alpha = 0.05).
CoverageReport coverage_report(const IntervalMatrix& intervals, const Eigen::MatrixXd& truths,
                               double nominal_pct);

}  // namespace spikeop
