#include "spikeop/reliability.hpp"

#include <cmath>
#include <limits>

#include "spikeop/errors.hpp"

namespace spikeop {

double performance_margin(double u, const PerformanceSpec& spec, std::size_t time_index) {
    const double thr = spec.threshold_at(time_index);
    return spec.sense == ExceedanceSense::Above ? thr - u : u - thr;
}

FirstFailure first_time_to_failure(const Eigen::VectorXd& u, const TimeGrid& grid,
                                   const PerformanceSpec& spec) {
    if (static_cast<std::size_t>(u.size()) != grid.size())
        throw ShapeError("first_time_to_failure: trajectory length does not match grid");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (performance_margin(u[static_cast<Eigen::Index>(k)], spec, k) <= 0.0)
            return {grid[k], true};
    }
    return {grid.t_end(), false};
}

Eigen::VectorXd pof_curve(const std::vector<FirstFailure>& failures, const TimeGrid& grid) {
    if (failures.empty()) throw Error("pof_curve: empty batch");
    Eigen::VectorXd pf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    for (const auto& f : failures) {
        if (!f.failed) continue;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (f.tau <= grid[k]) pf[static_cast<Eigen::Index>(k)] += 1.0;
        }
    }
    pf /= static_cast<double>(failures.size());
    return pf;
}

namespace {

std::vector<FirstFailure> batch_fttf(const Eigen::MatrixXd& u, const TimeGrid& grid,
                                     const PerformanceSpec& spec) {
    std::vector<FirstFailure> out;
    out.reserve(static_cast<std::size_t>(u.rows()));
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        out.push_back(first_time_to_failure(u.row(i).transpose(), grid, spec));
    return out;
}

}  // namespace

Eigen::VectorXd pof_from_trajectories(const Eigen::MatrixXd& u, const TimeGrid& grid,
                                      const PerformanceSpec& spec) {
    if (static_cast<std::size_t>(u.cols()) != grid.size())
        throw ShapeError("pof_from_trajectories: column count does not match grid");
    return pof_curve(batch_fttf(u, grid, spec), grid);
}

ReliabilityCurve reliability_from_bands(const PredictiveBand& band, const ConformalSchedule& sched,
                                        const TimeGrid& grid, const PerformanceSpec& spec) {
    const Eigen::Index n = band.mu_hat.rows();
    const Eigen::Index m = band.mu_hat.cols();
    if (static_cast<std::size_t>(m) != grid.size())
        throw ShapeError("reliability_from_bands: band width does not match grid");
    if (static_cast<std::size_t>(m) != sched.q.size())
        throw ShapeError("reliability_from_bands: schedule length does not match grid");
    if (n == 0) throw Error("reliability_from_bands: empty batch");
    if (!spec.u_crit_schedule.empty() && spec.u_crit_schedule.size() != grid.size())
        throw ShapeError("reliability_from_bands: threshold schedule does not match grid");

    const IntervalMatrix iv = calibrated_intervals(band, sched);
    ReliabilityCurve curve;
    curve.grid = grid;
    curve.n_samples = static_cast<std::size_t>(n);
    curve.pf_mean = pof_from_trajectories(band.mu_hat, grid, spec);
    const Eigen::VectorXd pf_from_lower = pof_from_trajectories(iv.lower, grid, spec);
    const Eigen::VectorXd pf_from_upper = pof_from_trajectories(iv.upper, grid, spec);
    curve.pf_lower = pf_from_lower.cwiseMin(pf_from_upper);
    curve.pf_upper = pf_from_lower.cwiseMax(pf_from_upper);

    curve.bounds_usable.assign(grid.size(), 1);
    bool usable = true;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (sched.flagged_infinite[k]) usable = false;
        curve.bounds_usable[k] = usable ? 1 : 0;
    }
    return curve;
}

ReliabilityCurve surrogate_reliability(const ModelBundle& model, const ConformalSchedule& sched,
                                       const FunctionSampleSet& inputs, const PerformanceSpec& spec,
                                       std::size_t n1, std::size_t n2, std::uint64_t seed) {
    const PredictiveBand band =
        predict_band(model, inputs.values, inputs.grid.times(), n1, n2, seed);
    return reliability_from_bands(band, sched, inputs.grid, spec);
}

double nmse(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths) {
    if (predictions.rows() != truths.rows() || predictions.cols() != truths.cols())
        throw ShapeError("nmse: shape mismatch");
    if (truths.size() == 0) throw Error("nmse: empty matrices");
    const double mean = truths.mean();
    const double denom = (truths.array() - mean).square().mean();
    if (!(denom > 0.0)) throw Error("nmse: truth ensemble has zero variance");
    const double mse = (predictions - truths).array().square().mean();
    return mse / denom;
}

CoverageReport coverage_report(const IntervalMatrix& intervals, const Eigen::MatrixXd& truths,
                               double nominal_pct) {
    const Eigen::Index n = truths.rows();
    const Eigen::Index m = truths.cols();
    if (intervals.lower.rows() != n || intervals.lower.cols() != m ||
        intervals.upper.rows() != n || intervals.upper.cols() != m)
        throw ShapeError("coverage_report: interval shape does not match truths");
    if (n == 0 || m == 0) throw Error("coverage_report: empty matrices");

    CoverageReport rep;
    rep.nominal_pct = nominal_pct;
    rep.per_time_pct.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto covered =
            (truths.col(k).array() >= intervals.lower.col(k).array()) &&
            (truths.col(k).array() <= intervals.upper.col(k).array());
        rep.per_time_pct[k] =
            100.0 * covered.cast<double>().sum() / static_cast<double>(n);
    }
    rep.avg_pct = rep.per_time_pct.mean();
    rep.min_pct = rep.per_time_pct.minCoeff();
    rep.max_pct = rep.per_time_pct.maxCoeff();
    for (Eigen::Index k = 0; k < m; ++k) {
        if (rep.per_time_pct[k] < nominal_pct)
            ++rep.n_below_nominal;
        else
            ++rep.n_at_or_above_nominal;
    }
    return rep;
}

}  // namespace spikeop
