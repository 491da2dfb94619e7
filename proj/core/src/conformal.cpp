#include "spikeop/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spikeop/errors.hpp"
#include "spikeop/mathutil.hpp"

namespace spikeop {

Eigen::VectorXd nonconformity_scores(const Eigen::VectorXd& truths, const Eigen::VectorXd& mu_hat,
                                     const Eigen::VectorXd& sigma_hat) {
    if (truths.size() != mu_hat.size() || truths.size() != sigma_hat.size())
        throw ShapeError("nonconformity_scores: mismatched lengths");
    Eigen::VectorXd e(truths.size());
    for (Eigen::Index i = 0; i < truths.size(); ++i) {
        const double s = sigma_hat[i];
        if (!(s > 0.0))
            throw Error("nonconformity_scores: sigma_hat must be positive, got " +
                        std::to_string(s) + " at index " + std::to_string(i));
        e[i] = std::abs(truths[i] - mu_hat[i]) / s;
    }
    return e;
}

double conformal_quantile(std::vector<double> scores, double alpha, bool* flagged_infinite) {
    if (scores.empty()) throw Error("conformal_quantile: empty score list");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("conformal_quantile: alpha must lie in (0, 1)");
    const auto n = static_cast<double>(scores.size());
    const double r = (n + 1.0) * (1.0 - alpha);
    const double nearest = std::round(r);
    double rank = (std::abs(r - nearest) < 1e-9 * std::max(1.0, std::abs(r))) ? nearest
                                                                              : std::ceil(r);
    if (rank < 1.0) rank = 1.0;
    if (flagged_infinite) *flagged_infinite = false;
    if (rank > n) {
        if (flagged_infinite) *flagged_infinite = true;
        return std::numeric_limits<double>::infinity();
    }
    std::sort(scores.begin(), scores.end());
    return scores[static_cast<std::size_t>(rank) - 1];
}

ConformalSchedule schedule_from_scores(const std::vector<double>& times,
                                       const std::vector<std::vector<double>>& scores_per_time,
                                       double alpha, bool use_z) {
    if (times.size() != scores_per_time.size())
        throw ShapeError("schedule_from_scores: times and score lists differ in length");
    ConformalSchedule sched;
    sched.alpha = alpha;
    sched.use_z = use_z;
    sched.z = normal_quantile(1.0 - alpha / 2.0);
    sched.times = times;
    sched.q.reserve(times.size());
    sched.n_cal.reserve(times.size());
    sched.flagged_infinite.reserve(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (scores_per_time[k].empty())
            throw Error("schedule_from_scores: no calibration samples at t=" +
                        std::to_string(times[k]));
        bool flagged = false;
        sched.q.push_back(conformal_quantile(scores_per_time[k], alpha, &flagged));
        sched.n_cal.push_back(scores_per_time[k].size());
        sched.flagged_infinite.push_back(flagged ? 1 : 0);
    }
    return sched;
}

ConformalSchedule calibrate_schedule(const ModelBundle& model, const OperatorDataset& cal,
                                     double alpha, std::size_t n1, std::size_t n2,
                                     std::uint64_t seed, bool use_z) {
    cal.validate();
    if (cal.role == "train")
        throw ConfigError("calibrate_schedule: dataset is marked as training data; "
                          "calibration requires a split disjoint from training");
    if (cal.n_samples() == 0)
        throw Error("calibrate_schedule: no calibration samples at t=" +
                    std::to_string(cal.grid().t_start()));
    const PredictiveBand band =
        predict_band(model, cal.inputs.values, cal.grid().times(), n1, n2, seed);
    const std::size_t n_times = cal.n_times();
    std::vector<std::vector<double>> scores(n_times);
    for (std::size_t k = 0; k < n_times; ++k) {
        const Eigen::VectorXd e = nonconformity_scores(
            cal.responses.col(static_cast<Eigen::Index>(k)),
            band.mu_hat.col(static_cast<Eigen::Index>(k)),
            band.sigma_hat.col(static_cast<Eigen::Index>(k)));
        scores[k].assign(e.data(), e.data() + e.size());
    }
    return schedule_from_scores(cal.grid().times(), scores, alpha, use_z);
}

std::pair<double, double> calibrated_interval(double mu_hat, double sigma_hat, double q, double z) {
    if (std::isinf(q)) {
        return {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
    }
    const double half = z * q * sigma_hat;
    return {mu_hat - half, mu_hat + half};
}

IntervalMatrix calibrated_intervals(const PredictiveBand& band, const ConformalSchedule& sched) {
    const Eigen::Index n = band.mu_hat.rows();
    const Eigen::Index m = band.mu_hat.cols();
    if (static_cast<std::size_t>(m) != sched.q.size())
        throw ShapeError("calibrated_intervals: schedule length does not match band times");
    IntervalMatrix out;
    out.lower.resize(n, m);
    out.upper.resize(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (sched.flagged_infinite[ku]) {
            out.lower.col(k).setConstant(-std::numeric_limits<double>::infinity());
            out.upper.col(k).setConstant(std::numeric_limits<double>::infinity());
            continue;
        }
        const double mlt = sched.multiplier(ku);
        out.lower.col(k) = band.mu_hat.col(k) - mlt * band.sigma_hat.col(k);
        out.upper.col(k) = band.mu_hat.col(k) + mlt * band.sigma_hat.col(k);
    }
    return out;
}

}  // namespace spikeop
