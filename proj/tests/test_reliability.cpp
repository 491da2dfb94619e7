#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "spikeop/errors.hpp"
#include "spikeop/reliability.hpp"
#include "spikeop/rng.hpp"

using namespace spikeop;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConformalSchedule unit_schedule(std::size_t n_times, double q = 1.0) {
    ConformalSchedule sched;
    sched.alpha = 0.05;
    sched.z = 1.959963984540054;
    sched.use_z = true;
    sched.times.assign(n_times, 0.0);
    sched.q.assign(n_times, q);
    sched.n_cal.assign(n_times, 100);
    sched.flagged_infinite.assign(n_times, 0);
    return sched;
}

}  // namespace

TEST_CASE("margins are signed toward failure") {
    PerformanceSpec spec;
    spec.u_crit = 40.0;
    CHECK(performance_margin(35.0, spec) == 5.0);
    CHECK(performance_margin(45.0, spec) == -5.0);
    CHECK(performance_margin(40.0, spec) == 0.0);

    spec.sense = ExceedanceSense::Below;
    spec.u_crit = 30.0;
    CHECK(performance_margin(35.0, spec) == 5.0);
    CHECK(performance_margin(25.0, spec) == -5.0);

    spec.sense = ExceedanceSense::Above;
    spec.u_crit_schedule = {1.0, 2.0, 3.0};
    CHECK(spec.threshold_at(1) == 2.0);
    CHECK(performance_margin(1.5, spec, 2) == 1.5);
}

TEST_CASE("first failure is the earliest grid crossing") {
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 5);
    PerformanceSpec spec;
    spec.u_crit = 40.0;

    Eigen::VectorXd u(5);
    u << 0.0, 10.0, 50.0, 20.0, 60.0;
    const FirstFailure f = first_time_to_failure(u, grid, spec);
    CHECK(f.failed);
    CHECK(f.tau == 0.5);

    u << 0.0, 40.0, 0.0, 0.0, 0.0;
    const FirstFailure at_threshold = first_time_to_failure(u, grid, spec);
    CHECK(at_threshold.failed);
    CHECK(at_threshold.tau == 0.25);

    u.setConstant(10.0);
    const FirstFailure safe = first_time_to_failure(u, grid, spec);
    CHECK(!safe.failed);
    CHECK(safe.tau == 1.0);

    CHECK_THROWS_AS(first_time_to_failure(Eigen::VectorXd::Zero(4), grid, spec), ShapeError);
}

TEST_CASE("the failure-time distribution accumulates by grid time") {
    const TimeGrid grid = TimeGrid::uniform(0.0, 2.0, 5);
    const std::vector<FirstFailure> failures{
        {0.5, true}, {1.5, true}, {2.0, false}, {2.0, false}};
    const Eigen::VectorXd pf = pof_curve(failures, grid);
    Eigen::VectorXd expected(5);
    expected << 0.0, 0.25, 0.25, 0.5, 0.5;
    CHECK((pf - expected).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(pof_curve({}, grid), Error);
}

TEST_CASE("trajectory batches match a brute-force recount") {
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 6);
    PerformanceSpec spec;
    spec.u_crit = 40.0;

    Rng rng(3);
    Eigen::MatrixXd u(20, 6);
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        for (Eigen::Index k = 0; k < u.cols(); ++k) u(i, k) = rng.uniform(-60.0, 60.0);

    const Eigen::VectorXd pf = pof_from_trajectories(u, grid, spec);

    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::size_t failed_by_k = 0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            for (Eigen::Index j = 0; j <= static_cast<Eigen::Index>(k); ++j) {
                if (u(i, j) >= 40.0) {
                    ++failed_by_k;
                    break;
                }
            }
        }
        CHECK(pf[static_cast<Eigen::Index>(k)] ==
              static_cast<double>(failed_by_k) / 20.0);
    }

    CHECK_THROWS_AS(pof_from_trajectories(Eigen::MatrixXd::Zero(2, 5), grid, spec), ShapeError);
}

TEST_CASE("tight bands reproduce the mean curve with usable bounds") {
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 4);
    PerformanceSpec spec;
    spec.u_crit = 10.0;

    PredictiveBand band;
    band.mu_hat.resize(3, 4);
    band.mu_hat << 2.0, 12.0, 3.0, 4.0,
                   2.0, 3.0, 4.0, 5.0,
                   2.0, 3.0, 15.0, 16.0;
    band.sigma_hat = Eigen::MatrixXd::Constant(3, 4, 1e-9);

    const ReliabilityCurve curve =
        reliability_from_bands(band, unit_schedule(4), grid, spec);
    Eigen::VectorXd expected(4);
    expected << 0.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0;
    CHECK((curve.pf_mean - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK((curve.pf_lower - curve.pf_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((curve.pf_upper - curve.pf_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK(curve.n_samples == 3);
    for (std::size_t k = 0; k < 4; ++k) CHECK(curve.bounds_usable[k] == 1);
}

TEST_CASE("wider bands widen the failure band monotonically") {
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 4);
    PerformanceSpec spec;
    spec.u_crit = 10.0;

    Rng rng(9);
    PredictiveBand band;
    band.mu_hat.resize(30, 4);
    for (Eigen::Index i = 0; i < 30; ++i)
        for (Eigen::Index k = 0; k < 4; ++k) band.mu_hat(i, k) = rng.uniform(0.0, 20.0);
    band.sigma_hat = Eigen::MatrixXd::Constant(30, 4, 2.0);

    const ReliabilityCurve narrow =
        reliability_from_bands(band, unit_schedule(4, 0.5), grid, spec);
    const ReliabilityCurve wide =
        reliability_from_bands(band, unit_schedule(4, 1.5), grid, spec);
    for (Eigen::Index k = 0; k < 4; ++k) {
        CHECK(wide.pf_lower[k] <= narrow.pf_lower[k]);
        CHECK(wide.pf_upper[k] >= narrow.pf_upper[k]);
        CHECK(narrow.pf_lower[k] <= narrow.pf_mean[k]);
        CHECK(narrow.pf_upper[k] >= narrow.pf_mean[k]);
    }
}

TEST_CASE("a flagged timestep poisons the bounds from there on") {
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 5);
    PerformanceSpec spec;
    spec.u_crit = 10.0;

    PredictiveBand band;
    band.mu_hat = Eigen::MatrixXd::Constant(4, 5, 2.0);
    band.sigma_hat = Eigen::MatrixXd::Constant(4, 5, 0.5);

    ConformalSchedule sched = unit_schedule(5);
    sched.q[2] = kInf;
    sched.flagged_infinite[2] = 1;

    const ReliabilityCurve curve = reliability_from_bands(band, sched, grid, spec);
    CHECK(curve.bounds_usable[0] == 1);
    CHECK(curve.bounds_usable[1] == 1);
    CHECK(curve.bounds_usable[2] == 0);
    CHECK(curve.bounds_usable[3] == 0);
    CHECK(curve.bounds_usable[4] == 0);

    CHECK(curve.pf_upper[1] == 0.0);
    CHECK(curve.pf_upper[2] == 1.0);
    CHECK(curve.pf_upper[4] == 1.0);
    CHECK(curve.pf_mean[4] == 0.0);
}

TEST_CASE("sense below counts downward crossings") {
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 3);
    PerformanceSpec spec;
    spec.u_crit = -5.0;
    spec.sense = ExceedanceSense::Below;

    Eigen::MatrixXd u(2, 3);
    u << 0.0, -6.0, 0.0,
         0.0, -1.0, -2.0;
    const Eigen::VectorXd pf = pof_from_trajectories(u, grid, spec);
    CHECK(pf[0] == 0.0);
    CHECK(pf[1] == 0.5);
    CHECK(pf[2] == 0.5);
}

TEST_CASE("normalized error worked values") {
    Eigen::MatrixXd truths(1, 3);
    truths << 1.0, 2.0, 3.0;

    CHECK(nmse(truths, truths) == 0.0);

    Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(1, 3, 2.0);
    CHECK(nmse(constant, truths) == doctest::Approx(1.0).epsilon(1e-14));

    Eigen::MatrixXd off(1, 3);
    off << 1.0, 2.0, 5.0;
    CHECK(nmse(off, truths) == doctest::Approx(2.0).epsilon(1e-14));

    CHECK_THROWS_AS(nmse(constant, constant), Error);
    CHECK_THROWS_AS(nmse(truths, Eigen::MatrixXd::Zero(2, 3)), ShapeError);
}

TEST_CASE("coverage counts inclusive bounds per timestep") {
    Eigen::MatrixXd truths(4, 2);
    truths << 1.0, 0.0,
              2.0, 0.0,
              3.0, 0.0,
              4.0, 0.0;

    IntervalMatrix iv;
    iv.lower.resize(4, 2);
    iv.upper.resize(4, 2);
    iv.lower << 1.0, -1.0,
                2.5, -1.0,
                0.0, -1.0,
                0.0, -1.0;
    iv.upper << 2.0, 1.0,
                3.0, 1.0,
                2.9, 1.0,
                4.0, 1.0;

    const CoverageReport rep = coverage_report(iv, truths, 95.0);
    CHECK(rep.per_time_pct[0] == 50.0);
    CHECK(rep.per_time_pct[1] == 100.0);
    CHECK(rep.avg_pct == 75.0);
    CHECK(rep.min_pct == 50.0);
    CHECK(rep.max_pct == 100.0);
    CHECK(rep.nominal_pct == 95.0);
    CHECK(rep.n_below_nominal == 1);
    CHECK(rep.n_at_or_above_nominal == 1);

    CHECK_THROWS_AS(coverage_report(iv, Eigen::MatrixXd::Zero(3, 2), 95.0), ShapeError);
}
