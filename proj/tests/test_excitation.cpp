#include <cmath>

#include "doctest.h"
#include "spikeop/errors.hpp"
#include "spikeop/excitation.hpp"
#include "spikeop/rng.hpp"

using namespace spikeop;

TEST_CASE("grf rows depend only on (seed, index)") {
    GrfSampler sampler({2.0, 0.3, 1e-8, 1e-2}, TimeGrid::uniform(0.0, 1.0, 21));

    const FunctionSampleSet batch5 = sampler.sample(42, 5);
    const FunctionSampleSet batch9 = sampler.sample(42, 9);
    CHECK((batch5.values.row(3).array() == batch9.values.row(3).array()).all());
    CHECK((batch5.values.row(3).array() == sampler.sample_row(42, 3).transpose().array()).all());
    CHECK((batch5.values.row(0).array() != batch5.values.row(1).array()).any());

    const FunctionSampleSet other = sampler.sample(43, 5);
    CHECK((batch5.values.row(0).array() != other.values.row(0).array()).any());
}

TEST_CASE("grf empirical covariance matches the kernel") {
    const double sigma = 2.0, l = 0.3;
    GrfSampler sampler({sigma, l, 1e-8, 1e-2}, TimeGrid::uniform(0.0, 1.0, 5));
    const std::size_t n = 20000;
    const FunctionSampleSet set = sampler.sample(7, n);

    const Eigen::MatrixXd centered =
        set.values.rowwise() - set.values.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    const auto& t = set.grid.times();
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const double d = t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(j)];
            const double expected = sigma * sigma * std::exp(-d * d / (2.0 * l * l));
            CHECK(cov(i, j) == doctest::Approx(expected).epsilon(0.06));
        }
    }
}

TEST_CASE("grf jitter escalation rescues a numerically singular kernel") {
    // length_scale 1e8 over a unit window makes every covariance entry agree
    // to ~1e-16, which is rank one in double precision.
    GrfSampler sampler({3.0, 1e8, 1e-8, 1e-2}, TimeGrid::uniform(0.0, 1.0, 50));
    CHECK(sampler.applied_jitter() > 0.0);

    const Eigen::VectorXd row = sampler.sample_row(1, 0);
    CHECK(row.allFinite());
    // Nearly perfectly correlated field: the row is almost constant.
    CHECK((row.maxCoeff() - row.minCoeff()) < 1e-3 * row.cwiseAbs().maxCoeff());
}

TEST_CASE("grf factorization failure reports the last jitter tried") {
    // Jitter ceiling far below machine precision of the diagonal: every
    // retry is a no-op and the constructor must give up.
    try {
        GrfSampler sampler({3.0, 1e8, 1e-18, 1e-17}, TimeGrid::uniform(0.0, 1.0, 50));
        FAIL("expected FactorizationError");
    } catch (const FactorizationError& e) {
        CHECK(e.attempted_jitter == doctest::Approx(1e-17 * 9.0));
    }
}

TEST_CASE("fourier coefficients come from one pinned draw sequence") {
    FourierConfig cfg;
    cfg.n_sin = 2;
    cfg.n_cos = 1;
    FourierSampler sampler(cfg, TimeGrid::uniform(0.0, 1.0, 11));

    const FourierCoefficients c = sampler.coefficients(99, 4);
    Rng rng(derive_seed(99, 4));
    const double a0 = rng.uniform(0.0, 1.0), a1 = rng.uniform(0.0, 1.0);
    const double w0 = rng.uniform(0.0, 20.0), w1 = rng.uniform(0.0, 20.0);
    const double b0 = rng.uniform(0.0, 1.0);
    const double v0 = rng.uniform(0.0, 20.0);
    CHECK(c.sin_amp[0] == a0);
    CHECK(c.sin_amp[1] == a1);
    CHECK(c.sin_freq[0] == w0);
    CHECK(c.sin_freq[1] == w1);
    CHECK(c.cos_amp[0] == b0);
    CHECK(c.cos_freq[0] == v0);

    const double t = 0.37;
    const double expected = a0 * std::sin(w0 * t) + a1 * std::sin(w1 * t) + b0 * std::cos(v0 * t);
    CHECK(c.evaluate(t) == doctest::Approx(expected).epsilon(1e-15));

    const Eigen::VectorXd row = sampler.sample_row(99, 4);
    CHECK(row[0] == doctest::Approx(b0).epsilon(1e-15));  // t = 0: sines vanish
}

TEST_CASE("fourier rows are reproducible and bounded") {
    FourierSampler sampler({}, TimeGrid::uniform(0.0, 2.0, 101));
    const FunctionSampleSet a = sampler.sample(5, 4);
    const FunctionSampleSet b = sampler.sample(5, 4);
    CHECK((a.values.array() == b.values.array()).all());
    // 10 sines + 10 cosines with amplitudes in [0, 1].
    CHECK(a.values.cwiseAbs().maxCoeff() <= 20.0);
}

TEST_CASE("subsample keeps every stride-th point") {
    FunctionSampleSet set;
    set.grid = TimeGrid::uniform(0.0, 1.0, 11);
    set.values.resize(2, 11);
    for (int j = 0; j < 11; ++j) {
        set.values(0, j) = j;
        set.values(1, j) = 10.0 * j;
    }

    const FunctionSampleSet half = set.subsample(5);
    CHECK(half.n_points() == 3);
    CHECK(half.grid[0] == 0.0);
    CHECK(half.grid[1] == doctest::Approx(0.5));
    CHECK(half.grid[2] == 1.0);
    CHECK(half.values(0, 1) == 5.0);
    CHECK(half.values(1, 2) == 100.0);

    CHECK_THROWS_AS(set.subsample(3), ConfigError);
}
