#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "spikeop/grid.hpp"

namespace spikeop {

// An ensemble of scalar functions of time sampled on a common grid.
// Row i is sample i; column j is grid point j.
struct FunctionSampleSet {
    TimeGrid grid;
    Eigen::MatrixXd values;

    std::size_t n_samples() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t n_points() const { return static_cast<std::size_t>(values.cols()); }

    // Keep every stride-th grid point (both endpoints retained).
    FunctionSampleSet subsample(std::size_t stride) const;
};

struct GrfConfig {
    double sigma = 50.0;         // marginal standard deviation
    double length_scale = 0.10;  // seconds
    double jitter_rel_start = 1e-8;
    double jitter_rel_max = 1e-2;
};

// Zero-mean Gaussian random field with squared-exponential covariance
// k(t,t') = sigma^2 exp(-(t-t')^2 / (2 l^2)), sampled via one Cholesky
// factorization of the grid covariance. If the factorization fails the
// diagonal is inflated by sigma^2 * jitter_rel, escalating tenfold per
// retry; running out of retries raises FactorizationError carrying the
// last absolute diagonal addition tried.
//
// Row `index` depends only on (master_seed, index), never on how many
// rows are drawn or in what order.
class GrfSampler {
public:
    GrfSampler(GrfConfig cfg, TimeGrid grid);

    Eigen::VectorXd sample_row(std::uint64_t master_seed, std::uint64_t index) const;
    FunctionSampleSet sample(std::uint64_t master_seed, std::size_t n_samples) const;

    const TimeGrid& grid() const { return grid_; }
    double applied_jitter() const { return applied_jitter_; }

private:
    GrfConfig cfg_;
    TimeGrid grid_;
    Eigen::MatrixXd chol_lower_;
    double applied_jitter_ = 0.0;
};

struct FourierConfig {
    std::size_t n_sin = 10;
    std::size_t n_cos = 10;
    double amp_min = 0.0;
    double amp_max = 1.0;
    double freq_min = 0.0;   // rad/s
    double freq_max = 20.0;  // rad/s
};

struct FourierCoefficients {
    Eigen::VectorXd sin_amp, sin_freq, cos_amp, cos_freq;

    double evaluate(double t) const;
};

// Random superposition of sines and cosines,
//   f(t) = sum_i a_i sin(w_i t) + sum_j b_j cos(v_j t),
// with amplitudes and angular frequencies drawn uniformly from the
// configured ranges. Per-row draw order is fixed: sin amplitudes, sin
// frequencies, cos amplitudes, cos frequencies.
class FourierSampler {
public:
    FourierSampler(FourierConfig cfg, TimeGrid grid);

    FourierCoefficients coefficients(std::uint64_t master_seed, std::uint64_t index) const;
    Eigen::VectorXd sample_row(std::uint64_t master_seed, std::uint64_t index) const;
    FunctionSampleSet sample(std::uint64_t master_seed, std::size_t n_samples) const;

    const TimeGrid& grid() const { return grid_; }

private:
    FourierConfig cfg_;
    TimeGrid grid_;
};

}  // namespace spikeop
