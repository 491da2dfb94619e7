#include "spikeop/excitation.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "spikeop/errors.hpp"
#include "spikeop/rng.hpp"

namespace spikeop {

FunctionSampleSet FunctionSampleSet::subsample(std::size_t stride) const {
    if (stride == 0) throw ConfigError("subsample: stride must be positive");
    if ((n_points() - 1) % stride != 0)
        throw ConfigError("subsample: stride does not land on the last grid point");
    const std::size_t m = (n_points() - 1) / stride + 1;
    FunctionSampleSet out;
    std::vector<double> times(m);
    out.values.resize(values.rows(), static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        times[j] = grid[j * stride];
        out.values.col(static_cast<Eigen::Index>(j)) =
            values.col(static_cast<Eigen::Index>(j * stride));
    }
    out.grid = TimeGrid::from_times(std::move(times));
    return out;
}

GrfSampler::GrfSampler(GrfConfig cfg, TimeGrid grid) : cfg_(cfg), grid_(std::move(grid)) {
    if (cfg_.sigma <= 0.0) throw ConfigError("GrfSampler: sigma must be positive");
    if (cfg_.length_scale <= 0.0) throw ConfigError("GrfSampler: length_scale must be positive");

    const auto& t = grid_.times();
    const Eigen::Index n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd cov(n, n);
    const double s2 = cfg_.sigma * cfg_.sigma;
    const double inv2l2 = 1.0 / (2.0 * cfg_.length_scale * cfg_.length_scale);
    for (Eigen::Index i = 0; i < n; ++i) {
        cov(i, i) = s2;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d = t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(j)];
            const double v = s2 * std::exp(-d * d * inv2l2);
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }

    double jitter_rel = 0.0;
    for (;;) {
        Eigen::MatrixXd work = cov;
        if (jitter_rel > 0.0) work.diagonal().array() += jitter_rel * s2;
        Eigen::LLT<Eigen::MatrixXd> llt(work);
        if (llt.info() == Eigen::Success) {
            chol_lower_ = llt.matrixL();
            applied_jitter_ = jitter_rel * s2;
            return;
        }
        if (jitter_rel == 0.0) {
            jitter_rel = cfg_.jitter_rel_start;
        } else if (jitter_rel * 10.0 <= cfg_.jitter_rel_max * (1.0 + 1e-12)) {
            jitter_rel *= 10.0;
        } else {
            throw FactorizationError("GrfSampler: covariance not factorizable", jitter_rel * s2);
        }
    }
}

Eigen::VectorXd GrfSampler::sample_row(std::uint64_t master_seed, std::uint64_t index) const {
    Rng rng(derive_seed(master_seed, index));
    Eigen::VectorXd z(chol_lower_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return chol_lower_ * z;
}

FunctionSampleSet GrfSampler::sample(std::uint64_t master_seed, std::size_t n_samples) const {
    FunctionSampleSet out;
    out.grid = grid_;
    out.values.resize(static_cast<Eigen::Index>(n_samples),
                      static_cast<Eigen::Index>(grid_.size()));
    for (std::size_t i = 0; i < n_samples; ++i)
        out.values.row(static_cast<Eigen::Index>(i)) = sample_row(master_seed, i).transpose();
    return out;
}

double FourierCoefficients::evaluate(double t) const {
    double f = 0.0;
    for (Eigen::Index i = 0; i < sin_amp.size(); ++i) f += sin_amp[i] * std::sin(sin_freq[i] * t);
    for (Eigen::Index i = 0; i < cos_amp.size(); ++i) f += cos_amp[i] * std::cos(cos_freq[i] * t);
    return f;
}

FourierSampler::FourierSampler(FourierConfig cfg, TimeGrid grid)
    : cfg_(cfg), grid_(std::move(grid)) {
    if (cfg_.amp_max < cfg_.amp_min) throw ConfigError("FourierSampler: bad amplitude range");
    if (cfg_.freq_max < cfg_.freq_min) throw ConfigError("FourierSampler: bad frequency range");
}

FourierCoefficients FourierSampler::coefficients(std::uint64_t master_seed,
                                                 std::uint64_t index) const {
    Rng rng(derive_seed(master_seed, index));
    FourierCoefficients c;
    c.sin_amp.resize(static_cast<Eigen::Index>(cfg_.n_sin));
    c.sin_freq.resize(static_cast<Eigen::Index>(cfg_.n_sin));
    c.cos_amp.resize(static_cast<Eigen::Index>(cfg_.n_cos));
    c.cos_freq.resize(static_cast<Eigen::Index>(cfg_.n_cos));
    for (Eigen::Index i = 0; i < c.sin_amp.size(); ++i)
        c.sin_amp[i] = rng.uniform(cfg_.amp_min, cfg_.amp_max);
    for (Eigen::Index i = 0; i < c.sin_freq.size(); ++i)
        c.sin_freq[i] = rng.uniform(cfg_.freq_min, cfg_.freq_max);
    for (Eigen::Index i = 0; i < c.cos_amp.size(); ++i)
        c.cos_amp[i] = rng.uniform(cfg_.amp_min, cfg_.amp_max);
    for (Eigen::Index i = 0; i < c.cos_freq.size(); ++i)
        c.cos_freq[i] = rng.uniform(cfg_.freq_min, cfg_.freq_max);
    return c;
}

Eigen::VectorXd FourierSampler::sample_row(std::uint64_t master_seed, std::uint64_t index) const {
    const FourierCoefficients c = coefficients(master_seed, index);
    const auto& t = grid_.times();
    Eigen::VectorXd f(static_cast<Eigen::Index>(t.size()));
    for (std::size_t j = 0; j < t.size(); ++j) f[static_cast<Eigen::Index>(j)] = c.evaluate(t[j]);
    return f;
}

FunctionSampleSet FourierSampler::sample(std::uint64_t master_seed, std::size_t n_samples) const {
    FunctionSampleSet out;
    out.grid = grid_;
    out.values.resize(static_cast<Eigen::Index>(n_samples),
                      static_cast<Eigen::Index>(grid_.size()));
    for (std::size_t i = 0; i < n_samples; ++i)
        out.values.row(static_cast<Eigen::Index>(i)) = sample_row(master_seed, i).transpose();
    return out;
}

}  // namespace spikeop
