#pragma once

#include <Eigen/Core>
#include <cmath>

namespace spikeop {

// log(1 + e^x) without overflow for large |x|.
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// Inverse of softplus on y > 0: log(e^y - 1).
inline double softplus_inv(double y) {
    return y + std::log(-std::expm1(-y));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Standard normal quantile, Acklam's rational approximation with one
// Halley refinement step. Good to ~1e-15 over (0, 1).
double normal_quantile(double p);

inline Eigen::ArrayXd softplus(const Eigen::ArrayXd& x) {
    return (x > 0.0).select(x + (-x).exp().log1p(), x.exp().log1p());
}

inline Eigen::ArrayXd sigmoid_arr(const Eigen::ArrayXd& x) {
    return (x > 0.0).select(1.0 / (1.0 + (-x).exp()), x.exp() / (1.0 + x.exp()));
}

}  // namespace spikeop
