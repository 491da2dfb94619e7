#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "spikeop/errors.hpp"
#include "spikeop/mathutil.hpp"

namespace spikeop {

// Graded output applied to the presynaptic drive when a neuron fires.
enum class PhiKind { Relu, Identity };

// Hard: spiking threshold as specified (0/1 gate), surrogate used in the
// backward pass only. Smooth: the gate itself is replaced by the surrogate's
// primitive, making analytic gradients exact for this forward map. Smooth
// exists so gradients can be audited against finite differences.
enum class GateMode { Hard, Smooth };

struct VsnLayerParams {
    Eigen::ArrayXd thresholds;  // firing threshold per neuron
    Eigen::ArrayXd leak_raw;    // membrane leakage beta = sigmoid(leak_raw)
    std::size_t t_s = 2;        // internal spike time steps
    double surrogate_slope = 25.0;
    PhiKind phi = PhiKind::Relu;

    Eigen::ArrayXd beta() const { return sigmoid_arr(leak_raw); }
};

// Everything the backward pass needs, plus spike statistics for the
// energy metrics. All per-step matrices are batch x width.
struct VsnForwardRecord {
    std::vector<Eigen::ArrayXXd> drive;
    std::vector<Eigen::ArrayXXd> membrane;
    std::vector<Eigen::ArrayXXd> gate;   // factor actually applied (0/1 or smooth)
    Eigen::ArrayXXd output;              // mean of the per-step outputs
    std::size_t spike_count = 0;         // hard-threshold firings across batch/steps
    std::size_t batch = 0;
    std::size_t width = 0;
    std::size_t t_s = 0;
};

struct VsnBackwardResult {
    std::vector<Eigen::ArrayXXd> d_drive;
    Eigen::ArrayXd d_thresholds;
    Eigen::ArrayXd d_leak_raw;
};

// Membrane recurrence M_t = beta * M_{t-1} + z_t from zero initial
// membrane, output phi(z_t) gated on M_t >= threshold, no reset after
// firing. drive_seq holds one batch x width drive per time step.
VsnForwardRecord vsn_forward(const std::vector<Eigen::ArrayXXd>& drive_seq,
                             const VsnLayerParams& p, GateMode mode = GateMode::Hard);

// Static-input convenience: the same drive is presented at every step.
VsnForwardRecord vsn_forward_repeat(const Eigen::ArrayXXd& drive, const VsnLayerParams& p,
                                    GateMode mode = GateMode::Hard);

// Exact chain rule through the recurrence and phi; the spike indicator is
// differentiated with the fast-sigmoid surrogate
//   d gate / dM ~= k / (2 (1 + k |M - T_h|)^2).
VsnBackwardResult vsn_backward(const VsnForwardRecord& rec, const Eigen::ArrayXXd& d_output,
                               const VsnLayerParams& p, GateMode mode = GateMode::Hard);

// Surrogate derivative and its smooth primitive (used as the Smooth gate).
inline double surrogate_deriv(double x, double k) {
    const double d = 1.0 + k * std::abs(x);
    return k / (2.0 * d * d);
}
inline double surrogate_gate(double x, double k) {
    return 0.5 * (1.0 + k * x / (1.0 + k * std::abs(x)));
}

// Reparameterized draw theta = mu + softplus(delta) * kappa.
Eigen::ArrayXd sample_weights(const Eigen::ArrayXd& mu, const Eigen::ArrayXd& delta,
                              const Eigen::ArrayXd& kappa);

// KL(q || N(0, I)) for the diagonal Gaussian q with sigma = softplus(delta):
//   sum_k [ -log sigma_k + (sigma_k^2 + mu_k^2 - 1) / 2 ].
double kl_to_standard_normal(const Eigen::ArrayXd& mu, const Eigen::ArrayXd& delta);
void kl_grad(const Eigen::ArrayXd& mu, const Eigen::ArrayXd& delta, Eigen::ArrayXd& d_mu,
             Eigen::ArrayXd& d_delta);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(std::size_t n_params, AdamConfig cfg = {});

    // Bias-corrected update in place. Non-finite gradients are rejected.
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);

    std::size_t step_count() const { return t_; }

private:
    AdamConfig cfg_;
    Eigen::ArrayXd m_, v_;
    std::size_t t_ = 0;
};

}  // namespace spikeop
