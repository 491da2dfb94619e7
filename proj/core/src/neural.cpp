#include "spikeop/neural.hpp"

namespace spikeop {

namespace {

Eigen::ArrayXXd apply_phi(const Eigen::ArrayXXd& z, PhiKind phi) {
    if (phi == PhiKind::Relu) return z.max(0.0);
    return z;
}

}  // namespace

VsnForwardRecord vsn_forward(const std::vector<Eigen::ArrayXXd>& drive_seq,
                             const VsnLayerParams& p, GateMode mode) {
    if (drive_seq.size() != p.t_s)
        throw ShapeError("vsn_forward: drive sequence length does not match t_s");
    if (p.t_s == 0) throw ConfigError("vsn_forward: t_s must be at least 1");

    VsnForwardRecord rec;
    rec.t_s = p.t_s;
    rec.batch = static_cast<std::size_t>(drive_seq[0].rows());
    rec.width = static_cast<std::size_t>(drive_seq[0].cols());
    if (static_cast<Eigen::Index>(rec.width) != p.thresholds.size() ||
        p.thresholds.size() != p.leak_raw.size())
        throw ShapeError("vsn_forward: parameter width mismatch");

    const Eigen::ArrayXd beta = p.beta();
    const double k = p.surrogate_slope;

    rec.drive = drive_seq;
    rec.membrane.reserve(p.t_s);
    rec.gate.reserve(p.t_s);
    rec.output = Eigen::ArrayXXd::Zero(drive_seq[0].rows(), drive_seq[0].cols());

    Eigen::ArrayXXd m = Eigen::ArrayXXd::Zero(drive_seq[0].rows(), drive_seq[0].cols());
    for (std::size_t t = 0; t < p.t_s; ++t) {
        if (drive_seq[t].rows() != m.rows() || drive_seq[t].cols() != m.cols())
            throw ShapeError("vsn_forward: inconsistent drive shapes across steps");
        m = m.rowwise() * beta.transpose() + drive_seq[t];
        rec.membrane.push_back(m);

        const Eigen::ArrayXXd excess = m.rowwise() - p.thresholds.transpose();
        rec.spike_count += static_cast<std::size_t>((excess >= 0.0).count());

        Eigen::ArrayXXd gate;
        if (mode == GateMode::Hard) {
            gate = (excess >= 0.0).cast<double>();
        } else {
            gate = 0.5 * (1.0 + k * excess / (1.0 + k * excess.abs()));
        }
        rec.gate.push_back(gate);
        rec.output += rec.gate.back() * apply_phi(drive_seq[t], p.phi);
    }
    rec.output /= static_cast<double>(p.t_s);
    return rec;
}

VsnForwardRecord vsn_forward_repeat(const Eigen::ArrayXXd& drive, const VsnLayerParams& p,
                                    GateMode mode) {
    std::vector<Eigen::ArrayXXd> seq(p.t_s, drive);
    return vsn_forward(seq, p, mode);
}

VsnBackwardResult vsn_backward(const VsnForwardRecord& rec, const Eigen::ArrayXXd& d_output,
                               const VsnLayerParams& p, GateMode mode) {
    (void)mode;  // the surrogate derivative is the same in both modes
    if (d_output.rows() != rec.output.rows() || d_output.cols() != rec.output.cols())
        throw ShapeError("vsn_backward: upstream gradient shape mismatch");

    const Eigen::ArrayXd beta = p.beta();
    const double k = p.surrogate_slope;
    const double inv_t = 1.0 / static_cast<double>(rec.t_s);

    VsnBackwardResult out;
    out.d_drive.assign(rec.t_s, Eigen::ArrayXXd::Zero(d_output.rows(), d_output.cols()));
    out.d_thresholds = Eigen::ArrayXd::Zero(p.thresholds.size());
    out.d_leak_raw = Eigen::ArrayXd::Zero(p.leak_raw.size());

    // Local membrane gradients per step, then the adjoint sweep through
    // M_t = beta M_{t-1} + z_t collects them backwards in time.
    std::vector<Eigen::ArrayXXd> d_m_local(rec.t_s);
    for (std::size_t t = 0; t < rec.t_s; ++t) {
        const Eigen::ArrayXXd phi_z = (p.phi == PhiKind::Relu)
                                          ? rec.drive[t].max(0.0).eval()
                                          : rec.drive[t];
        const Eigen::ArrayXXd d_gate = d_output * inv_t * phi_z;
        const Eigen::ArrayXXd excess = rec.membrane[t].rowwise() - p.thresholds.transpose();
        const Eigen::ArrayXXd sg =
            k / (2.0 * (1.0 + k * excess.abs()).square());
        d_m_local[t] = d_gate * sg;
        out.d_thresholds -= d_m_local[t].colwise().sum().transpose();

        // Direct path through phi(z_t).
        Eigen::ArrayXXd d_phi = d_output * inv_t * rec.gate[t];
        if (p.phi == PhiKind::Relu) d_phi *= (rec.drive[t] > 0.0).cast<double>();
        out.d_drive[t] += d_phi;
    }

    Eigen::ArrayXXd adj = Eigen::ArrayXXd::Zero(d_output.rows(), d_output.cols());
    for (std::size_t t = rec.t_s; t-- > 0;) {
        adj = d_m_local[t] + (adj.rowwise() * beta.transpose());
        out.d_drive[t] += adj;
        if (t > 0) {
            // dM_t/dbeta picks up M_{t-1}.
            out.d_leak_raw += (adj * rec.membrane[t - 1]).colwise().sum().transpose();
        }
    }
    out.d_leak_raw *= beta * (1.0 - beta);
    return out;
}

Eigen::ArrayXd sample_weights(const Eigen::ArrayXd& mu, const Eigen::ArrayXd& delta,
                              const Eigen::ArrayXd& kappa) {
    if (mu.size() != delta.size() || mu.size() != kappa.size())
        throw ShapeError("sample_weights: size mismatch");
    return mu + softplus(delta) * kappa;
}

double kl_to_standard_normal(const Eigen::ArrayXd& mu, const Eigen::ArrayXd& delta) {
    if (mu.size() != delta.size()) throw ShapeError("kl_to_standard_normal: size mismatch");
    const Eigen::ArrayXd sigma = softplus(delta);
    return (-sigma.log() + (sigma.square() + mu.square() - 1.0) * 0.5).sum();
}

void kl_grad(const Eigen::ArrayXd& mu, const Eigen::ArrayXd& delta, Eigen::ArrayXd& d_mu,
             Eigen::ArrayXd& d_delta) {
    const Eigen::ArrayXd sigma = softplus(delta);
    d_mu = mu;
    d_delta = (sigma - 1.0 / sigma) * sigmoid_arr(delta);
}

Adam::Adam(std::size_t n_params, AdamConfig cfg)
    : cfg_(cfg),
      m_(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(n_params))),
      v_(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(n_params))) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw ShapeError("Adam::step: size mismatch");
    if (!grads.allFinite()) throw Error("Adam::step: non-finite gradient, update rejected");

    ++t_;
    const Eigen::ArrayXd g = grads.array();
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * g;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * g.square();
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= cfg_.lr * (m_ / bc1) / ((v_ / bc2).sqrt() + cfg_.eps);
}

}  // namespace spikeop
