#include "spikeop/opnet.hpp"

#include <algorithm>
#include <cmath>

#include "spikeop/rng.hpp"

namespace spikeop {

namespace {

constexpr double kSigmaEps = 1e-6;

Eigen::ArrayXXd softplus_xx(const Eigen::ArrayXXd& x) {
    return (x > 0.0).select(x + (-x).exp().log1p(), x.exp().log1p());
}

Eigen::ArrayXXd sigmoid_xx(const Eigen::ArrayXXd& x) {
    return (x > 0.0).select(1.0 / (1.0 + (-x).exp()), x.exp() / (1.0 + x.exp()));
}

struct SideSpec {
    bool is_branch;
    const std::vector<std::size_t>* widths;
    std::size_t tensor_base;  // index of the side's first entry in var_tensors
};

SideSpec branch_side(const OperatorArchitecture& arch) {
    return {true, &arch.branch_widths, 0};
}
SideSpec trunk_side(const OperatorArchitecture& arch) {
    return {false, &arch.trunk_widths, 2 * arch.branch_widths.size()};
}

bool act_after_layer(const OperatorArchitecture& arch, std::size_t l) {
    return std::find(arch.act_after.begin(), arch.act_after.end(), l) != arch.act_after.end();
}

VsnLayerParams vsn_params_at(const OperatorArchitecture& arch, const ParamLayout& layout,
                             const double* vsn_base, std::size_t site) {
    const SegmentInfo& th = layout.vsn_tensors[2 * site];
    const SegmentInfo& lk = layout.vsn_tensors[2 * site + 1];
    VsnLayerParams p;
    p.thresholds = Eigen::Map<const Eigen::ArrayXd>(vsn_base + th.offset,
                                                    static_cast<Eigen::Index>(th.count()));
    p.leak_raw = Eigen::Map<const Eigen::ArrayXd>(vsn_base + lk.offset,
                                                  static_cast<Eigen::Index>(lk.count()));
    p.t_s = arch.t_s;
    p.surrogate_slope = arch.surrogate_slope;
    p.phi = arch.phi;
    return p;
}

struct SubnetCache {
    std::vector<Eigen::MatrixXd> layer_in;
    std::vector<Eigen::MatrixXd> preact;
    std::vector<VsnForwardRecord> vsn_recs;
};

Eigen::MatrixXd subnet_forward(const OperatorArchitecture& arch, const ParamLayout& layout,
                               const SideSpec& side, const double* theta, const double* vsn_base,
                               const Eigen::MatrixXd& input, GateMode mode, SubnetCache* cache,
                               std::vector<double>* activity_pct) {
    const auto& widths = *side.widths;
    const bool spiking = side.is_branch && arch.branch_activation == BranchActivation::Vsn;
    Eigen::MatrixXd x = input;
    std::size_t site = 0;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        const SegmentInfo& sw = layout.var_tensors[side.tensor_base + 2 * l];
        const SegmentInfo& sb = layout.var_tensors[side.tensor_base + 2 * l + 1];
        Eigen::Map<const Eigen::MatrixXd> w(theta + sw.offset, static_cast<Eigen::Index>(sw.rows),
                                            static_cast<Eigen::Index>(sw.cols));
        Eigen::Map<const Eigen::VectorXd> b(theta + sb.offset,
                                            static_cast<Eigen::Index>(sb.rows));
        Eigen::MatrixXd z = x * w.transpose();
        z.rowwise() += b.transpose();
        if (cache) {
            cache->layer_in.push_back(std::move(x));
            cache->preact.push_back(z);
        }
        if (act_after_layer(arch, l)) {
            if (spiking) {
                VsnLayerParams p = vsn_params_at(arch, layout, vsn_base, site);
                VsnForwardRecord rec = vsn_forward_repeat(z.array(), p, mode);
                if (activity_pct)
                    activity_pct->push_back(100.0 * static_cast<double>(rec.spike_count) /
                                            (static_cast<double>(rec.batch) *
                                             static_cast<double>(rec.width) *
                                             static_cast<double>(rec.t_s)));
                x = rec.output.matrix();
                if (cache) cache->vsn_recs.push_back(std::move(rec));
                ++site;
            } else {
                x = z.cwiseMax(0.0);
            }
        } else {
            x = std::move(z);
        }
    }
    return x;
}

void subnet_backward(const OperatorArchitecture& arch, const ParamLayout& layout,
                     const SideSpec& side, const double* theta, const double* vsn_base,
                     const SubnetCache& cache, const Eigen::MatrixXd& d_features,
                     double* d_theta, double* d_vsn, GateMode mode) {
    const auto& widths = *side.widths;
    const bool spiking = side.is_branch && arch.branch_activation == BranchActivation::Vsn;
    std::size_t site = cache.vsn_recs.size();
    Eigen::MatrixXd dx = d_features;
    for (std::size_t l = widths.size(); l-- > 0;) {
        Eigen::MatrixXd dz;
        if (act_after_layer(arch, l)) {
            if (spiking) {
                --site;
                VsnLayerParams p = vsn_params_at(arch, layout, vsn_base, site);
                const VsnForwardRecord& rec = cache.vsn_recs[site];
                VsnBackwardResult res = vsn_backward(rec, dx.array(), p, mode);
                dz = Eigen::MatrixXd::Zero(dx.rows(), dx.cols());
                for (const auto& dd : res.d_drive) dz += dd.matrix();
                const SegmentInfo& th = layout.vsn_tensors[2 * site];
                const SegmentInfo& lk = layout.vsn_tensors[2 * site + 1];
                Eigen::Map<Eigen::ArrayXd>(d_vsn + th.offset,
                                           static_cast<Eigen::Index>(th.count())) +=
                    res.d_thresholds;
                Eigen::Map<Eigen::ArrayXd>(d_vsn + lk.offset,
                                           static_cast<Eigen::Index>(lk.count())) +=
                    res.d_leak_raw;
            } else {
                dz = (dx.array() * (cache.preact[l].array() > 0.0).cast<double>()).matrix();
            }
        } else {
            dz = std::move(dx);
        }
        const SegmentInfo& sw = layout.var_tensors[side.tensor_base + 2 * l];
        const SegmentInfo& sb = layout.var_tensors[side.tensor_base + 2 * l + 1];
        Eigen::Map<const Eigen::MatrixXd> w(theta + sw.offset, static_cast<Eigen::Index>(sw.rows),
                                            static_cast<Eigen::Index>(sw.cols));
        Eigen::Map<Eigen::MatrixXd>(d_theta + sw.offset, static_cast<Eigen::Index>(sw.rows),
                                    static_cast<Eigen::Index>(sw.cols)) +=
            dz.transpose() * cache.layer_in[l];
        Eigen::Map<Eigen::VectorXd>(d_theta + sb.offset, static_cast<Eigen::Index>(sb.rows)) +=
            dz.colwise().sum().transpose();
        if (l > 0) dx = dz * w;
    }
}

Eigen::VectorXd realize_theta(const ModelBundle& m, const Eigen::VectorXd& kappa) {
    return (m.mu().array() + softplus(Eigen::ArrayXd(m.delta().array())) * kappa.array()).matrix();
}

}  // namespace

void OperatorArchitecture::validate() const {
    if (n_sensors == 0) throw ConfigError("OperatorArchitecture: n_sensors must be positive");
    if (branch_widths.empty() || trunk_widths.empty())
        throw ConfigError("OperatorArchitecture: empty subnet");
    if (latent == 0) throw ConfigError("OperatorArchitecture: latent width must be positive");
    if (branch_widths.back() != 2 * latent || trunk_widths.back() != 2 * latent)
        throw ConfigError("OperatorArchitecture: final widths must equal 2*latent");
    for (std::size_t idx : act_after) {
        if (idx + 1 >= branch_widths.size() || idx + 1 >= trunk_widths.size())
            throw ConfigError("OperatorArchitecture: activation after the final layer");
    }
    if (t_s == 0) throw ConfigError("OperatorArchitecture: t_s must be at least 1");
    if (surrogate_slope <= 0.0)
        throw ConfigError("OperatorArchitecture: surrogate slope must be positive");
}

OperatorArchitecture OperatorArchitecture::standard(std::size_t n_sensors, std::size_t width,
                                                    std::size_t n_layers, std::size_t latent,
                                                    BranchActivation act) {
    if (n_layers < 2) throw ConfigError("OperatorArchitecture: need at least 2 layers");
    OperatorArchitecture a;
    a.n_sensors = n_sensors;
    a.branch_widths.assign(n_layers - 1, width);
    a.branch_widths.push_back(2 * latent);
    a.trunk_widths = a.branch_widths;
    a.latent = latent;
    a.branch_activation = act;
    a.act_after = {0, 1};
    if (n_layers == 2) a.act_after = {0};
    a.validate();
    return a;
}

ParamLayout ParamLayout::build(const OperatorArchitecture& arch) {
    arch.validate();
    ParamLayout layout;
    auto add_side = [&](const char* prefix, const std::vector<std::size_t>& widths,
                        std::size_t in0) {
        std::size_t in = in0;
        for (std::size_t l = 0; l < widths.size(); ++l) {
            const std::size_t out = widths[l];
            layout.var_tensors.push_back({std::string(prefix) + "." + std::to_string(l) +
                                              ".weight",
                                          layout.n_var, out, in});
            layout.n_var += out * in;
            layout.var_tensors.push_back(
                {std::string(prefix) + "." + std::to_string(l) + ".bias", layout.n_var, out, 1});
            layout.n_var += out;
            in = out;
        }
    };
    add_side("branch", arch.branch_widths, arch.n_sensors);
    add_side("trunk", arch.trunk_widths, 1);

    if (arch.branch_activation == BranchActivation::Vsn) {
        std::vector<std::size_t> sites(arch.act_after);
        std::sort(sites.begin(), sites.end());
        for (std::size_t idx : sites) {
            const std::size_t w = arch.branch_widths[idx];
            layout.vsn_tensors.push_back({"branch." + std::to_string(idx) + ".vsn_thresholds",
                                          layout.n_vsn, w, 1});
            layout.n_vsn += w;
            layout.vsn_tensors.push_back(
                {"branch." + std::to_string(idx) + ".vsn_leak", layout.n_vsn, w, 1});
            layout.n_vsn += w;
        }
    }
    return layout;
}

Eigen::VectorXd init_params(const OperatorArchitecture&, const ParamLayout& layout,
                            std::uint64_t seed) {
    Eigen::VectorXd phi(static_cast<Eigen::Index>(layout.total()));
    Rng rng(derive_seed(seed, 0));
    for (std::size_t i = 0; i < layout.n_var; ++i)
        phi[static_cast<Eigen::Index>(i)] = rng.normal(0.0, 0.05);
    const double delta0 = softplus_inv(0.05);
    phi.segment(static_cast<Eigen::Index>(layout.n_var),
                static_cast<Eigen::Index>(layout.n_var))
        .setConstant(delta0);
    double* vsn = phi.data() + 2 * layout.n_var;
    for (std::size_t site = 0; site * 2 < layout.vsn_tensors.size(); ++site) {
        const SegmentInfo& th = layout.vsn_tensors[2 * site];
        const SegmentInfo& lk = layout.vsn_tensors[2 * site + 1];
        Eigen::Map<Eigen::ArrayXd>(vsn + th.offset, static_cast<Eigen::Index>(th.count()))
            .setConstant(0.1);
        Eigen::Map<Eigen::ArrayXd>(vsn + lk.offset, static_cast<Eigen::Index>(lk.count()))
            .setConstant(std::log(9.0));
    }
    return phi;
}

void forward_batch(const OperatorArchitecture& arch, const ParamLayout& layout,
                   const Eigen::VectorXd& theta, const Eigen::MatrixXd& inputs,
                   const Eigen::VectorXd& times, Eigen::MatrixXd& mu_out,
                   Eigen::MatrixXd& sigma_out, GateMode mode,
                   std::vector<double>* activity_pct) {
    if (inputs.cols() != static_cast<Eigen::Index>(arch.n_sensors))
        throw ShapeError("forward_batch: input width does not match sensor count");
    if (theta.size() != static_cast<Eigen::Index>(layout.n_var + layout.n_vsn))
        throw ShapeError("forward_batch: realized parameter size mismatch");

    const double* th = theta.data();
    const double* vsn = theta.data() + layout.n_var;
    const Eigen::MatrixXd b =
        subnet_forward(arch, layout, branch_side(arch), th, vsn, inputs, mode, nullptr,
                       activity_pct);
    const Eigen::MatrixXd tau = subnet_forward(arch, layout, trunk_side(arch), th, vsn,
                                               Eigen::MatrixXd(times), mode, nullptr, nullptr);

    const auto p = static_cast<Eigen::Index>(arch.latent);
    mu_out.noalias() = b.leftCols(p) * tau.leftCols(p).transpose();
    sigma_out = softplus_xx((b.rightCols(p) * tau.rightCols(p).transpose()).array()).matrix();
    sigma_out.array() += kSigmaEps;
}

std::pair<double, double> forward_one(const OperatorArchitecture& arch, const ParamLayout& layout,
                                      const Eigen::VectorXd& theta, const Eigen::VectorXd& f_vec,
                                      double t, GateMode mode) {
    Eigen::MatrixXd mu, sigma;
    Eigen::VectorXd times(1);
    times[0] = t;
    forward_batch(arch, layout, theta, f_vec.transpose(), times, mu, sigma, mode);
    return {mu(0, 0), sigma(0, 0)};
}

ElboBreakdown elbo_loss(const OperatorArchitecture& arch, const ParamLayout& layout,
                        const Eigen::VectorXd& phi, const Eigen::MatrixXd& inputs,
                        const Eigen::VectorXd& times, const Eigen::MatrixXd& targets,
                        double kl_weight, const std::vector<Eigen::VectorXd>& kappas,
                        GateMode mode, Eigen::VectorXd* grad) {
    if (inputs.rows() == 0 || times.size() == 0) throw ConfigError("elbo_loss: empty batch");
    if (kappas.empty()) throw ConfigError("elbo_loss: need at least one weight draw");
    if (targets.rows() != inputs.rows() || targets.cols() != times.size())
        throw ShapeError("elbo_loss: target shape mismatch");
    if (phi.size() != static_cast<Eigen::Index>(layout.total()))
        throw ShapeError("elbo_loss: parameter vector size mismatch");

    const auto n_var = static_cast<Eigen::Index>(layout.n_var);
    const Eigen::ArrayXd mu_v = phi.segment(0, n_var).array();
    const Eigen::ArrayXd delta_v = phi.segment(n_var, n_var).array();
    const Eigen::ArrayXd sigma_v = softplus(delta_v);
    const Eigen::ArrayXd gate_v = sigmoid_arr(delta_v);
    const double* vsn_src = phi.data() + 2 * layout.n_var;

    const auto p = static_cast<Eigen::Index>(arch.latent);
    const double inv_draws = 1.0 / static_cast<double>(kappas.size());

    double data_term = 0.0;
    Eigen::VectorXd g;
    if (grad) g = Eigen::VectorXd::Zero(phi.size());

    for (const Eigen::VectorXd& kappa : kappas) {
        if (kappa.size() != n_var) throw ShapeError("elbo_loss: noise draw size mismatch");
        Eigen::VectorXd theta(n_var + static_cast<Eigen::Index>(layout.n_vsn));
        theta.head(n_var) = (mu_v + sigma_v * kappa.array()).matrix();
        theta.tail(static_cast<Eigen::Index>(layout.n_vsn)) =
            Eigen::Map<const Eigen::VectorXd>(vsn_src, static_cast<Eigen::Index>(layout.n_vsn));

        const double* th = theta.data();
        const double* vsn = theta.data() + layout.n_var;

        SubnetCache bc, tc;
        const Eigen::MatrixXd b = subnet_forward(arch, layout, branch_side(arch), th, vsn, inputs,
                                                 mode, grad ? &bc : nullptr, nullptr);
        const Eigen::MatrixXd tau =
            subnet_forward(arch, layout, trunk_side(arch), th, vsn, Eigen::MatrixXd(times), mode,
                           grad ? &tc : nullptr, nullptr);

        const Eigen::MatrixXd mu_m = b.leftCols(p) * tau.leftCols(p).transpose();
        const Eigen::ArrayXXd s_raw = (b.rightCols(p) * tau.rightCols(p).transpose()).array();
        const Eigen::ArrayXXd sig = softplus_xx(s_raw) + kSigmaEps;
        const Eigen::ArrayXXd resid = targets.array() - mu_m.array();
        const Eigen::ArrayXXd contrib = sig.log() + resid.square() / (2.0 * sig.square());
        if (!contrib.allFinite()) {
            for (Eigen::Index i = 0; i < contrib.rows(); ++i)
                for (Eigen::Index k = 0; k < contrib.cols(); ++k)
                    if (!std::isfinite(contrib(i, k)))
                        throw Error("elbo_loss: non-finite loss at sample " + std::to_string(i) +
                                    ", time index " + std::to_string(k));
        }
        data_term += contrib.sum() * inv_draws;

        if (grad) {
            const Eigen::ArrayXXd d_mu_m = -resid / sig.square();
            const Eigen::ArrayXXd d_sig = 1.0 / sig - resid.square() / sig.cube();
            const Eigen::ArrayXXd d_s_raw = d_sig * sigmoid_xx(s_raw);

            Eigen::MatrixXd d_b(b.rows(), b.cols());
            Eigen::MatrixXd d_tau(tau.rows(), tau.cols());
            d_b.leftCols(p).noalias() = d_mu_m.matrix() * tau.leftCols(p);
            d_b.rightCols(p).noalias() = d_s_raw.matrix() * tau.rightCols(p);
            d_tau.leftCols(p).noalias() = d_mu_m.matrix().transpose() * b.leftCols(p);
            d_tau.rightCols(p).noalias() = d_s_raw.matrix().transpose() * b.rightCols(p);

            Eigen::VectorXd d_theta = Eigen::VectorXd::Zero(theta.size());
            subnet_backward(arch, layout, branch_side(arch), th, vsn, bc, d_b, d_theta.data(),
                            d_theta.data() + layout.n_var, mode);
            subnet_backward(arch, layout, trunk_side(arch), th, vsn, tc, d_tau, d_theta.data(),
                            d_theta.data() + layout.n_var, mode);

            const Eigen::ArrayXd d_th_var = d_theta.head(n_var).array();
            g.segment(0, n_var).array() += inv_draws * d_th_var;
            g.segment(n_var, n_var).array() += inv_draws * d_th_var * kappa.array() * gate_v;
            g.tail(static_cast<Eigen::Index>(layout.n_vsn)).array() +=
                inv_draws * d_theta.tail(static_cast<Eigen::Index>(layout.n_vsn)).array();
        }
    }

    const double kl = kl_to_standard_normal(mu_v, delta_v);
    if (grad) {
        Eigen::ArrayXd d_kl_mu, d_kl_delta;
        kl_grad(mu_v, delta_v, d_kl_mu, d_kl_delta);
        g.segment(0, n_var).array() += kl_weight * d_kl_mu;
        g.segment(n_var, n_var).array() += kl_weight * d_kl_delta;
        *grad = g;
    }

    ElboBreakdown eb;
    eb.data_term = data_term;
    eb.kl_term = kl;
    eb.total = data_term + kl_weight * kl;
    return eb;
}

TrainResult train(const OperatorDataset& ds, const OperatorArchitecture& arch,
                  const TrainConfig& cfg) {
    ds.validate();
    arch.validate();
    if (cfg.iterations == 0) throw ConfigError("train: iterations must be >= 1");
    if (ds.inputs.n_points() != arch.n_sensors)
        throw ShapeError("train: dataset sensor count does not match architecture");

    const ParamLayout layout = ParamLayout::build(arch);

    Standardization stdz;
    {
        const double rms = std::sqrt(ds.inputs.values.array().square().mean());
        stdz.input_scale = rms > 1e-12 ? rms : 1.0;
        stdz.target_mean = ds.responses.mean();
        const double sd =
            std::sqrt((ds.responses.array() - stdz.target_mean).square().mean());
        stdz.target_scale = sd > 1e-12 ? sd : 1.0;
        stdz.t_lo = ds.grid().t_start();
        stdz.t_hi = ds.grid().t_end();
    }

    const Eigen::MatrixXd x_std = ds.inputs.values / stdz.input_scale;
    const Eigen::MatrixXd u_std =
        (ds.responses.array() - stdz.target_mean).matrix() / stdz.target_scale;
    Eigen::VectorXd t_norm(static_cast<Eigen::Index>(ds.n_times()));
    for (std::size_t k = 0; k < ds.n_times(); ++k)
        t_norm[static_cast<Eigen::Index>(k)] =
            (ds.grid()[k] - stdz.t_lo) / (stdz.t_hi - stdz.t_lo);

    const double kl_w =
        cfg.kl_weight >= 0.0 ? cfg.kl_weight : 1.0 / static_cast<double>(ds.n_triplets());

    Eigen::VectorXd phi = init_params(arch, layout, cfg.seed);
    Adam opt(layout.total(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

    TrainResult result;
    result.best_loss = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_phi = phi;
    Eigen::VectorXd grad;
    std::vector<Eigen::VectorXd> kappas(cfg.n_elbo_samples);

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Rng noise(derive_seed(cfg.seed, 1 + it));
        for (auto& kappa : kappas) {
            kappa.resize(static_cast<Eigen::Index>(layout.n_var));
            for (Eigen::Index j = 0; j < kappa.size(); ++j) kappa[j] = noise.normal();
        }

        ElboBreakdown eb;
        try {
            eb = elbo_loss(arch, layout, phi, x_std, t_norm, u_std, kl_w, kappas, GateMode::Hard,
                           &grad);
        } catch (const Error&) {
            result.aborted_non_finite = true;
            break;
        }
        if (!std::isfinite(eb.total)) {
            result.aborted_non_finite = true;
            break;
        }
        if (eb.total < result.best_loss) {
            result.best_loss = eb.total;
            result.best_iteration = it;
            best_phi = phi;
        }
        result.log.push_back({it, eb.total, result.best_loss});
        try {
            opt.step(phi, grad);
        } catch (const Error&) {
            result.aborted_non_finite = true;
            break;
        }
    }

    result.model.arch = arch;
    result.model.layout = layout;
    result.model.stdz = stdz;
    result.model.phi = (cfg.keep_best || result.aborted_non_finite) ? best_phi : phi;
    return result;
}

PredictiveBand predict_band(const ModelBundle& model, const Eigen::MatrixXd& inputs_raw,
                            const std::vector<double>& times, std::size_t n1, std::size_t n2,
                            std::uint64_t seed) {
    if (n1 == 0 || n2 == 0) throw ConfigError("predict_band: n1 and n2 must be >= 1");
    if (times.empty()) throw ConfigError("predict_band: need at least one time");

    const Eigen::MatrixXd x_std = inputs_raw / model.stdz.input_scale;
    Eigen::VectorXd t_norm(static_cast<Eigen::Index>(times.size()));
    const double span = model.stdz.t_hi - model.stdz.t_lo;
    for (std::size_t k = 0; k < times.size(); ++k)
        t_norm[static_cast<Eigen::Index>(k)] = (times[k] - model.stdz.t_lo) / span;

    const auto n_var = static_cast<Eigen::Index>(model.layout.n_var);
    Eigen::ArrayXXd acc1 = Eigen::ArrayXXd::Zero(inputs_raw.rows(),
                                                 static_cast<Eigen::Index>(times.size()));
    Eigen::ArrayXXd acc2 = acc1;

    Eigen::MatrixXd mu_m, sig_m;
    for (std::size_t s = 0; s < n1; ++s) {
        Rng rng(derive_seed(seed, s));
        Eigen::VectorXd kappa(n_var);
        for (Eigen::Index j = 0; j < n_var; ++j) kappa[j] = rng.normal();
        double eps_sum = 0.0, eps_sq = 0.0;
        for (std::size_t r = 0; r < n2; ++r) {
            const double e = rng.normal();
            eps_sum += e;
            eps_sq += e * e;
        }

        Eigen::VectorXd theta(model.phi.size() - n_var);
        theta.head(n_var) = realize_theta(model, kappa);
        theta.tail(theta.size() - n_var) = model.vsn();
        forward_batch(model.arch, model.layout, theta, x_std, t_norm, mu_m, sig_m);

        // n2 output draws mu + eps_r * sigma expand into moment updates.
        acc1 += static_cast<double>(n2) * mu_m.array() + eps_sum * sig_m.array();
        acc2 += static_cast<double>(n2) * mu_m.array().square() +
                2.0 * eps_sum * mu_m.array() * sig_m.array() +
                eps_sq * sig_m.array().square();
    }

    const double inv_n = 1.0 / static_cast<double>(n1 * n2);
    const Eigen::ArrayXXd mean = acc1 * inv_n;
    const Eigen::ArrayXXd var = (acc2 * inv_n - mean.square()).max(0.0);

    PredictiveBand band;
    band.n1 = n1;
    band.n2 = n2;
    band.mu_hat = (mean * model.stdz.target_scale + model.stdz.target_mean).matrix();
    band.sigma_hat = (var.sqrt() * model.stdz.target_scale).matrix();
    return band;
}

std::pair<double, double> predict_point(const ModelBundle& model, const Eigen::VectorXd& f_raw,
                                        double t, std::size_t n1, std::size_t n2,
                                        std::uint64_t seed) {
    const PredictiveBand band =
        predict_band(model, f_raw.transpose(), std::vector<double>{t}, n1, n2, seed);
    return {band.mu_hat(0, 0), band.sigma_hat(0, 0)};
}

std::vector<double> branch_spiking_activity(const ModelBundle& model,
                                            const Eigen::MatrixXd& inputs_raw) {
    const Eigen::MatrixXd x_std = inputs_raw / model.stdz.input_scale;
    Eigen::VectorXd theta(model.phi.size() - static_cast<Eigen::Index>(model.layout.n_var));
    theta.head(static_cast<Eigen::Index>(model.layout.n_var)) = model.mu();
    theta.tail(theta.size() - static_cast<Eigen::Index>(model.layout.n_var)) = model.vsn();

    Eigen::VectorXd t0(1);
    t0[0] = 0.0;
    Eigen::MatrixXd mu_m, sig_m;
    std::vector<double> activity;
    forward_batch(model.arch, model.layout, theta, x_std, t0, mu_m, sig_m, GateMode::Hard,
                  &activity);
    return activity;
}

}  // namespace spikeop
