#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "spikeop/dynamics.hpp"
#include "spikeop/neural.hpp"

namespace spikeop {

enum class BranchActivation { Relu, Vsn };

// Branch/trunk pair combined by inner products. Both subnets end in a
// width-2p layer; the first p features of each feed the mean head, the
// second p the std head. Activations sit after the dense layers listed in
// act_after (never after the final layer). Only the branch may spike; the
// trunk always uses ReLU.
struct OperatorArchitecture {
    std::size_t n_sensors = 101;
    std::vector<std::size_t> branch_widths;
    std::vector<std::size_t> trunk_widths;
    std::vector<std::size_t> act_after = {0, 1};
    std::size_t latent = 50;
    BranchActivation branch_activation = BranchActivation::Vsn;
    std::size_t t_s = 2;
    double surrogate_slope = 25.0;
    PhiKind phi = PhiKind::Relu;

    void validate() const;

    // n_layers dense layers of the given width, head width 2*latent.
    static OperatorArchitecture standard(std::size_t n_sensors, std::size_t width,
                                         std::size_t n_layers, std::size_t latent,
                                         BranchActivation act);
};

struct SegmentInfo {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t count() const { return rows * cols; }
};

// Flat parameter vector layout: [mu (n_var) | delta (n_var) | vsn (n_vsn)].
// var_tensors lists weight/bias segments relative to the start of the mu
// block (the delta block mirrors it); vsn_tensors lists threshold/leak
// segments relative to the start of the vsn block.
struct ParamLayout {
    std::vector<SegmentInfo> var_tensors;
    std::vector<SegmentInfo> vsn_tensors;
    std::size_t n_var = 0;
    std::size_t n_vsn = 0;

    std::size_t total() const { return 2 * n_var + n_vsn; }
    static ParamLayout build(const OperatorArchitecture& arch);
};

// Affine transforms applied outside the network proper, recorded in the
// checkpoint so a loaded model reproduces predictions exactly. Branch
// inputs are divided by input_scale, targets are z-scored, and the trunk
// time is mapped to [0, 1] over [t_lo, t_hi].
struct Standardization {
    double input_scale = 1.0;
    double target_mean = 0.0;
    double target_scale = 1.0;
    double t_lo = 0.0;
    double t_hi = 1.0;
};

struct ModelBundle {
    OperatorArchitecture arch;
    ParamLayout layout;
    Eigen::VectorXd phi;
    Standardization stdz;

    Eigen::Ref<const Eigen::VectorXd> mu() const {
        return phi.segment(0, static_cast<Eigen::Index>(layout.n_var));
    }
    Eigen::Ref<const Eigen::VectorXd> delta() const {
        return phi.segment(static_cast<Eigen::Index>(layout.n_var),
                           static_cast<Eigen::Index>(layout.n_var));
    }
    Eigen::Ref<const Eigen::VectorXd> vsn() const {
        return phi.tail(static_cast<Eigen::Index>(layout.n_vsn));
    }
};

// Freshly initialized flat parameters: weight/bias means drawn from
// N(0, 0.05^2), deltas set so softplus(delta) = 0.05, thresholds 0.1,
// leak parameters set so beta = 0.9.
Eigen::VectorXd init_params(const OperatorArchitecture& arch, const ParamLayout& layout,
                            std::uint64_t seed);

// Literal network evaluation with realized weights theta (length n_var):
// mu_u = b[:p] . tau[:p], sigma_u = softplus(b[p:] . tau[p:]) + 1e-6.
// No input/target transforms are applied here.
std::pair<double, double> forward_one(const OperatorArchitecture& arch, const ParamLayout& layout,
                                      const Eigen::VectorXd& theta, const Eigen::VectorXd& f_vec,
                                      double t, GateMode mode = GateMode::Hard);

// Batched version over n inputs and m times; outputs are n x m. When
// activity_pct is given, per-VSN-site spiking percentages are appended.
void forward_batch(const OperatorArchitecture& arch, const ParamLayout& layout,
                   const Eigen::VectorXd& theta, const Eigen::MatrixXd& inputs,
                   const Eigen::VectorXd& times, Eigen::MatrixXd& mu_out,
                   Eigen::MatrixXd& sigma_out, GateMode mode = GateMode::Hard,
                   std::vector<double>* activity_pct = nullptr);

struct ElboBreakdown {
    double data_term = 0.0;
    double kl_term = 0.0;
    double total = 0.0;
};

// Negative ELBO over the full batch of (input row i, time k) pairs:
//   sum_ik [ log sigma_ik + (u_ik - mu_ik)^2 / (2 sigma_ik^2) ]
// averaged over the provided weight draws, plus kl_weight * KL(q || N(0,I)).
// Inputs/targets/times are expected in the network's own (standardized)
// coordinates. When grad is non-null the full parameter gradient (layout
// order) is written into it.
ElboBreakdown elbo_loss(const OperatorArchitecture& arch, const ParamLayout& layout,
                        const Eigen::VectorXd& phi, const Eigen::MatrixXd& inputs,
                        const Eigen::VectorXd& times, const Eigen::MatrixXd& targets,
                        double kl_weight, const std::vector<Eigen::VectorXd>& kappas,
                        GateMode mode = GateMode::Hard, Eigen::VectorXd* grad = nullptr);

struct TrainConfig {
    double lr = 1e-3;
    std::size_t iterations = 5000;
    double kl_weight = -1.0;  // negative selects 1 / n_triplets
    std::size_t n_elbo_samples = 1;
    std::uint64_t seed = 0;
    bool keep_best = true;
};

struct TrainLogRow {
    std::size_t iteration;
    double loss;
    double best;
};

struct TrainResult {
    ModelBundle model;
    std::vector<TrainLogRow> log;
    double best_loss = 0.0;
    std::size_t best_iteration = 0;
    bool aborted_non_finite = false;
};

// Full-batch Adam on the negative ELBO. Deterministic given the seed.
// A non-finite loss or gradient stops training early and the best finite
// snapshot is returned (aborted_non_finite is set).
TrainResult train(const OperatorDataset& ds, const OperatorArchitecture& arch,
                  const TrainConfig& cfg);

struct PredictiveBand {
    Eigen::MatrixXd mu_hat;     // n_inputs x n_times
    Eigen::MatrixXd sigma_hat;  // biased empirical std over n1*n2 draws
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

// Two-level Monte Carlo: n1 weight draws theta_s ~ q, and per weight draw
// n2 output draws u ~ N(mu_s, sigma_s^2). The draw schedule depends only
// on (seed, s), never on the inputs or times, so a band over a grid agrees
// bitwise with per-point calls at the same seed. Outputs are in raw
// (un-standardized) units.
PredictiveBand predict_band(const ModelBundle& model, const Eigen::MatrixXd& inputs_raw,
                            const std::vector<double>& times, std::size_t n1, std::size_t n2,
                            std::uint64_t seed);

// Convenience single-point wrapper (equals the 1x1 band entry).
std::pair<double, double> predict_point(const ModelBundle& model, const Eigen::VectorXd& f_raw,
                                        double t, std::size_t n1, std::size_t n2,
                                        std::uint64_t seed);

// Spiking activity (%) per branch VSN site, evaluated at the variational
// means over the given inputs.
std::vector<double> branch_spiking_activity(const ModelBundle& model,
                                            const Eigen::MatrixXd& inputs_raw);

}  // namespace spikeop
