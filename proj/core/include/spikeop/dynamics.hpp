#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "spikeop/excitation.hpp"
#include "spikeop/grid.hpp"

namespace spikeop {

// How the scalar excitation enters the equations of motion. Direct treats
// f as a force (N) applied at DOF 1; BaseAcceleration applies -m_i * f to
// every DOF (f in m/s^2).
enum class ForcingConvention { Direct, BaseAcceleration };

// Hysteretic SDOF: m x'' + c x' + k x + (1 - k_r) Q_y z = f, with the
// auxiliary law z' = (alpha x' - gamma z |x'| |z|^(eta-1) - beta_bw x' |z|^eta) / D_y.
struct BoucWenSdofParams {
    double m = 6800.0;    // kg
    double c = 3750.0;    // Ns/m
    double k = 2.32e5;    // N/m
    double q_y = 0.05 * 6800.0 * 9.81;  // yield force, N
    double k_r = 1.0 / 6.0;
    double alpha = 1.0;
    double beta_bw = 0.5;
    double gamma = 0.5;
    double eta = 2.0;
    double d_y = 0.0013;  // m
    double x0 = 0.005;
    double v0 = 0.001;
    double z0 = 0.001;
    ForcingConvention forcing = ForcingConvention::Direct;

    void validate() const;
};

// Five-story shear chain with a cubic (Duffing) spring at the first DOF.
struct Duffing5DofParams {
    std::array<double, 5> m = {10.0, 10.0, 9.0, 9.0, 7.5};
    std::array<double, 5> k = {10000.0, 10000.0, 9000.0, 9000.0, 7500.0};
    std::array<double, 5> c = {100.0, 100.0, 90.0, 90.0, 75.0};
    double alpha_do = 100.0;  // cubic stiffness, N/m^3
    double x0 = 0.01;         // applied at every DOF
    double v0 = 0.05;
    ForcingConvention forcing = ForcingConvention::BaseAcceleration;

    void validate() const;
};

// N-story shear chain with the Bouc-Wen element attached at the first DOF.
// Story properties default to the SDOF benchmark values on every story.
struct ShearChainParams {
    std::size_t n_dof = 76;
    std::vector<double> m, k, c;  // per story; filled uniformly when empty
    double q_y = 0.05 * 6800.0 * 9.81;
    double k_r = 1.0 / 6.0;
    double alpha = 1.0;
    double beta_bw = 0.5;
    double gamma = 0.5;
    double eta = 2.0;
    double d_y = 0.0013;
    double x0 = 0.005;  // applied at every DOF
    double v0 = 0.001;
    double z0 = 0.001;
    ForcingConvention forcing = ForcingConvention::BaseAcceleration;

    void fill_default_stories();
    void validate() const;
};

// |z|^e with the removable singularity at z = 0 defined as 0.
inline double pow_abs0(double z, double e) {
    if (z == 0.0) return 0.0;
    return std::pow(std::abs(z), e);
}

void boucwen_sdof_rhs(double t, const Eigen::VectorXd& state, double f,
                      const BoucWenSdofParams& p, Eigen::VectorXd& ds);
void duffing_5dof_rhs(double t, const Eigen::VectorXd& state, double f,
                      const Duffing5DofParams& p, Eigen::VectorXd& ds);
void shear_chain_boucwen_rhs(double t, const Eigen::VectorXd& state, double f,
                             const ShearChainParams& p, Eigen::VectorXd& ds);

// Value-type wrapper so the pipeline can treat the three systems uniformly.
class SystemModel {
public:
    explicit SystemModel(BoucWenSdofParams p);
    explicit SystemModel(Duffing5DofParams p);
    explicit SystemModel(ShearChainParams p);

    std::size_t n_states() const;
    std::size_t n_dof() const;
    Eigen::VectorXd initial_state() const;
    void deriv(double t, const Eigen::VectorXd& state, double f, Eigen::VectorXd& ds) const;
    std::string kind() const;

    const std::variant<BoucWenSdofParams, Duffing5DofParams, ShearChainParams>& params() const {
        return params_;
    }

private:
    std::variant<BoucWenSdofParams, Duffing5DofParams, ShearChainParams> params_;
};

// States recorded exactly at the record-grid times; columns are ordered
// displacements first (n_dof of them), then the remaining state variables.
struct Trajectory {
    TimeGrid grid;
    Eigen::MatrixXd states;  // n_times x n_states
    std::size_t n_dof = 0;

    auto dof_displacements() const { return states.leftCols(static_cast<Eigen::Index>(n_dof)); }
};

using RhsFn =
    std::function<void(double t, const Eigen::VectorXd& state, double f, Eigen::VectorXd& ds)>;

// Classical fixed-step RK4. The forcing series is linearly interpolated
// between its grid points (and held at the boundary values outside them);
// dt must divide the record-grid spacing. A non-finite state aborts with
// DivergenceError carrying the time of blow-up.
Trajectory rk4_integrate(const RhsFn& rhs, const Eigen::VectorXd& initial_state,
                         const Eigen::VectorXd& forcing, const TimeGrid& forcing_grid, double dt,
                         const TimeGrid& record_grid, std::size_t n_dof);

Trajectory simulate(const SystemModel& sys, const Eigen::VectorXd& forcing,
                    const TimeGrid& forcing_grid, double dt, const TimeGrid& record_grid);

// Paired (input function, response trajectory) collection for operator
// training. Conceptually N_s * N_t triplets (f_i, t_k, u_ik) in row-major
// (sample, time) order; stored as two matrices sharing the grid.
struct OperatorDataset {
    FunctionSampleSet inputs;
    Eigen::MatrixXd responses;  // n_samples x n_times
    std::size_t response_dof = 0;
    std::string role;  // "train", "cal" or "test"

    const TimeGrid& grid() const { return inputs.grid; }
    std::size_t n_samples() const { return inputs.n_samples(); }
    std::size_t n_times() const { return static_cast<std::size_t>(responses.cols()); }
    std::size_t n_triplets() const { return n_samples() * n_times(); }
    void validate() const;
};

// Simulates every excitation row and extracts the displacement at
// response_dof on the excitation's own grid. Samples are independent and
// may be integrated on up to n_threads workers; results are merged in
// sample order regardless of thread count.
OperatorDataset generate_dataset(const SystemModel& sys, const FunctionSampleSet& excitation,
                                 std::size_t response_dof, double dt, std::size_t n_threads = 1);

// One dataset per requested dof from a single simulation pass; the returned
// datasets share the excitation inputs.
std::vector<OperatorDataset> generate_datasets(const SystemModel& sys,
                                               const FunctionSampleSet& excitation,
                                               const std::vector<std::size_t>& response_dofs,
                                               double dt, std::size_t n_threads = 1);

}  // namespace spikeop
