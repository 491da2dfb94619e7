#include "spikeop/dynamics.hpp"

#include <cmath>
#include <thread>

#include "spikeop/errors.hpp"

namespace spikeop {

void BoucWenSdofParams::validate() const {
    if (m <= 0 || c <= 0 || k <= 0 || d_y <= 0)
        throw ConfigError("BoucWenSdofParams: m, c, k, D_y must be positive");
    if (eta < 1.0) throw ConfigError("BoucWenSdofParams: eta must be >= 1");
}

void Duffing5DofParams::validate() const {
    for (std::size_t i = 0; i < 5; ++i)
        if (m[i] <= 0 || k[i] <= 0 || c[i] <= 0)
            throw ConfigError("Duffing5DofParams: masses, stiffnesses, dampings must be positive");
}

void ShearChainParams::fill_default_stories() {
    if (m.empty()) m.assign(n_dof, 6800.0);
    if (k.empty()) k.assign(n_dof, 2.32e5);
    if (c.empty()) c.assign(n_dof, 3750.0);
}

void ShearChainParams::validate() const {
    if (n_dof < 1) throw ConfigError("ShearChainParams: n_dof must be >= 1");
    if (m.size() != n_dof || k.size() != n_dof || c.size() != n_dof)
        throw ConfigError("ShearChainParams: story arrays must have n_dof entries");
    for (std::size_t i = 0; i < n_dof; ++i)
        if (m[i] <= 0 || k[i] <= 0 || c[i] <= 0)
            throw ConfigError("ShearChainParams: story constants must be positive");
    if (d_y <= 0) throw ConfigError("ShearChainParams: D_y must be positive");
    if (eta < 1.0) throw ConfigError("ShearChainParams: eta must be >= 1");
}

void boucwen_sdof_rhs(double t, const Eigen::VectorXd& state, double f,
                      const BoucWenSdofParams& p, Eigen::VectorXd& ds) {
    (void)t;
    const double x = state[0], v = state[1], z = state[2];
    const double f_eff = (p.forcing == ForcingConvention::Direct) ? f : -p.m * f;
    ds[0] = v;
    ds[1] = (f_eff - p.c * v - p.k * x - (1.0 - p.k_r) * p.q_y * z) / p.m;
    ds[2] = (p.alpha * v - p.gamma * z * std::abs(v) * pow_abs0(z, p.eta - 1.0) -
             p.beta_bw * v * pow_abs0(z, p.eta)) /
            p.d_y;
}

void duffing_5dof_rhs(double t, const Eigen::VectorXd& state, double f,
                      const Duffing5DofParams& p, Eigen::VectorXd& ds) {
    (void)t;
    constexpr std::size_t n = 5;
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = state[static_cast<Eigen::Index>(i)];
        const double vi = state[static_cast<Eigen::Index>(n + i)];
        const double xm = (i == 0) ? 0.0 : state[static_cast<Eigen::Index>(i - 1)];
        const double vm = (i == 0) ? 0.0 : state[static_cast<Eigen::Index>(n + i - 1)];
        double force = -p.k[i] * (xi - xm) - p.c[i] * (vi - vm);
        if (i + 1 < n) {
            const double xp = state[static_cast<Eigen::Index>(i + 1)];
            const double vp = state[static_cast<Eigen::Index>(n + i + 1)];
            force += p.k[i + 1] * (xp - xi) + p.c[i + 1] * (vp - vi);
        }
        if (i == 0) force -= p.alpha_do * xi * xi * xi;
        if (p.forcing == ForcingConvention::BaseAcceleration) {
            force += -p.m[i] * f;
        } else if (i == 0) {
            force += f;
        }
        ds[static_cast<Eigen::Index>(i)] = vi;
        ds[static_cast<Eigen::Index>(n + i)] = force / p.m[i];
    }
}

void shear_chain_boucwen_rhs(double t, const Eigen::VectorXd& state, double f,
                             const ShearChainParams& p, Eigen::VectorXd& ds) {
    (void)t;
    const std::size_t n = p.n_dof;
    const double z = state[static_cast<Eigen::Index>(2 * n)];
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = state[static_cast<Eigen::Index>(i)];
        const double vi = state[static_cast<Eigen::Index>(n + i)];
        const double xm = (i == 0) ? 0.0 : state[static_cast<Eigen::Index>(i - 1)];
        const double vm = (i == 0) ? 0.0 : state[static_cast<Eigen::Index>(n + i - 1)];
        double force = -p.k[i] * (xi - xm) - p.c[i] * (vi - vm);
        if (i + 1 < n) {
            const double xp = state[static_cast<Eigen::Index>(i + 1)];
            const double vp = state[static_cast<Eigen::Index>(n + i + 1)];
            force += p.k[i + 1] * (xp - xi) + p.c[i + 1] * (vp - vi);
        }
        if (i == 0) force -= (1.0 - p.k_r) * p.q_y * z;
        if (p.forcing == ForcingConvention::BaseAcceleration) {
            force += -p.m[i] * f;
        } else if (i == 0) {
            force += f;
        }
        ds[static_cast<Eigen::Index>(i)] = vi;
        ds[static_cast<Eigen::Index>(n + i)] = force / p.m[i];
    }
    const double v1 = state[static_cast<Eigen::Index>(n)];
    ds[static_cast<Eigen::Index>(2 * n)] =
        (p.alpha * v1 - p.gamma * z * std::abs(v1) * pow_abs0(z, p.eta - 1.0) -
         p.beta_bw * v1 * pow_abs0(z, p.eta)) /
        p.d_y;
}

SystemModel::SystemModel(BoucWenSdofParams p) : params_(std::move(p)) {
    std::get<BoucWenSdofParams>(params_).validate();
}
SystemModel::SystemModel(Duffing5DofParams p) : params_(std::move(p)) {
    std::get<Duffing5DofParams>(params_).validate();
}
SystemModel::SystemModel(ShearChainParams p) : params_(std::move(p)) {
    auto& sp = std::get<ShearChainParams>(params_);
    sp.fill_default_stories();
    sp.validate();
}

std::size_t SystemModel::n_states() const {
    return std::visit(
        [](const auto& p) -> std::size_t {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BoucWenSdofParams>)
                return 3;
            else if constexpr (std::is_same_v<T, Duffing5DofParams>)
                return 10;
            else
                return 2 * p.n_dof + 1;
        },
        params_);
}

std::size_t SystemModel::n_dof() const {
    return std::visit(
        [](const auto& p) -> std::size_t {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BoucWenSdofParams>)
                return 1;
            else if constexpr (std::is_same_v<T, Duffing5DofParams>)
                return 5;
            else
                return p.n_dof;
        },
        params_);
}

Eigen::VectorXd SystemModel::initial_state() const {
    Eigen::VectorXd s(static_cast<Eigen::Index>(n_states()));
    std::visit(
        [&s](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BoucWenSdofParams>) {
                s << p.x0, p.v0, p.z0;
            } else if constexpr (std::is_same_v<T, Duffing5DofParams>) {
                s.head(5).setConstant(p.x0);
                s.tail(5).setConstant(p.v0);
            } else {
                const Eigen::Index n = static_cast<Eigen::Index>(p.n_dof);
                s.head(n).setConstant(p.x0);
                s.segment(n, n).setConstant(p.v0);
                s[2 * n] = p.z0;
            }
        },
        params_);
    return s;
}

void SystemModel::deriv(double t, const Eigen::VectorXd& state, double f,
                        Eigen::VectorXd& ds) const {
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BoucWenSdofParams>)
                boucwen_sdof_rhs(t, state, f, p, ds);
            else if constexpr (std::is_same_v<T, Duffing5DofParams>)
                duffing_5dof_rhs(t, state, f, p, ds);
            else
                shear_chain_boucwen_rhs(t, state, f, p, ds);
        },
        params_);
}

std::string SystemModel::kind() const {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BoucWenSdofParams>)
                return "boucwen_sdof";
            else if constexpr (std::is_same_v<T, Duffing5DofParams>)
                return "duffing_5dof";
            else
                return "shear_chain_boucwen";
        },
        params_);
}

namespace {

// Linear interpolation on a uniform grid, clamped at the ends.
double forcing_at(const Eigen::VectorXd& f, const TimeGrid& g, double t) {
    if (t <= g.t_start()) return f[0];
    if (t >= g.t_end()) return f[f.size() - 1];
    const double u = (t - g.t_start()) / g.dt();
    const auto j = static_cast<Eigen::Index>(u);
    if (j + 1 >= f.size()) return f[f.size() - 1];
    const double w = u - static_cast<double>(j);
    return f[j] * (1.0 - w) + f[j + 1] * w;
}

}  // namespace

Trajectory rk4_integrate(const RhsFn& rhs, const Eigen::VectorXd& initial_state,
                         const Eigen::VectorXd& forcing, const TimeGrid& forcing_grid, double dt,
                         const TimeGrid& record_grid, std::size_t n_dof) {
    if (dt <= 0.0) throw ConfigError("rk4_integrate: dt must be positive");
    if (forcing.size() != static_cast<Eigen::Index>(forcing_grid.size()))
        throw ShapeError("rk4_integrate: forcing length does not match its grid");
    if (forcing_grid.t_start() > record_grid.t_start() + 1e-12 ||
        forcing_grid.t_end() < record_grid.t_end() - 1e-12)
        throw ConfigError("rk4_integrate: forcing does not cover the record window");

    const double span = record_grid.dt();
    const double ratio = span / dt;
    const auto n_sub = static_cast<std::size_t>(std::llround(ratio));
    if (n_sub == 0 || std::abs(ratio - static_cast<double>(n_sub)) > 1e-9)
        throw ConfigError("rk4_integrate: dt must divide the record-grid spacing");

    const std::size_t n_rec = record_grid.size();
    Trajectory traj;
    traj.grid = record_grid;
    traj.n_dof = n_dof;
    traj.states.resize(static_cast<Eigen::Index>(n_rec), initial_state.size());
    traj.states.row(0) = initial_state.transpose();

    Eigen::VectorXd s = initial_state;
    Eigen::VectorXd k1(s.size()), k2(s.size()), k3(s.size()), k4(s.size()), tmp(s.size());

    for (std::size_t rec = 1; rec < n_rec; ++rec) {
        const double t_base = record_grid[rec - 1];
        for (std::size_t sub = 0; sub < n_sub; ++sub) {
            const double t = t_base + dt * static_cast<double>(sub);
            const double f0 = forcing_at(forcing, forcing_grid, t);
            const double fh = forcing_at(forcing, forcing_grid, t + 0.5 * dt);
            const double f1 = forcing_at(forcing, forcing_grid, t + dt);

            rhs(t, s, f0, k1);
            tmp = s + 0.5 * dt * k1;
            rhs(t + 0.5 * dt, tmp, fh, k2);
            tmp = s + 0.5 * dt * k2;
            rhs(t + 0.5 * dt, tmp, fh, k3);
            tmp = s + dt * k3;
            rhs(t + dt, tmp, f1, k4);
            s += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

            if (!s.allFinite())
                throw DivergenceError("rk4_integrate: non-finite state", t + dt);
        }
        traj.states.row(static_cast<Eigen::Index>(rec)) = s.transpose();
    }
    return traj;
}

Trajectory simulate(const SystemModel& sys, const Eigen::VectorXd& forcing,
                    const TimeGrid& forcing_grid, double dt, const TimeGrid& record_grid) {
    auto rhs = [&sys](double t, const Eigen::VectorXd& state, double f, Eigen::VectorXd& ds) {
        sys.deriv(t, state, f, ds);
    };
    return rk4_integrate(rhs, sys.initial_state(), forcing, forcing_grid, dt, record_grid,
                         sys.n_dof());
}

void OperatorDataset::validate() const {
    if (responses.rows() != static_cast<Eigen::Index>(inputs.n_samples()) ||
        responses.cols() != static_cast<Eigen::Index>(inputs.n_points()))
        throw ShapeError("OperatorDataset: responses shape does not match inputs");
    if (!responses.allFinite()) throw Error("OperatorDataset: non-finite response values");
}

std::vector<OperatorDataset> generate_datasets(const SystemModel& sys,
                                               const FunctionSampleSet& excitation,
                                               const std::vector<std::size_t>& response_dofs,
                                               double dt, std::size_t n_threads) {
    if (response_dofs.empty()) throw ConfigError("generate_datasets: no response dofs requested");
    for (std::size_t d : response_dofs)
        if (d >= sys.n_dof()) throw ConfigError("generate_datasets: response_dof out of range");
    const std::size_t n = excitation.n_samples();

    std::vector<OperatorDataset> out(response_dofs.size());
    for (std::size_t j = 0; j < response_dofs.size(); ++j) {
        out[j].inputs = excitation;
        out[j].response_dof = response_dofs[j];
        out[j].responses.resize(static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(excitation.n_points()));
    }

    std::vector<std::string> failures(n);
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                const Trajectory traj =
                    simulate(sys, excitation.values.row(static_cast<Eigen::Index>(i)).transpose(),
                             excitation.grid, dt, excitation.grid);
                for (std::size_t j = 0; j < response_dofs.size(); ++j)
                    out[j].responses.row(static_cast<Eigen::Index>(i)) =
                        traj.states.col(static_cast<Eigen::Index>(response_dofs[j])).transpose();
            } catch (const DivergenceError& e) {
                failures[i] = "sample " + std::to_string(i) + " diverged at t=" +
                              std::to_string(e.time);
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(n_threads, n));
    if (workers == 1) {
        worker(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(n, b + chunk);
            if (b >= e) break;
            pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!failures[i].empty()) throw Error("generate_dataset: " + failures[i]);
    return out;
}

OperatorDataset generate_dataset(const SystemModel& sys, const FunctionSampleSet& excitation,
                                 std::size_t response_dof, double dt, std::size_t n_threads) {
    return std::move(generate_datasets(sys, excitation, {response_dof}, dt, n_threads).front());
}

}  // namespace spikeop
