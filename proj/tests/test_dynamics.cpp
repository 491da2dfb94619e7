#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "spikeop/dynamics.hpp"
#include "spikeop/errors.hpp"
#include "spikeop/excitation.hpp"

using namespace spikeop;

namespace {

// Undamped unit oscillator x'' = -x, x(0) = 1: exact solution cos(t).
const RhsFn kCosineRhs = [](double, const Eigen::VectorXd& s, double, Eigen::VectorXd& ds) {
    ds[0] = s[1];
    ds[1] = -s[0];
};

double cosine_error(double dt, const TimeGrid& record) {
    Eigen::VectorXd x0(2);
    x0 << 1.0, 0.0;
    const Eigen::VectorXd forcing = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(record.size()));
    const Trajectory traj = rk4_integrate(kCosineRhs, x0, forcing, record, dt, record, 1);
    double err = 0.0;
    for (std::size_t k = 0; k < record.size(); ++k)
        err = std::max(err, std::abs(traj.states(static_cast<Eigen::Index>(k), 0) -
                                     std::cos(record[k])));
    return err;
}

}  // namespace

TEST_CASE("rk4 reproduces a cosine to solver accuracy") {
    const TimeGrid record = TimeGrid::uniform(0.0, 6.4, 65);
    CHECK(cosine_error(1e-3, record) < 1e-6);
}

TEST_CASE("rk4 converges at fourth order") {
    const TimeGrid record = TimeGrid::uniform(0.0, 3.2, 33);
    const double e1 = cosine_error(0.1, record);
    const double e2 = cosine_error(0.05, record);
    const double e3 = cosine_error(0.025, record);
    const double p12 = std::log2(e1 / e2);
    const double p23 = std::log2(e2 / e3);
    CHECK(p12 > 3.7);
    CHECK(p12 < 4.3);
    CHECK(p23 > 3.7);
    CHECK(p23 < 4.3);
}

TEST_CASE("rk4 records the initial state and the grid verbatim") {
    const TimeGrid record = TimeGrid::uniform(0.0, 1.0, 11);
    Eigen::VectorXd x0(2);
    x0 << 0.3, -0.2;
    const Eigen::VectorXd forcing = Eigen::VectorXd::Zero(11);
    const Trajectory traj = rk4_integrate(kCosineRhs, x0, forcing, record, 0.01, record, 1);
    CHECK(traj.states(0, 0) == 0.3);
    CHECK(traj.states(0, 1) == -0.2);
    CHECK(traj.grid.times() == record.times());
    CHECK(traj.states.rows() == 11);
}

TEST_CASE("rk4 rejects a step that does not divide the record spacing") {
    const TimeGrid record = TimeGrid::uniform(0.0, 1.0, 11);
    Eigen::VectorXd x0(2);
    x0 << 1.0, 0.0;
    const Eigen::VectorXd forcing = Eigen::VectorXd::Zero(11);
    CHECK_THROWS_AS(rk4_integrate(kCosineRhs, x0, forcing, record, 0.03, record, 1), ConfigError);
}

TEST_CASE("hysteretic sdof derivative matches hand arithmetic") {
    BoucWenSdofParams p;
    Eigen::VectorXd s(3), ds(3);
    s << 0.005, 0.001, 0.001;
    boucwen_sdof_rhs(0.0, s, 0.0, p, ds);

    CHECK(ds[0] == 0.001);
    // (0 - 3750*0.001 - 2.32e5*0.005 - (5/6)*3335.4*0.001) / 6800
    const double accel = (-3.75 - 1160.0 - (5.0 / 6.0) * 3.3354) / 6800.0;
    CHECK(ds[1] == doctest::Approx(accel).epsilon(1e-14));
    // (0.001 - 0.5*0.001*0.001*0.001 - 0.5*0.001*1e-6) / 0.0013
    CHECK(ds[2] == doctest::Approx((0.001 - 1e-9) / 0.0013).epsilon(1e-14));
}

TEST_CASE("hysteresis law reduces to v (1 - z^2) / D_y for positive v and z") {
    BoucWenSdofParams p;
    Eigen::VectorXd s(3), ds(3);
    s << 0.0, 0.2, 0.5;
    boucwen_sdof_rhs(0.0, s, 0.0, p, ds);
    CHECK(ds[2] == doctest::Approx(0.2 * (1.0 - 0.25) / 0.0013).epsilon(1e-14));
}

TEST_CASE("|z|^e treats the origin as zero") {
    CHECK(pow_abs0(0.0, 1.0) == 0.0);
    CHECK(pow_abs0(0.0, 0.0) == 0.0);
    CHECK(pow_abs0(-2.0, 2.0) == 4.0);
    CHECK(pow_abs0(-3.0, 1.0) == 3.0);
}

namespace {

// Independent matrix-form oracle for the 5-dof cubic chain.
Eigen::VectorXd duffing_oracle(const Eigen::VectorXd& s, double f, const Duffing5DofParams& p) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 5);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(5, 5);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
        m(i, i) = p.m[static_cast<std::size_t>(i)];
        k(i, i) += p.k[static_cast<std::size_t>(i)];
        c(i, i) += p.c[static_cast<std::size_t>(i)];
        if (i + 1 < 5) {
            k(i, i) += p.k[static_cast<std::size_t>(i) + 1];
            c(i, i) += p.c[static_cast<std::size_t>(i) + 1];
            k(i, i + 1) = k(i + 1, i) = -p.k[static_cast<std::size_t>(i) + 1];
            c(i, i + 1) = c(i + 1, i) = -p.c[static_cast<std::size_t>(i) + 1];
        }
    }
    const Eigen::VectorXd x = s.head(5), v = s.tail(5);
    Eigen::VectorXd force = -k * x - c * v;
    force[0] -= p.alpha_do * x[0] * x[0] * x[0];
    if (p.forcing == ForcingConvention::BaseAcceleration)
        force -= f * m * Eigen::VectorXd::Ones(5);
    else
        force[0] += f;
    Eigen::VectorXd ds(10);
    ds.head(5) = v;
    ds.tail(5) = m.inverse() * force;
    return ds;
}

}  // namespace

TEST_CASE("cubic chain derivative agrees with the matrix-form oracle") {
    Duffing5DofParams p;
    Eigen::VectorXd s(10);
    s << 0.02, -0.01, 0.015, 0.007, -0.003, 0.1, 0.05, -0.2, 0.12, 0.09;

    for (const double f : {0.0, 1.7, -4.1}) {
        Eigen::VectorXd ds(10);
        duffing_5dof_rhs(0.0, s, f, p, ds);
        const Eigen::VectorXd oracle = duffing_oracle(s, f, p);
        CHECK((ds - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }

    p.forcing = ForcingConvention::Direct;
    Eigen::VectorXd ds(10);
    duffing_5dof_rhs(0.0, s, 2.5, p, ds);
    CHECK((ds - duffing_oracle(s, 2.5, p)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-story chain degenerates to the hysteretic sdof") {
    ShearChainParams chain;
    chain.n_dof = 1;
    chain.fill_default_stories();
    chain.forcing = ForcingConvention::Direct;
    BoucWenSdofParams sdof;

    Eigen::VectorXd s(3), ds_chain(3), ds_sdof(3);
    s << 0.004, -0.02, 0.0007;
    for (const double f : {0.0, 12.0}) {
        shear_chain_boucwen_rhs(0.0, s, f, chain, ds_chain);
        boucwen_sdof_rhs(0.0, s, f, sdof, ds_sdof);
        CHECK((ds_chain - ds_sdof).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("free damped chain never gains mechanical energy") {
    ShearChainParams p;
    p.n_dof = 4;
    p.q_y = 0.0;  // linear stories isolate the passivity argument
    p.fill_default_stories();
    p.x0 = 0.01;
    p.v0 = 0.0;
    SystemModel sys{p};

    const TimeGrid record = TimeGrid::uniform(0.0, 2.0, 101);
    const Eigen::VectorXd forcing = Eigen::VectorXd::Zero(101);
    const Trajectory traj = simulate(sys, forcing, record, 1e-3, record);

    Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
        kmat(i, i) += p.k[static_cast<std::size_t>(i)];
        if (i + 1 < 4) {
            kmat(i, i) += p.k[static_cast<std::size_t>(i) + 1];
            kmat(i, i + 1) = kmat(i + 1, i) = -p.k[static_cast<std::size_t>(i) + 1];
        }
    }
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t rec = 0; rec < record.size(); ++rec) {
        const Eigen::VectorXd x =
            traj.states.row(static_cast<Eigen::Index>(rec)).head(4).transpose();
        const Eigen::VectorXd v =
            traj.states.row(static_cast<Eigen::Index>(rec)).segment(4, 4).transpose();
        const double energy =
            0.5 * p.m[0] * v.squaredNorm() + 0.5 * x.dot(kmat * x);
        CHECK(energy <= prev * (1.0 + 1e-12));
        prev = energy;
    }
}

TEST_CASE("dataset generation names the sample that diverged") {
    SystemModel sys{BoucWenSdofParams{}};
    FunctionSampleSet exc;
    exc.grid = TimeGrid::uniform(0.0, 0.1, 6);
    exc.values = Eigen::MatrixXd::Zero(3, 6);
    exc.values.row(1).setConstant(1e308);

    try {
        generate_dataset(sys, exc, 0, 1e-3);
        FAIL("expected a divergence error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
        CHECK(std::string(e.what()).find("diverged") != std::string::npos);
    }
}

TEST_CASE("multi-dof generation matches per-dof runs") {
    SystemModel sys{Duffing5DofParams{}};
    FourierSampler sampler({}, TimeGrid::uniform(0.0, 0.3, 16));
    const FunctionSampleSet exc = sampler.sample(11, 2);

    const auto both = generate_datasets(sys, exc, {0, 4}, 1e-3);
    const OperatorDataset d0 = generate_dataset(sys, exc, 0, 1e-3);
    const OperatorDataset d4 = generate_dataset(sys, exc, 4, 1e-3);
    CHECK((both[0].responses.array() == d0.responses.array()).all());
    CHECK((both[1].responses.array() == d4.responses.array()).all());
    CHECK(both[0].response_dof == 0);
    CHECK(both[1].response_dof == 4);
    CHECK((both[0].responses.array() != both[1].responses.array()).any());
}

TEST_CASE("threaded generation merges samples in order") {
    SystemModel sys{BoucWenSdofParams{}};
    GrfSampler sampler({50.0, 0.1, 1e-8, 1e-2}, TimeGrid::uniform(0.0, 0.5, 26));
    const FunctionSampleSet exc = sampler.sample(3, 7);

    const OperatorDataset serial = generate_dataset(sys, exc, 0, 1e-3, 1);
    const OperatorDataset threaded = generate_dataset(sys, exc, 0, 1e-3, 4);
    CHECK((serial.responses.array() == threaded.responses.array()).all());
}

TEST_CASE("simulate runs the benchmark storey under field excitation") {
    SystemModel sys{BoucWenSdofParams{}};
    GrfSampler sampler({50.0, 0.1, 1e-8, 1e-2}, TimeGrid::uniform(0.0, 2.0, 101));
    const FunctionSampleSet exc = sampler.sample(0, 1);

    const Trajectory traj =
        simulate(sys, exc.values.row(0).transpose(), exc.grid, 1e-3, exc.grid);
    CHECK(traj.states.allFinite());
    CHECK(traj.states(0, 0) == 0.005);
    CHECK(traj.states(0, 1) == 0.001);
    CHECK(traj.states(0, 2) == 0.001);
    CHECK(traj.n_dof == 1);
    // 50 N-scale forcing moves a 6800 kg storey by much less than a metre.
    CHECK(traj.dof_displacements().cwiseAbs().maxCoeff() < 1.0);
}
