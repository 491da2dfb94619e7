#include <cmath>
#include <vector>

#include "doctest.h"
#include "spikeop/energy.hpp"
#include "spikeop/errors.hpp"

using namespace spikeop;

TEST_CASE("dense layer operation counts, 100 in and 100 out") {
    LayerShape shape;
    shape.n_in = 100.0;
    shape.n_out = 100.0;

    const OpCounts c = ann_layer_counts(shape);
    CHECK(c.mac == 10000.0);
    CHECK(c.acc == 300.0);
    CHECK(c.rd == 10200.0);
    CHECK(c.wr == 100.0);

    const double e = layer_energy(c, EnergyParams{});
    CHECK(e == doctest::Approx(82530.0).epsilon(1e-14));
}

TEST_CASE("event-driven layer counts at zero and full input activity") {
    LayerShape silent;
    silent.n_in = 100.0;
    silent.n_out = 100.0;
    silent.t_s = 1.0;
    silent.alpha_in = 0.0;

    const OpCounts c0 = vsn_layer_counts(silent);
    CHECK(c0.mac == 100.0);
    CHECK(c0.acc == 200.0);
    CHECK(c0.rd == 400.0);
    CHECK(c0.wr == 200.0);
    CHECK(layer_energy(c0, EnergyParams{}) == doctest::Approx(3330.0).epsilon(1e-14));

    LayerShape busy = silent;
    busy.alpha_in = 1.0;
    const OpCounts c1 = vsn_layer_counts(busy);
    CHECK(c1.mac == 10100.0);
    CHECK(c1.acc == 10200.0);
    CHECK(c1.rd == 10500.0);
    CHECK(c1.wr == 200.0);
    CHECK(layer_energy(c1, EnergyParams{}) == doctest::Approx(85830.0).epsilon(1e-14));
}

TEST_CASE("event-driven energy is affine in the input activity") {
    LayerShape shape;
    shape.n_in = 100.0;
    shape.n_out = 100.0;
    for (const double alpha : {0.1, 0.25, 0.5, 0.77}) {
        shape.alpha_in = alpha;
        const double e = layer_energy(vsn_layer_counts(shape), EnergyParams{});
        CHECK(e == doctest::Approx(82500.0 * alpha + 3330.0).epsilon(1e-12));
    }
}

TEST_CASE("the energy ratio falls with activity and crosses near 0.96") {
    std::vector<double> alphas;
    for (int i = 0; i <= 100; ++i) alphas.push_back(0.01 * i);
    const EnergyCurve curve = energy_ratio_curve(100.0, 100.0, 1.0, EnergyParams{}, alphas);

    REQUIRE(curve.points.size() == 101);
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        CHECK(curve.points[i].e_ann_pj == doctest::Approx(82530.0).epsilon(1e-14));
        if (i > 0) CHECK(curve.points[i].ratio < curve.points[i - 1].ratio);
    }

    const EnergyCurvePoint& p15 = curve.points[15];
    CHECK(p15.alpha == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(p15.e_vsn_pj == doctest::Approx(15705.0).epsilon(1e-12));
    CHECK(p15.ratio == doctest::Approx(82530.0 / 15705.0).epsilon(1e-12));
    CHECK(p15.ratio > 5.0);

    CHECK(curve.has_crossover);
    CHECK(curve.alpha_star == doctest::Approx(0.96).epsilon(1e-9));
}

TEST_CASE("no crossover is reported when the sweep stays cheap") {
    const EnergyCurve curve =
        energy_ratio_curve(100.0, 100.0, 1.0, EnergyParams{}, {0.0, 0.2, 0.4});
    CHECK(!curve.has_crossover);
    for (const auto& p : curve.points) CHECK(p.ratio > 1.0);
}

TEST_CASE("multi-step presentation scales the event-driven floor") {
    LayerShape shape;
    shape.n_in = 100.0;
    shape.n_out = 100.0;
    shape.t_s = 2.0;
    shape.alpha_in = 0.0;
    const OpCounts c = vsn_layer_counts(shape);
    CHECK(c.mac == 200.0);
    CHECK(c.acc == 400.0);
    CHECK(c.rd == 500.0);
    CHECK(c.wr == 400.0);

    shape.theta_out = 50.0;
    CHECK(vsn_layer_counts(shape).wr == 250.0);
    CHECK(shape.theta_written() == 50.0);
    shape.theta_out = -1.0;
    CHECK(shape.theta_written() == 200.0);
}

TEST_CASE("shape validation rejects nonsense") {
    LayerShape shape;
    shape.n_in = 0.0;
    shape.n_out = 10.0;
    CHECK_THROWS_AS(shape.validate(), ConfigError);
    shape.n_in = 10.0;
    shape.alpha_in = 1.5;
    CHECK_THROWS_AS(shape.validate(), ConfigError);
    shape.alpha_in = -0.1;
    CHECK_THROWS_AS(shape.validate(), ConfigError);
    shape.alpha_in = 0.5;
    shape.t_s = 0.0;
    CHECK_THROWS_AS(shape.validate(), ConfigError);
    shape.t_s = 1.0;
    shape.validate();

    CHECK_THROWS_AS(
        energy_ratio_curve(100.0, 100.0, 1.0, EnergyParams{}, {0.2, 0.1}), ConfigError);
    CHECK_THROWS_AS(energy_ratio_curve(100.0, 100.0, 1.0, EnergyParams{}, {}), ConfigError);
}

TEST_CASE("spiking activity percentage over batch, width and steps") {
    CHECK(spiking_activity_pct(30.0, 5, 4, 3) == 50.0);
    CHECK(spiking_activity_pct(0.0, 5, 4, 3) == 0.0);

    VsnForwardRecord rec;
    rec.spike_count = 12;
    rec.batch = 3;
    rec.width = 4;
    rec.t_s = 2;
    CHECK(spiking_activity_pct(rec) == 50.0);
}

TEST_CASE("capacity table interpolates and clamps") {
    CapacityEnergyTable table;
    table.entries = {{10.0, 100.0}, {20.0, 300.0}, {40.0, 200.0}};
    table.validate();

    CHECK(table.lookup(10.0) == 100.0);
    CHECK(table.lookup(15.0) == doctest::Approx(200.0).epsilon(1e-14));
    CHECK(table.lookup(30.0) == doctest::Approx(250.0).epsilon(1e-14));
    CHECK(table.lookup(5.0) == 100.0);
    CHECK(table.lookup(99.0) == 200.0);

    CapacityEnergyTable bad;
    bad.entries = {{10.0, 1.0}, {10.0, 2.0}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CapacityEnergyTable empty;
    CHECK_THROWS_AS(empty.validate(), ConfigError);
    CHECK_THROWS_AS(empty.lookup(1.0), ConfigError);
}
