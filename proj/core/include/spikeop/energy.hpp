#pragma once

#include <cstddef>
#include <vector>

#include "spikeop/neural.hpp"

namespace spikeop {

// One dense layer for operation counting. alpha_in is the fraction of
// incoming events that are nonzero; theta_out is the expected number of
// output events written back (defaults to n_out * t_s when negative).
struct LayerShape {
    double n_in = 0.0;
    double n_out = 0.0;
    double t_s = 1.0;
    double alpha_in = 0.0;
    double theta_out = -1.0;

    double theta_in() const { return n_in * t_s * alpha_in; }
    double theta_written() const { return theta_out < 0.0 ? n_out * t_s : theta_out; }
    void validate() const;
};

struct OpCounts {
    double mac = 0.0;
    double acc = 0.0;
    double rd = 0.0;
    double wr = 0.0;
};

// Per-operation energies in picojoules (45 nm CMOS figures).
struct EnergyParams {
    double e_mac_pj = 3.1;
    double e_acc_pj = 0.1;
    double e_rd_pj = 5.0;
    double e_wr_pj = 5.0;
};

// Dense layer: every input participates in every output's MAC; reads cover
// the input vector plus each output's weight row and bias.
OpCounts ann_layer_counts(const LayerShape& shape);

// Event-driven layer: multiplies only fire on arriving events, and the
// membrane update adds one accumulate and one state read/write per output
// per step.
OpCounts vsn_layer_counts(const LayerShape& shape);

double layer_energy(const OpCounts& counts, const EnergyParams& params);

struct EnergyCurvePoint {
    double alpha = 0.0;
    double e_ann_pj = 0.0;
    double e_vsn_pj = 0.0;
    double ratio = 0.0;
};

struct EnergyCurve {
    std::vector<EnergyCurvePoint> points;
    bool has_crossover = false;
    double alpha_star = 0.0;  // input activity where the two costs break even
};

// Sweeps input activity and compares a dense layer against its event-driven
// counterpart of the same shape. alpha_star interpolates the ratio = 1
// crossing linearly between adjacent sweep points.
EnergyCurve energy_ratio_curve(double n_in, double n_out, double t_s, const EnergyParams& params,
                               const std::vector<double>& alphas);

// Percentage of gate openings over batch x width x steps.
double spiking_activity_pct(double spike_count, std::size_t batch, std::size_t width,
                            std::size_t t_s);
double spiking_activity_pct(const VsnForwardRecord& record);

// Optional mapping from a capacity measure (e.g. parameter count) to a
// measured energy figure; linear interpolation between entries, clamped at
// the ends.
struct CapacityEnergyTable {
    std::vector<std::pair<double, double>> entries;  // (capacity, energy_pj), ascending

    void validate() const;
    double lookup(double capacity) const;
};

}  // namespace spikeop
