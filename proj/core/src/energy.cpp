#include "spikeop/energy.hpp"

#include <algorithm>
#include <cmath>

#include "spikeop/errors.hpp"

namespace spikeop {

void LayerShape::validate() const {
    if (!(n_in >= 1.0) || !(n_out >= 1.0))
        throw ConfigError("LayerShape: n_in and n_out must be at least 1");
    if (!(t_s >= 1.0)) throw ConfigError("LayerShape: t_s must be at least 1");
    if (!(alpha_in >= 0.0 && alpha_in <= 1.0))
        throw ConfigError("LayerShape: alpha_in must lie in [0, 1]");
}

OpCounts ann_layer_counts(const LayerShape& shape) {
    shape.validate();
    OpCounts c;
    c.mac = shape.n_in * shape.n_out;
    c.acc = shape.n_out + (shape.n_in + shape.n_out);
    c.rd = shape.n_in + (shape.n_in + 1.0) * shape.n_out;
    c.wr = shape.n_out;
    return c;
}

OpCounts vsn_layer_counts(const LayerShape& shape) {
    shape.validate();
    const double theta = shape.theta_in();
    OpCounts c;
    c.mac = theta * shape.n_out + shape.t_s * shape.n_out;
    c.acc = 2.0 * shape.t_s * shape.n_out + theta * shape.n_out;
    c.rd = theta + (theta + 1.0) * shape.n_out + shape.t_s * shape.n_out + 2.0 * shape.n_out;
    c.wr = shape.theta_written() + shape.t_s * shape.n_out;
    return c;
}

double layer_energy(const OpCounts& counts, const EnergyParams& params) {
    return counts.mac * params.e_mac_pj + counts.acc * params.e_acc_pj +
           counts.rd * params.e_rd_pj + counts.wr * params.e_wr_pj;
}

EnergyCurve energy_ratio_curve(double n_in, double n_out, double t_s, const EnergyParams& params,
                               const std::vector<double>& alphas) {
    if (alphas.empty()) throw ConfigError("energy_ratio_curve: empty activity sweep");
    for (std::size_t i = 1; i < alphas.size(); ++i)
        if (!(alphas[i] > alphas[i - 1]))
            throw ConfigError("energy_ratio_curve: activities must be strictly increasing");

    LayerShape dense{n_in, n_out, 1.0, 1.0, -1.0};
    const double e_ann = layer_energy(ann_layer_counts(dense), params);

    EnergyCurve curve;
    curve.points.reserve(alphas.size());
    for (double a : alphas) {
        LayerShape s{n_in, n_out, t_s, a, -1.0};
        const double e_vsn = layer_energy(vsn_layer_counts(s), params);
        if (!(e_vsn > 0.0)) throw Error("energy_ratio_curve: non-positive event-driven energy");
        curve.points.push_back({a, e_ann, e_vsn, e_ann / e_vsn});
    }
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const auto& p0 = curve.points[i];
        const auto& p1 = curve.points[i + 1];
        if ((p0.ratio - 1.0) == 0.0) {
            curve.has_crossover = true;
            curve.alpha_star = p0.alpha;
            break;
        }
        if ((p0.ratio - 1.0) * (p1.ratio - 1.0) < 0.0) {
            curve.has_crossover = true;
            curve.alpha_star =
                p0.alpha + (p0.ratio - 1.0) * (p1.alpha - p0.alpha) / (p0.ratio - p1.ratio);
            break;
        }
    }
    if (!curve.has_crossover && (curve.points.back().ratio - 1.0) == 0.0) {
        curve.has_crossover = true;
        curve.alpha_star = curve.points.back().alpha;
    }
    return curve;
}

double spiking_activity_pct(double spike_count, std::size_t batch, std::size_t width,
                            std::size_t t_s) {
    const double denom =
        static_cast<double>(batch) * static_cast<double>(width) * static_cast<double>(t_s);
    if (!(denom > 0.0)) throw Error("spiking_activity_pct: empty denominator");
    return 100.0 * spike_count / denom;
}

double spiking_activity_pct(const VsnForwardRecord& record) {
    return spiking_activity_pct(static_cast<double>(record.spike_count), record.batch,
                                record.width, record.t_s);
}

void CapacityEnergyTable::validate() const {
    if (entries.size() < 2)
        throw ConfigError("CapacityEnergyTable: need at least 2 entries");
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (!(entries[i].first > entries[i - 1].first))
            throw ConfigError("CapacityEnergyTable: capacities must be strictly increasing");
}

double CapacityEnergyTable::lookup(double capacity) const {
    validate();
    if (capacity <= entries.front().first) return entries.front().second;
    if (capacity >= entries.back().first) return entries.back().second;
    auto hi = std::upper_bound(entries.begin(), entries.end(), capacity,
                               [](double c, const auto& e) { return c < e.first; });
    auto lo = hi - 1;
    const double w = (capacity - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

}  // namespace spikeop
