#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "spikeop/errors.hpp"

namespace spikeop {

// Uniform time grid shared by the excitation sampler, the solvers and the
// surrogate's evaluation times. Points are inclusive of both endpoints.
class TimeGrid {
public:
    TimeGrid() = default;

    static TimeGrid uniform(double t_start, double t_end, std::size_t n_points) {
        if (n_points < 2) throw ConfigError("TimeGrid: need at least 2 points");
        if (!(t_end > t_start)) throw ConfigError("TimeGrid: t_end must exceed t_start");
        TimeGrid g;
        g.times_.resize(n_points);
        const double dt = (t_end - t_start) / static_cast<double>(n_points - 1);
        for (std::size_t i = 0; i < n_points; ++i)
            g.times_[i] = t_start + dt * static_cast<double>(i);
        g.times_.back() = t_end;
        g.dt_ = dt;
        return g;
    }

    static TimeGrid from_times(std::vector<double> times) {
        if (times.size() < 2) throw ConfigError("TimeGrid: need at least 2 points");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw ConfigError("TimeGrid: times must be strictly increasing");
        TimeGrid g;
        g.dt_ = times[1] - times[0];
        const double tol = 1e-9 * (times.back() - times.front());
        for (std::size_t i = 1; i < times.size(); ++i)
            if (std::abs((times[i] - times[i - 1]) - g.dt_) > tol)
                throw ConfigError("TimeGrid: spacing is not uniform");
        g.times_ = std::move(times);
        return g;
    }

    const std::vector<double>& times() const { return times_; }
    std::size_t size() const { return times_.size(); }
    double dt() const { return dt_; }
    double t_start() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    double operator[](std::size_t i) const { return times_[i]; }

private:
    std::vector<double> times_;
    double dt_ = 0.0;
};

}  // namespace spikeop
