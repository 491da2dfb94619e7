#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "spikeop/dynamics.hpp"
#include "spikeop/energy.hpp"
#include "spikeop/excitation.hpp"
#include "spikeop/opnet.hpp"
#include "spikeop/reliability.hpp"

namespace spikeop {

struct ExcitationSpec {
    std::string kind = "grf";  // "grf" or "fourier"
    GrfConfig grf;
    FourierConfig fourier;
};

struct GridSpec {
    double t_start = 0.0;
    double t_end = 2.0;
    double rate_hz = 50.0;

    std::size_t n_points() const;
    TimeGrid make() const;
};

struct SolverSpec {
    double dt = 1e-3;
};

struct DataSpec {
    std::size_t n_train = 200;
    std::size_t n_cal = 100;
    std::size_t n_test = 1000;
};

struct ArchSpec {
    std::size_t width = 50;
    std::size_t n_layers = 4;
    std::size_t latent = 50;
    std::string branch_activation = "vsn";
    std::size_t t_s = 2;
    double surrogate_slope = 25.0;
    std::string emission = "relu";
    std::vector<std::size_t> act_after;  // empty keeps the standard placement

    OperatorArchitecture make(std::size_t n_sensors) const;
};

struct TrainSpec {
    double lr = 3e-3;
    std::size_t iterations = 5000;
    double kl_weight = -1.0;  // negative selects 1 / n_triplets
    std::size_t n_elbo_samples = 10;
    bool keep_best = true;

    TrainConfig make(std::uint64_t seed) const;
};

struct ConformalSpec {
    double alpha = 0.05;
    bool use_z = true;
};

struct PredictSpec {
    std::size_t n1 = 30;
    std::size_t n2 = 10;
};

struct ReliabilitySpec {
    std::vector<double> u_crit;  // one per response dof; empty disables the stage
    std::string sense = "above";
    std::size_t n_inputs = 2000;
    bool with_truth = false;  // also run the reference model on the same inputs

    PerformanceSpec make(std::size_t dof_index) const;
};

struct EnergySpec {
    double n_in = 100.0;
    double n_out = 100.0;
    double t_s = 1.0;
    EnergyParams params;
    std::vector<double> alphas;  // empty sweeps 0..1 in steps of 0.01

    std::vector<double> sweep() const;
};

// Everything one experiment needs, loadable from a single JSON file.
// Parsing is strict: unknown keys are errors, so typos cannot silently
// fall back to defaults.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::variant<BoucWenSdofParams, Duffing5DofParams, ShearChainParams> system =
        BoucWenSdofParams{};
    std::vector<std::size_t> response_dofs = {0};
    ExcitationSpec excitation;
    GridSpec grid;
    SolverSpec solver;
    DataSpec data;
    ArchSpec arch;
    TrainSpec train;
    ConformalSpec conformal;
    PredictSpec predict;
    ReliabilitySpec reliability;
    EnergySpec energy;

    void validate() const;
    SystemModel make_system() const;
    FunctionSampleSet sample_excitation(std::uint64_t master_seed, std::size_t n_samples) const;
    std::string system_json() const;
    std::string excitation_json() const;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);

    // Canonical serialization: every field echoed, keys sorted. Two configs
    // are the same experiment iff these texts match.
    std::string to_json_text() const;
    std::uint64_t content_hash() const;  // FNV-1a over the canonical text
};

}  // namespace spikeop
