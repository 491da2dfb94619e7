#include "spikeop/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "spikeop/errors.hpp"
#include "spikeop/io.hpp"

namespace spikeop {

using nlohmann::json;

namespace {

// Tracks which keys of one JSON object have been consumed so leftovers can
// be rejected.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json& raw(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError(where_ + ": missing key '" + key + "'");
        return *it;
    }

    template <typename T>
    T get(const char* key, T fallback) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return fallback;
        try {
            return it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    template <typename T>
    T require(const char* key) {
        const json& v = raw(key);
        try {
            return v.get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

ForcingConvention read_forcing(ObjectReader& r, ForcingConvention fallback) {
    if (!r.has("forcing")) {
        (void)r.get<std::string>("forcing", "");
        return fallback;
    }
    return forcing_convention_from_string(r.require<std::string>("forcing"));
}

template <std::size_t N>
std::array<double, N> read_fixed_array(ObjectReader& r, const char* key,
                                       const std::array<double, N>& fallback,
                                       const std::string& where) {
    if (!r.has(key)) {
        (void)r.get<std::vector<double>>(key, {});
        return fallback;
    }
    const auto v = r.require<std::vector<double>>(key);
    if (v.size() != N)
        throw ConfigError(where + "." + key + ": expected " + std::to_string(N) + " entries");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

std::variant<BoucWenSdofParams, Duffing5DofParams, ShearChainParams> parse_system(const json& j) {
    ObjectReader r(j, "system");
    const std::string kind = r.require<std::string>("kind");
    if (kind == "boucwen_sdof") {
        BoucWenSdofParams p;
        p.m = r.get("m", p.m);
        p.c = r.get("c", p.c);
        p.k = r.get("k", p.k);
        p.q_y = r.get("q_y", p.q_y);
        p.k_r = r.get("k_r", p.k_r);
        p.alpha = r.get("alpha", p.alpha);
        p.beta_bw = r.get("beta_bw", p.beta_bw);
        p.gamma = r.get("gamma", p.gamma);
        p.eta = r.get("eta", p.eta);
        p.d_y = r.get("d_y", p.d_y);
        p.x0 = r.get("x0", p.x0);
        p.v0 = r.get("v0", p.v0);
        p.z0 = r.get("z0", p.z0);
        p.forcing = read_forcing(r, p.forcing);
        r.finish();
        return p;
    }
    if (kind == "duffing_5dof") {
        Duffing5DofParams p;
        p.m = read_fixed_array<5>(r, "m", p.m, "system");
        p.k = read_fixed_array<5>(r, "k", p.k, "system");
        p.c = read_fixed_array<5>(r, "c", p.c, "system");
        p.alpha_do = r.get("alpha_do", p.alpha_do);
        p.x0 = r.get("x0", p.x0);
        p.v0 = r.get("v0", p.v0);
        p.forcing = read_forcing(r, p.forcing);
        r.finish();
        return p;
    }
    if (kind == "shear_chain_boucwen") {
        ShearChainParams p;
        p.n_dof = r.get("n_dof", p.n_dof);
        p.m = r.get("m", p.m);
        p.k = r.get("k", p.k);
        p.c = r.get("c", p.c);
        p.q_y = r.get("q_y", p.q_y);
        p.k_r = r.get("k_r", p.k_r);
        p.alpha = r.get("alpha", p.alpha);
        p.beta_bw = r.get("beta_bw", p.beta_bw);
        p.gamma = r.get("gamma", p.gamma);
        p.eta = r.get("eta", p.eta);
        p.d_y = r.get("d_y", p.d_y);
        p.x0 = r.get("x0", p.x0);
        p.v0 = r.get("v0", p.v0);
        p.z0 = r.get("z0", p.z0);
        p.forcing = read_forcing(r, p.forcing);
        r.finish();
        return p;
    }
    throw ConfigError("system.kind: unknown system '" + kind + "'");
}

json system_to_json(const std::variant<BoucWenSdofParams, Duffing5DofParams,
                                       ShearChainParams>& system) {
    json j;
    std::visit(
        [&j](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BoucWenSdofParams>) {
                j["kind"] = "boucwen_sdof";
                j["m"] = p.m;
                j["c"] = p.c;
                j["k"] = p.k;
                j["q_y"] = p.q_y;
                j["k_r"] = p.k_r;
                j["alpha"] = p.alpha;
                j["beta_bw"] = p.beta_bw;
                j["gamma"] = p.gamma;
                j["eta"] = p.eta;
                j["d_y"] = p.d_y;
                j["x0"] = p.x0;
                j["v0"] = p.v0;
                j["z0"] = p.z0;
            } else if constexpr (std::is_same_v<T, Duffing5DofParams>) {
                j["kind"] = "duffing_5dof";
                j["m"] = p.m;
                j["k"] = p.k;
                j["c"] = p.c;
                j["alpha_do"] = p.alpha_do;
                j["x0"] = p.x0;
                j["v0"] = p.v0;
            } else {
                j["kind"] = "shear_chain_boucwen";
                j["n_dof"] = p.n_dof;
                j["m"] = p.m;
                j["k"] = p.k;
                j["c"] = p.c;
                j["q_y"] = p.q_y;
                j["k_r"] = p.k_r;
                j["alpha"] = p.alpha;
                j["beta_bw"] = p.beta_bw;
                j["gamma"] = p.gamma;
                j["eta"] = p.eta;
                j["d_y"] = p.d_y;
                j["x0"] = p.x0;
                j["v0"] = p.v0;
                j["z0"] = p.z0;
            }
            j["forcing"] = to_string(p.forcing);
        },
        system);
    return j;
}

json excitation_to_json(const ExcitationSpec& e) {
    json j;
    j["kind"] = e.kind;
    if (e.kind == "grf") {
        j["sigma"] = e.grf.sigma;
        j["length_scale"] = e.grf.length_scale;
        j["jitter_rel_start"] = e.grf.jitter_rel_start;
        j["jitter_rel_max"] = e.grf.jitter_rel_max;
    } else {
        j["n_sin"] = e.fourier.n_sin;
        j["n_cos"] = e.fourier.n_cos;
        j["amp_min"] = e.fourier.amp_min;
        j["amp_max"] = e.fourier.amp_max;
        j["freq_min"] = e.fourier.freq_min;
        j["freq_max"] = e.fourier.freq_max;
    }
    return j;
}

ExcitationSpec parse_excitation(const json& j) {
    ObjectReader r(j, "excitation");
    ExcitationSpec e;
    e.kind = r.get<std::string>("kind", e.kind);
    if (e.kind == "grf") {
        e.grf.sigma = r.get("sigma", e.grf.sigma);
        e.grf.length_scale = r.get("length_scale", e.grf.length_scale);
        e.grf.jitter_rel_start = r.get("jitter_rel_start", e.grf.jitter_rel_start);
        e.grf.jitter_rel_max = r.get("jitter_rel_max", e.grf.jitter_rel_max);
    } else if (e.kind == "fourier") {
        e.fourier.n_sin = r.get("n_sin", e.fourier.n_sin);
        e.fourier.n_cos = r.get("n_cos", e.fourier.n_cos);
        e.fourier.amp_min = r.get("amp_min", e.fourier.amp_min);
        e.fourier.amp_max = r.get("amp_max", e.fourier.amp_max);
        e.fourier.freq_min = r.get("freq_min", e.fourier.freq_min);
        e.fourier.freq_max = r.get("freq_max", e.fourier.freq_max);
    } else {
        throw ConfigError("excitation.kind: unknown sampler '" + e.kind + "'");
    }
    r.finish();
    return e;
}

}  // namespace

std::size_t GridSpec::n_points() const {
    const double raw = (t_end - t_start) * rate_hz;
    const auto n = static_cast<long long>(std::llround(raw));
    if (n < 1 || std::abs(raw - static_cast<double>(n)) > 1e-9)
        throw ConfigError("grid: rate_hz does not divide the window evenly");
    return static_cast<std::size_t>(n) + 1;
}

TimeGrid GridSpec::make() const { return TimeGrid::uniform(t_start, t_end, n_points()); }

OperatorArchitecture ArchSpec::make(std::size_t n_sensors) const {
    OperatorArchitecture a = OperatorArchitecture::standard(
        n_sensors, width, n_layers, latent, branch_activation_from_string(branch_activation));
    a.t_s = t_s;
    a.surrogate_slope = surrogate_slope;
    a.phi = phi_kind_from_string(emission);
    if (!act_after.empty()) a.act_after = act_after;
    a.validate();
    return a;
}

TrainConfig TrainSpec::make(std::uint64_t seed) const {
    TrainConfig cfg;
    cfg.lr = lr;
    cfg.iterations = iterations;
    cfg.kl_weight = kl_weight;
    cfg.n_elbo_samples = n_elbo_samples;
    cfg.keep_best = keep_best;
    cfg.seed = seed;
    return cfg;
}

PerformanceSpec ReliabilitySpec::make(std::size_t dof_index) const {
    if (dof_index >= u_crit.size())
        throw ConfigError("reliability: no threshold configured for response dof index " +
                          std::to_string(dof_index));
    PerformanceSpec spec;
    spec.u_crit = u_crit[dof_index];
    spec.sense = exceedance_sense_from_string(sense);
    return spec;
}

std::vector<double> EnergySpec::sweep() const {
    if (!alphas.empty()) return alphas;
    std::vector<double> out;
    out.reserve(101);
    for (int i = 0; i <= 100; ++i) out.push_back(static_cast<double>(i) / 100.0);
    return out;
}

void ExperimentConfig::validate() const {
    const SystemModel sys = make_system();
    if (response_dofs.empty()) throw ConfigError("response_dofs: must name at least one dof");
    for (std::size_t d : response_dofs)
        if (d >= sys.n_dof())
            throw ConfigError("response_dofs: dof " + std::to_string(d) + " out of range for " +
                              sys.kind());
    if (solver.dt <= 0.0) throw ConfigError("solver.dt must be positive");
    if (data.n_train == 0 || data.n_cal == 0 || data.n_test == 0)
        throw ConfigError("data: sample counts must be positive");
    if (!(conformal.alpha > 0.0 && conformal.alpha < 1.0))
        throw ConfigError("conformal.alpha must lie in (0, 1)");
    if (predict.n1 == 0 || predict.n2 == 0)
        throw ConfigError("predict: n1 and n2 must be positive");
    if (!reliability.u_crit.empty() && reliability.u_crit.size() != response_dofs.size())
        throw ConfigError("reliability.u_crit must have one entry per response dof");
    (void)grid.n_points();
    (void)arch.make(grid.n_points());
    (void)energy.sweep();
    LayerShape probe{energy.n_in, energy.n_out, energy.t_s, 0.0, -1.0};
    probe.validate();
}

SystemModel ExperimentConfig::make_system() const {
    return std::visit([](const auto& p) { return SystemModel(p); }, system);
}

FunctionSampleSet ExperimentConfig::sample_excitation(std::uint64_t master_seed,
                                                      std::size_t n_samples) const {
    const TimeGrid g = grid.make();
    if (excitation.kind == "grf") {
        GrfSampler sampler(excitation.grf, g);
        return sampler.sample(master_seed, n_samples);
    }
    FourierSampler sampler(excitation.fourier, g);
    return sampler.sample(master_seed, n_samples);
}

std::string ExperimentConfig::system_json() const { return system_to_json(system).dump(); }

std::string ExperimentConfig::excitation_json() const {
    return excitation_to_json(excitation).dump();
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ObjectReader r(j, "config");
    ExperimentConfig cfg;
    cfg.seed = r.get<std::uint64_t>("seed", cfg.seed);
    if (r.has("system")) cfg.system = parse_system(r.raw("system"));
    cfg.response_dofs = r.get("response_dofs", cfg.response_dofs);
    if (r.has("excitation")) cfg.excitation = parse_excitation(r.raw("excitation"));

    if (r.has("grid")) {
        ObjectReader g(r.raw("grid"), "grid");
        cfg.grid.t_start = g.get("t_start", cfg.grid.t_start);
        cfg.grid.t_end = g.get("t_end", cfg.grid.t_end);
        cfg.grid.rate_hz = g.get("rate_hz", cfg.grid.rate_hz);
        g.finish();
    }
    if (r.has("solver")) {
        ObjectReader s(r.raw("solver"), "solver");
        cfg.solver.dt = s.get("dt", cfg.solver.dt);
        s.finish();
    }
    if (r.has("data")) {
        ObjectReader d(r.raw("data"), "data");
        cfg.data.n_train = d.get("n_train", cfg.data.n_train);
        cfg.data.n_cal = d.get("n_cal", cfg.data.n_cal);
        cfg.data.n_test = d.get("n_test", cfg.data.n_test);
        d.finish();
    }
    if (r.has("arch")) {
        ObjectReader a(r.raw("arch"), "arch");
        cfg.arch.width = a.get("width", cfg.arch.width);
        cfg.arch.n_layers = a.get("n_layers", cfg.arch.n_layers);
        cfg.arch.latent = a.get("latent", cfg.arch.latent);
        cfg.arch.branch_activation =
            a.get<std::string>("branch_activation", cfg.arch.branch_activation);
        cfg.arch.t_s = a.get("t_s", cfg.arch.t_s);
        cfg.arch.surrogate_slope = a.get("surrogate_slope", cfg.arch.surrogate_slope);
        cfg.arch.emission = a.get<std::string>("emission", cfg.arch.emission);
        cfg.arch.act_after = a.get("act_after", cfg.arch.act_after);
        a.finish();
    }
    if (r.has("train")) {
        ObjectReader t(r.raw("train"), "train");
        cfg.train.lr = t.get("lr", cfg.train.lr);
        cfg.train.iterations = t.get("iterations", cfg.train.iterations);
        cfg.train.kl_weight = t.get("kl_weight", cfg.train.kl_weight);
        cfg.train.n_elbo_samples = t.get("n_elbo_samples", cfg.train.n_elbo_samples);
        cfg.train.keep_best = t.get("keep_best", cfg.train.keep_best);
        t.finish();
    }
    if (r.has("conformal")) {
        ObjectReader c(r.raw("conformal"), "conformal");
        cfg.conformal.alpha = c.get("alpha", cfg.conformal.alpha);
        cfg.conformal.use_z = c.get("use_z", cfg.conformal.use_z);
        c.finish();
    }
    if (r.has("predict")) {
        ObjectReader p(r.raw("predict"), "predict");
        cfg.predict.n1 = p.get("n1", cfg.predict.n1);
        cfg.predict.n2 = p.get("n2", cfg.predict.n2);
        p.finish();
    }
    if (r.has("reliability")) {
        ObjectReader rel(r.raw("reliability"), "reliability");
        cfg.reliability.u_crit = rel.get("u_crit", cfg.reliability.u_crit);
        cfg.reliability.sense = rel.get<std::string>("sense", cfg.reliability.sense);
        cfg.reliability.n_inputs = rel.get("n_inputs", cfg.reliability.n_inputs);
        cfg.reliability.with_truth = rel.get("with_truth", cfg.reliability.with_truth);
        rel.finish();
    }
    if (r.has("energy")) {
        ObjectReader e(r.raw("energy"), "energy");
        cfg.energy.n_in = e.get("n_in", cfg.energy.n_in);
        cfg.energy.n_out = e.get("n_out", cfg.energy.n_out);
        cfg.energy.t_s = e.get("t_s", cfg.energy.t_s);
        cfg.energy.params.e_mac_pj = e.get("e_mac_pj", cfg.energy.params.e_mac_pj);
        cfg.energy.params.e_acc_pj = e.get("e_acc_pj", cfg.energy.params.e_acc_pj);
        cfg.energy.params.e_rd_pj = e.get("e_rd_pj", cfg.energy.params.e_rd_pj);
        cfg.energy.params.e_wr_pj = e.get("e_wr_pj", cfg.energy.params.e_wr_pj);
        cfg.energy.alphas = e.get("alphas", cfg.energy.alphas);
        e.finish();
    }
    r.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_json_text(read_text_file(path));
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["seed"] = seed;
    j["system"] = system_to_json(system);
    j["response_dofs"] = response_dofs;
    j["excitation"] = excitation_to_json(excitation);
    j["grid"] = {{"t_start", grid.t_start}, {"t_end", grid.t_end}, {"rate_hz", grid.rate_hz}};
    j["solver"] = {{"dt", solver.dt}};
    j["data"] = {{"n_train", data.n_train}, {"n_cal", data.n_cal}, {"n_test", data.n_test}};
    j["arch"] = {{"width", arch.width},
                 {"n_layers", arch.n_layers},
                 {"latent", arch.latent},
                 {"branch_activation", arch.branch_activation},
                 {"t_s", arch.t_s},
                 {"surrogate_slope", arch.surrogate_slope},
                 {"emission", arch.emission},
                 {"act_after", arch.act_after}};
    j["train"] = {{"lr", train.lr},
                  {"iterations", train.iterations},
                  {"kl_weight", train.kl_weight},
                  {"n_elbo_samples", train.n_elbo_samples},
                  {"keep_best", train.keep_best}};
    j["conformal"] = {{"alpha", conformal.alpha}, {"use_z", conformal.use_z}};
    j["predict"] = {{"n1", predict.n1}, {"n2", predict.n2}};
    j["reliability"] = {{"u_crit", reliability.u_crit},
                        {"sense", reliability.sense},
                        {"n_inputs", reliability.n_inputs},
                        {"with_truth", reliability.with_truth}};
    j["energy"] = {{"n_in", energy.n_in},
                   {"n_out", energy.n_out},
                   {"t_s", energy.t_s},
                   {"e_mac_pj", energy.params.e_mac_pj},
                   {"e_acc_pj", energy.params.e_acc_pj},
                   {"e_rd_pj", energy.params.e_rd_pj},
                   {"e_wr_pj", energy.params.e_wr_pj},
                   {"alphas", energy.alphas}};
    return j.dump(2) + "\n";
}

std::uint64_t ExperimentConfig::content_hash() const {
    const std::string text = to_json_text();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace spikeop
