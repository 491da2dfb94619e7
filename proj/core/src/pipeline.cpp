#include "spikeop/pipeline.hpp"

#include <chrono>
#include <filesystem>

#include "json.hpp"
#include "spikeop/conformal.hpp"
#include "spikeop/errors.hpp"
#include "spikeop/reliability.hpp"

namespace spikeop {

using nlohmann::json;

std::string dataset_stem(const std::string& role, std::size_t dof) {
    return "ds_" + role + "_dof" + std::to_string(dof);
}

std::string excitation_file(const std::string& role) { return "excitation_" + role + ".csv"; }

std::string checkpoint_stem(std::size_t dof) { return "checkpoint_dof" + std::to_string(dof); }

std::string schedule_stem(std::size_t dof) { return "schedule_dof" + std::to_string(dof); }

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

class StageTimer {
public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// The output directory is pinned to one configuration. The canonical config
// text is written on first use and must match on every later stage.
void check_or_write_config(const ExperimentConfig& cfg, const std::string& out_dir, bool force) {
    ensure_dir(out_dir);
    const std::string path = join(out_dir, "config.json");
    const std::string text = cfg.to_json_text();
    if (file_exists(path)) {
        if (read_text_file(path) == text) return;
        if (!force)
            throw ConfigError(out_dir +
                              " holds artifacts from a different configuration; "
                              "pass --force to redo or choose another directory");
    }
    write_text_file(path, text);
}

void guard_overwrite(const std::string& out_dir, const std::vector<std::string>& names,
                     bool force) {
    if (force) return;
    for (const auto& name : names)
        if (file_exists(join(out_dir, name)))
            throw IoError(name + " already exists in " + out_dir + "; pass --force to overwrite");
}

void write_stage_manifest(const ExperimentConfig& cfg, const std::string& out_dir,
                          const std::string& stage, const StageResult& result) {
    json j;
    j["stage"] = stage;
    j["config_hash"] = cfg.content_hash();
    j["artifacts"] = result.artifacts;
    j["wall_ms"] = result.wall_ms;
    j["completed_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    write_text_file(join(out_dir, "manifest_" + stage + ".json"), j.dump(2) + "\n");
}

struct RoleSpec {
    std::string name;
    std::size_t count;
    std::uint64_t master;
};

std::vector<RoleSpec> role_specs(const ExperimentConfig& cfg) {
    const SeedPlan plan{cfg.seed};
    return {{"train", cfg.data.n_train, plan.excitation_train()},
            {"cal", cfg.data.n_cal, plan.excitation_cal()},
            {"test", cfg.data.n_test, plan.excitation_test()}};
}

}  // namespace

StageResult run_simulate(const ExperimentConfig& cfg, const std::string& out_dir, bool force,
                         std::size_t n_threads) {
    cfg.validate();
    StageTimer timer;
    check_or_write_config(cfg, out_dir, force);

    StageResult result;
    std::vector<std::string> names;
    for (const auto& role : role_specs(cfg)) {
        names.push_back(excitation_file(role.name));
        for (std::size_t dof : cfg.response_dofs) {
            names.push_back(dataset_stem(role.name, dof) + "_manifest.json");
            names.push_back(dataset_stem(role.name, dof) + "_responses.csv");
        }
    }
    guard_overwrite(out_dir, names, force);

    const SystemModel sys = cfg.make_system();
    for (const auto& role : role_specs(cfg)) {
        const FunctionSampleSet exc = cfg.sample_excitation(role.master, role.count);
        save_function_set(join(out_dir, excitation_file(role.name)), exc);

        std::vector<OperatorDataset> datasets =
            generate_datasets(sys, exc, cfg.response_dofs, cfg.solver.dt, n_threads);
        for (std::size_t j = 0; j < cfg.response_dofs.size(); ++j) {
            datasets[j].role = role.name;
            DatasetManifestInfo info;
            info.role = role.name;
            info.response_dof = cfg.response_dofs[j];
            info.system_json = cfg.system_json();
            info.excitation_json = cfg.excitation_json();
            info.excitation_seed = role.master;
            info.solver_dt = cfg.solver.dt;
            save_dataset(out_dir, dataset_stem(role.name, cfg.response_dofs[j]), datasets[j],
                         info, excitation_file(role.name));
        }
    }

    result.artifacts = names;
    result.artifacts.push_back("config.json");
    result.wall_ms = timer.elapsed_ms();
    write_stage_manifest(cfg, out_dir, "simulate", result);
    return result;
}

StageResult run_train(const ExperimentConfig& cfg, const std::string& out_dir, bool force) {
    cfg.validate();
    StageTimer timer;
    check_or_write_config(cfg, out_dir, force);

    std::vector<std::string> names;
    for (std::size_t dof : cfg.response_dofs) {
        names.push_back(checkpoint_stem(dof) + ".json");
        names.push_back(checkpoint_stem(dof) + ".bin");
        names.push_back("train_log_dof" + std::to_string(dof) + ".csv");
    }
    guard_overwrite(out_dir, names, force);

    const SeedPlan plan{cfg.seed};
    const OperatorArchitecture arch = cfg.arch.make(cfg.grid.n_points());
    for (std::size_t j = 0; j < cfg.response_dofs.size(); ++j) {
        const std::size_t dof = cfg.response_dofs[j];
        const OperatorDataset ds = load_dataset(out_dir, dataset_stem("train", dof));
        const TrainResult res = train(ds, arch, cfg.train.make(plan.training(j)));
        save_model(out_dir, checkpoint_stem(dof), res.model);
        save_train_log(join(out_dir, "train_log_dof" + std::to_string(dof) + ".csv"), res.log);
    }

    StageResult result;
    result.artifacts = names;
    result.wall_ms = timer.elapsed_ms();
    write_stage_manifest(cfg, out_dir, "train", result);
    return result;
}

StageResult run_calibrate(const ExperimentConfig& cfg, const std::string& out_dir, bool force) {
    cfg.validate();
    StageTimer timer;
    check_or_write_config(cfg, out_dir, force);

    std::vector<std::string> names;
    for (std::size_t dof : cfg.response_dofs) {
        names.push_back(schedule_stem(dof) + ".csv");
        names.push_back(schedule_stem(dof) + ".json");
    }
    guard_overwrite(out_dir, names, force);

    const SeedPlan plan{cfg.seed};
    ScheduleMeta meta{cfg.predict.n1, cfg.predict.n2, plan.predict()};
    for (std::size_t dof : cfg.response_dofs) {
        const ModelBundle model = load_model(out_dir, checkpoint_stem(dof));
        const OperatorDataset cal = load_dataset(out_dir, dataset_stem("cal", dof));
        const ConformalSchedule sched =
            calibrate_schedule(model, cal, cfg.conformal.alpha, meta.n1, meta.n2,
                               meta.predict_seed, cfg.conformal.use_z);
        save_schedule(out_dir, schedule_stem(dof), sched, meta);
    }

    StageResult result;
    result.artifacts = names;
    result.wall_ms = timer.elapsed_ms();
    write_stage_manifest(cfg, out_dir, "calibrate", result);
    return result;
}

StageResult run_evaluate(const ExperimentConfig& cfg, const std::string& out_dir, bool force,
                         bool self_check, std::vector<EvaluateMetrics>* metrics_out) {
    cfg.validate();
    StageTimer timer;
    check_or_write_config(cfg, out_dir, force);

    std::vector<std::string> names;
    for (std::size_t dof : cfg.response_dofs) {
        names.push_back("coverage_dof" + std::to_string(dof) + ".csv");
        names.push_back("metrics_dof" + std::to_string(dof) + ".json");
    }
    guard_overwrite(out_dir, names, force);

    if (metrics_out) metrics_out->clear();
    for (std::size_t dof : cfg.response_dofs) {
        const ModelBundle model = load_model(out_dir, checkpoint_stem(dof));
        ScheduleMeta meta;
        const ConformalSchedule sched = load_schedule(out_dir, schedule_stem(dof), &meta);
        const OperatorDataset test = load_dataset(out_dir, dataset_stem("test", dof));

        PredictiveBand band;
        if (self_check) {
            band.mu_hat = test.responses;
            band.sigma_hat = Eigen::MatrixXd::Ones(test.responses.rows(), test.responses.cols());
            band.n1 = meta.n1;
            band.n2 = meta.n2;
        } else {
            band = predict_band(model, test.inputs.values, test.grid().times(), meta.n1, meta.n2,
                                meta.predict_seed);
        }

        const IntervalMatrix intervals = calibrated_intervals(band, sched);
        EvaluateMetrics m;
        m.response_dof = dof;
        m.nmse_value = nmse(band.mu_hat, test.responses);
        m.coverage =
            coverage_report(intervals, test.responses, 100.0 * (1.0 - sched.alpha));
        if (model.arch.branch_activation == BranchActivation::Vsn)
            m.activity_pct = branch_spiking_activity(model, test.inputs.values);

        Eigen::MatrixXd cov_table(static_cast<Eigen::Index>(sched.times.size()), 2);
        for (std::size_t k = 0; k < sched.times.size(); ++k) {
            cov_table(static_cast<Eigen::Index>(k), 0) = sched.times[k];
            cov_table(static_cast<Eigen::Index>(k), 1) =
                m.coverage.per_time_pct[static_cast<Eigen::Index>(k)];
        }
        write_matrix_csv(join(out_dir, "coverage_dof" + std::to_string(dof) + ".csv"),
                         {"t", "coverage_pct"}, cov_table);

        json mj;
        mj["response_dof"] = dof;
        mj["self_check"] = self_check;
        mj["n_test"] = test.n_samples();
        mj["n1"] = meta.n1;
        mj["n2"] = meta.n2;
        mj["nmse"] = m.nmse_value;
        mj["coverage"] = {{"avg_pct", m.coverage.avg_pct},
                          {"min_pct", m.coverage.min_pct},
                          {"max_pct", m.coverage.max_pct},
                          {"nominal_pct", m.coverage.nominal_pct},
                          {"n_below_nominal", m.coverage.n_below_nominal},
                          {"n_at_or_above_nominal", m.coverage.n_at_or_above_nominal}};
        mj["spiking_activity_pct"] = m.activity_pct;
        write_text_file(join(out_dir, "metrics_dof" + std::to_string(dof) + ".json"),
                        mj.dump(2) + "\n");

        if (metrics_out) metrics_out->push_back(std::move(m));
    }

    StageResult result;
    result.artifacts = names;
    result.wall_ms = timer.elapsed_ms();
    write_stage_manifest(cfg, out_dir, "evaluate", result);
    return result;
}

StageResult run_reliability(const ExperimentConfig& cfg, const std::string& out_dir, bool force,
                            std::size_t n_threads, std::vector<ReliabilityCurve>* curves_out) {
    cfg.validate();
    if (cfg.reliability.u_crit.empty())
        throw ConfigError("reliability: no thresholds configured");
    StageTimer timer;
    check_or_write_config(cfg, out_dir, force);

    std::vector<std::string> names;
    for (std::size_t dof : cfg.response_dofs) {
        names.push_back("reliability_dof" + std::to_string(dof) + ".csv");
        names.push_back("reliability_dof" + std::to_string(dof) + ".json");
    }
    guard_overwrite(out_dir, names, force);

    const SeedPlan plan{cfg.seed};
    const FunctionSampleSet exc =
        cfg.sample_excitation(plan.excitation_reliability(), cfg.reliability.n_inputs);

    std::vector<OperatorDataset> truth_sets;
    if (cfg.reliability.with_truth)
        truth_sets = generate_datasets(cfg.make_system(), exc, cfg.response_dofs, cfg.solver.dt,
                                       n_threads);

    if (curves_out) curves_out->clear();
    for (std::size_t j = 0; j < cfg.response_dofs.size(); ++j) {
        const std::size_t dof = cfg.response_dofs[j];
        const ModelBundle model = load_model(out_dir, checkpoint_stem(dof));
        ScheduleMeta meta;
        const ConformalSchedule sched = load_schedule(out_dir, schedule_stem(dof), &meta);
        const PerformanceSpec spec = cfg.reliability.make(j);

        const ReliabilityCurve curve =
            surrogate_reliability(model, sched, exc, spec, meta.n1, meta.n2, meta.predict_seed);
        Eigen::VectorXd pf_true;
        if (cfg.reliability.with_truth)
            pf_true = pof_from_trajectories(truth_sets[j].responses, exc.grid, spec);

        std::string csv = cfg.reliability.with_truth
                              ? "t,pf_mean,pf_lower,pf_upper,bounds_usable,pf_true\n"
                              : "t,pf_mean,pf_lower,pf_upper,bounds_usable\n";
        for (std::size_t k = 0; k < curve.grid.size(); ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            csv += format_double(curve.grid[k]);
            csv += ',';
            csv += format_double(curve.pf_mean[ki]);
            csv += ',';
            csv += format_double(curve.pf_lower[ki]);
            csv += ',';
            csv += format_double(curve.pf_upper[ki]);
            csv += ',';
            csv += curve.bounds_usable[k] ? '1' : '0';
            if (cfg.reliability.with_truth) {
                csv += ',';
                csv += format_double(pf_true[ki]);
            }
            csv += '\n';
        }
        write_text_file(join(out_dir, "reliability_dof" + std::to_string(dof) + ".csv"), csv);

        const Eigen::Index last = static_cast<Eigen::Index>(curve.grid.size()) - 1;
        json rj;
        rj["response_dof"] = dof;
        rj["u_crit"] = spec.u_crit;
        rj["sense"] = to_string(spec.sense);
        rj["n_inputs"] = cfg.reliability.n_inputs;
        rj["n1"] = meta.n1;
        rj["n2"] = meta.n2;
        rj["pf_end_mean"] = curve.pf_mean[last];
        rj["pf_end_lower"] = curve.pf_lower[last];
        rj["pf_end_upper"] = curve.pf_upper[last];
        rj["bounds_fully_usable"] = curve.bounds_usable.back() != 0;
        if (cfg.reliability.with_truth) rj["pf_end_true"] = pf_true[last];
        write_text_file(join(out_dir, "reliability_dof" + std::to_string(dof) + ".json"),
                        rj.dump(2) + "\n");

        if (curves_out) curves_out->push_back(curve);
    }

    StageResult result;
    result.artifacts = names;
    result.wall_ms = timer.elapsed_ms();
    write_stage_manifest(cfg, out_dir, "reliability", result);
    return result;
}

StageResult run_energy_report(const ExperimentConfig& cfg, const std::string& out_dir, bool force,
                              EnergyCurve* curve_out) {
    cfg.validate();
    StageTimer timer;
    check_or_write_config(cfg, out_dir, force);

    const std::vector<std::string> names = {"energy_report.csv", "energy_report.json"};
    guard_overwrite(out_dir, names, force);

    const EnergyCurve curve = energy_ratio_curve(cfg.energy.n_in, cfg.energy.n_out,
                                                 cfg.energy.t_s, cfg.energy.params,
                                                 cfg.energy.sweep());

    std::string csv = "alpha,e_ann_pj,e_vsn_pj,ratio\n";
    for (const auto& p : curve.points) {
        csv += format_double(p.alpha);
        csv += ',';
        csv += format_double(p.e_ann_pj);
        csv += ',';
        csv += format_double(p.e_vsn_pj);
        csv += ',';
        csv += format_double(p.ratio);
        csv += '\n';
    }
    write_text_file(join(out_dir, "energy_report.csv"), csv);

    json ej;
    ej["n_in"] = cfg.energy.n_in;
    ej["n_out"] = cfg.energy.n_out;
    ej["t_s"] = cfg.energy.t_s;
    ej["e_mac_pj"] = cfg.energy.params.e_mac_pj;
    ej["e_acc_pj"] = cfg.energy.params.e_acc_pj;
    ej["e_rd_pj"] = cfg.energy.params.e_rd_pj;
    ej["e_wr_pj"] = cfg.energy.params.e_wr_pj;
    ej["has_crossover"] = curve.has_crossover;
    ej["alpha_star"] = curve.alpha_star;
    write_text_file(join(out_dir, "energy_report.json"), ej.dump(2) + "\n");

    if (curve_out) *curve_out = curve;
    StageResult result;
    result.artifacts = names;
    result.wall_ms = timer.elapsed_ms();
    write_stage_manifest(cfg, out_dir, "energy_report", result);
    return result;
}

void run_all(const ExperimentConfig& cfg, const std::string& out_dir, bool force,
             std::size_t n_threads) {
    run_simulate(cfg, out_dir, force, n_threads);
    run_train(cfg, out_dir, force);
    run_calibrate(cfg, out_dir, force);
    run_evaluate(cfg, out_dir, force);
    if (!cfg.reliability.u_crit.empty()) run_reliability(cfg, out_dir, force, n_threads);
    run_energy_report(cfg, out_dir, force);
}

}  // namespace spikeop
