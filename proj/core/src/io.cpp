#include "spikeop/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "spikeop/errors.hpp"

namespace spikeop {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw IoError("parse_double: cannot parse '" + s + "'");
    return v;
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("ensure_dir: cannot create " + dir + ": " + ec.message());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + path);
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& m) {
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 20 + header.size() * 20 + 64);
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j) out += ',';
            out += header[j];
        }
        out += '\n';
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
        start = nl + 1;
    }
    return lines;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::string& path, bool expect_header,
                                std::vector<std::string>* header_out) {
    const std::vector<std::string> lines = split_lines(read_text_file(path));
    std::size_t first_row = 0;
    if (expect_header) {
        if (lines.empty()) throw IoError(path + ": missing header row");
        if (header_out) *header_out = split_csv_line(lines[0]);
        first_row = 1;
    }
    const std::size_t n_rows = lines.size() - first_row;
    if (n_rows == 0) return Eigen::MatrixXd(0, 0);

    const std::vector<std::string> first = split_csv_line(lines[first_row]);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(first.size()));
    for (std::size_t i = 0; i < n_rows; ++i) {
        const std::vector<std::string> cells = split_csv_line(lines[first_row + i]);
        if (cells.size() != first.size())
            throw IoError(path + ": ragged row " + std::to_string(i));
        for (std::size_t j = 0; j < cells.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(cells[j]);
    }
    return m;
}

void save_function_set(const std::string& path, const FunctionSampleSet& set) {
    std::vector<std::string> header;
    header.reserve(set.grid.size());
    for (double t : set.grid.times()) header.push_back(format_double(t));
    write_matrix_csv(path, header, set.values);
}

FunctionSampleSet load_function_set(const std::string& path) {
    std::vector<std::string> header;
    FunctionSampleSet set;
    set.values = read_matrix_csv(path, true, &header);
    std::vector<double> times;
    times.reserve(header.size());
    for (const auto& h : header) times.push_back(parse_double(h));
    set.grid = TimeGrid::from_times(std::move(times));
    if (set.values.cols() != static_cast<Eigen::Index>(set.grid.size()))
        throw IoError(path + ": column count does not match header");
    return set;
}

std::string to_string(BranchActivation a) {
    return a == BranchActivation::Vsn ? "vsn" : "relu";
}

BranchActivation branch_activation_from_string(const std::string& s) {
    if (s == "vsn") return BranchActivation::Vsn;
    if (s == "relu") return BranchActivation::Relu;
    throw ConfigError("unknown branch activation '" + s + "'");
}

std::string to_string(PhiKind k) { return k == PhiKind::Relu ? "relu" : "identity"; }

PhiKind phi_kind_from_string(const std::string& s) {
    if (s == "relu") return PhiKind::Relu;
    if (s == "identity") return PhiKind::Identity;
    throw ConfigError("unknown emission function '" + s + "'");
}

std::string to_string(ExceedanceSense s) {
    return s == ExceedanceSense::Above ? "above" : "below";
}

ExceedanceSense exceedance_sense_from_string(const std::string& s) {
    if (s == "above") return ExceedanceSense::Above;
    if (s == "below") return ExceedanceSense::Below;
    throw ConfigError("unknown exceedance sense '" + s + "'");
}

std::string to_string(ForcingConvention f) {
    return f == ForcingConvention::Direct ? "direct" : "base_acceleration";
}

ForcingConvention forcing_convention_from_string(const std::string& s) {
    if (s == "direct") return ForcingConvention::Direct;
    if (s == "base_acceleration") return ForcingConvention::BaseAcceleration;
    throw ConfigError("unknown forcing convention '" + s + "'");
}

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

json parse_opaque(const std::string& text) {
    if (text.empty()) return nullptr;
    return json::parse(text);
}

void require_little_endian() {
    const std::uint16_t probe = 1;
    std::uint8_t byte;
    std::memcpy(&byte, &probe, 1);
    if (byte != 1) throw IoError("parameter files require a little-endian host");
}

}  // namespace

namespace {

void save_dataset_impl(const std::string& dir, const std::string& stem, const OperatorDataset& ds,
                       const DatasetManifestInfo& info, const std::string& inputs_name,
                       bool write_inputs) {
    ds.validate();
    ensure_dir(dir);
    const std::string responses_name = stem + "_responses.csv";

    if (write_inputs) save_function_set(join_path(dir, inputs_name), ds.inputs);
    std::vector<std::string> header;
    header.reserve(ds.grid().size());
    for (double t : ds.grid().times()) header.push_back(format_double(t));
    write_matrix_csv(join_path(dir, responses_name), header, ds.responses);

    json manifest;
    manifest["format"] = "dataset-v1";
    manifest["role"] = ds.role;
    manifest["response_dof"] = ds.response_dof;
    manifest["n_samples"] = ds.n_samples();
    manifest["n_times"] = ds.n_times();
    manifest["grid"] = {{"t_start", ds.grid().t_start()},
                        {"t_end", ds.grid().t_end()},
                        {"n_points", ds.grid().size()}};
    manifest["inputs_file"] = inputs_name;
    manifest["responses_file"] = responses_name;
    manifest["solver_dt"] = info.solver_dt;
    manifest["excitation_seed"] = info.excitation_seed;
    manifest["system"] = parse_opaque(info.system_json);
    manifest["excitation"] = parse_opaque(info.excitation_json);
    write_text_file(join_path(dir, stem + "_manifest.json"), manifest.dump(2) + "\n");
}

}  // namespace

void save_dataset(const std::string& dir, const std::string& stem, const OperatorDataset& ds,
                  const DatasetManifestInfo& info) {
    save_dataset_impl(dir, stem, ds, info, stem + "_inputs.csv", true);
}

void save_dataset(const std::string& dir, const std::string& stem, const OperatorDataset& ds,
                  const DatasetManifestInfo& info, const std::string& existing_inputs_file) {
    if (!file_exists(join_path(dir, existing_inputs_file)))
        throw IoError("save_dataset: shared inputs file " + existing_inputs_file +
                      " does not exist");
    save_dataset_impl(dir, stem, ds, info, existing_inputs_file, false);
}

OperatorDataset load_dataset(const std::string& dir, const std::string& stem,
                             DatasetManifestInfo* info) {
    const json manifest = json::parse(read_text_file(join_path(dir, stem + "_manifest.json")));
    if (manifest.at("format").get<std::string>() != "dataset-v1")
        throw IoError(stem + ": unknown dataset format");

    OperatorDataset ds;
    ds.role = manifest.at("role").get<std::string>();
    ds.response_dof = manifest.at("response_dof").get<std::size_t>();
    ds.inputs = load_function_set(
        join_path(dir, manifest.at("inputs_file").get<std::string>()));
    ds.responses =
        read_matrix_csv(join_path(dir, manifest.at("responses_file").get<std::string>()), true);
    if (ds.n_samples() != manifest.at("n_samples").get<std::size_t>() ||
        ds.n_times() != manifest.at("n_times").get<std::size_t>())
        throw IoError(stem + ": matrix shapes disagree with manifest");
    ds.validate();

    if (info) {
        info->role = ds.role;
        info->response_dof = ds.response_dof;
        info->excitation_seed = manifest.at("excitation_seed").get<std::uint64_t>();
        info->solver_dt = manifest.at("solver_dt").get<double>();
        const json& sys = manifest.at("system");
        info->system_json = sys.is_null() ? std::string() : sys.dump();
        const json& exc = manifest.at("excitation");
        info->excitation_json = exc.is_null() ? std::string() : exc.dump();
    }
    return ds;
}

namespace {

json segments_to_json(const std::vector<SegmentInfo>& segs) {
    json arr = json::array();
    for (const auto& s : segs)
        arr.push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows},
                       {"cols", s.cols}});
    return arr;
}

json arch_to_json(const OperatorArchitecture& arch) {
    json j;
    j["n_sensors"] = arch.n_sensors;
    j["branch_widths"] = arch.branch_widths;
    j["trunk_widths"] = arch.trunk_widths;
    j["act_after"] = arch.act_after;
    j["latent"] = arch.latent;
    j["branch_activation"] = to_string(arch.branch_activation);
    j["t_s"] = arch.t_s;
    j["surrogate_slope"] = arch.surrogate_slope;
    j["emission"] = to_string(arch.phi);
    return j;
}

OperatorArchitecture arch_from_json(const json& j) {
    OperatorArchitecture arch;
    arch.n_sensors = j.at("n_sensors").get<std::size_t>();
    arch.branch_widths = j.at("branch_widths").get<std::vector<std::size_t>>();
    arch.trunk_widths = j.at("trunk_widths").get<std::vector<std::size_t>>();
    arch.act_after = j.at("act_after").get<std::vector<std::size_t>>();
    arch.latent = j.at("latent").get<std::size_t>();
    arch.branch_activation = branch_activation_from_string(j.at("branch_activation").get<std::string>());
    arch.t_s = j.at("t_s").get<std::size_t>();
    arch.surrogate_slope = j.at("surrogate_slope").get<double>();
    arch.phi = phi_kind_from_string(j.at("emission").get<std::string>());
    arch.validate();
    return arch;
}

}  // namespace

void save_model(const std::string& dir, const std::string& stem, const ModelBundle& model) {
    require_little_endian();
    ensure_dir(dir);
    if (model.phi.size() != static_cast<Eigen::Index>(model.layout.total()))
        throw ShapeError("save_model: parameter vector does not match layout");

    const std::string bin_name = stem + ".bin";
    {
        std::ofstream out(join_path(dir, bin_name), std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + bin_name + " for writing");
        out.write(reinterpret_cast<const char*>(model.phi.data()),
                  static_cast<std::streamsize>(sizeof(double) * model.phi.size()));
        if (!out) throw IoError("write failed for " + bin_name);
    }

    json j;
    j["format"] = "checkpoint-v1";
    j["encoding"] = "float64_le";
    j["block_layout"] = "mu|delta|vsn";
    j["params_file"] = bin_name;
    j["n_values"] = model.layout.total();
    j["n_var"] = model.layout.n_var;
    j["n_vsn"] = model.layout.n_vsn;
    j["arch"] = arch_to_json(model.arch);
    j["standardization"] = {{"input_scale", model.stdz.input_scale},
                            {"target_mean", model.stdz.target_mean},
                            {"target_scale", model.stdz.target_scale},
                            {"t_lo", model.stdz.t_lo},
                            {"t_hi", model.stdz.t_hi}};
    j["var_segments"] = segments_to_json(model.layout.var_tensors);
    j["vsn_segments"] = segments_to_json(model.layout.vsn_tensors);
    write_text_file(join_path(dir, stem + ".json"), j.dump(2) + "\n");
}

ModelBundle load_model(const std::string& dir, const std::string& stem) {
    require_little_endian();
    const json j = json::parse(read_text_file(join_path(dir, stem + ".json")));
    if (j.at("format").get<std::string>() != "checkpoint-v1")
        throw IoError(stem + ": unknown checkpoint format");
    if (j.at("encoding").get<std::string>() != "float64_le")
        throw IoError(stem + ": unknown parameter encoding");

    ModelBundle model;
    model.arch = arch_from_json(j.at("arch"));
    model.layout = ParamLayout::build(model.arch);
    const auto n_values = j.at("n_values").get<std::size_t>();
    if (n_values != model.layout.total())
        throw IoError(stem + ": parameter count disagrees with architecture");

    const json& s = j.at("standardization");
    model.stdz.input_scale = s.at("input_scale").get<double>();
    model.stdz.target_mean = s.at("target_mean").get<double>();
    model.stdz.target_scale = s.at("target_scale").get<double>();
    model.stdz.t_lo = s.at("t_lo").get<double>();
    model.stdz.t_hi = s.at("t_hi").get<double>();

    const std::string bin_path = join_path(dir, j.at("params_file").get<std::string>());
    std::ifstream in(bin_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + bin_path);
    model.phi.resize(static_cast<Eigen::Index>(n_values));
    in.read(reinterpret_cast<char*>(model.phi.data()),
            static_cast<std::streamsize>(sizeof(double) * n_values));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * n_values))
        throw IoError(bin_path + ": truncated parameter file");
    return model;
}

void save_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
    std::string out = "iteration,loss,best\n";
    for (const auto& row : log) {
        out += std::to_string(row.iteration);
        out += ',';
        out += format_double(row.loss);
        out += ',';
        out += format_double(row.best);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<TrainLogRow> load_train_log(const std::string& path) {
    const std::vector<std::string> lines = split_lines(read_text_file(path));
    if (lines.empty() || lines[0] != "iteration,loss,best")
        throw IoError(path + ": unexpected training-log header");
    std::vector<TrainLogRow> log;
    log.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != 3) throw IoError(path + ": ragged row " + std::to_string(i));
        TrainLogRow row;
        row.iteration = static_cast<std::size_t>(std::stoull(cells[0]));
        row.loss = parse_double(cells[1]);
        row.best = parse_double(cells[2]);
        log.push_back(row);
    }
    return log;
}

void save_schedule(const std::string& dir, const std::string& stem,
                   const ConformalSchedule& sched, const ScheduleMeta& meta) {
    ensure_dir(dir);
    std::string csv = "t,q,n_cal,flagged_infinite\n";
    for (std::size_t k = 0; k < sched.times.size(); ++k) {
        csv += format_double(sched.times[k]);
        csv += ',';
        csv += format_double(sched.q[k]);
        csv += ',';
        csv += std::to_string(sched.n_cal[k]);
        csv += ',';
        csv += sched.flagged_infinite[k] ? '1' : '0';
        csv += '\n';
    }
    const std::string csv_name = stem + ".csv";
    write_text_file(join_path(dir, csv_name), csv);

    json j;
    j["format"] = "schedule-v1";
    j["alpha"] = sched.alpha;
    j["z"] = sched.z;
    j["use_z"] = sched.use_z;
    j["n1"] = meta.n1;
    j["n2"] = meta.n2;
    j["predict_seed"] = meta.predict_seed;
    j["csv_file"] = csv_name;
    write_text_file(join_path(dir, stem + ".json"), j.dump(2) + "\n");
}

ConformalSchedule load_schedule(const std::string& dir, const std::string& stem,
                                ScheduleMeta* meta) {
    const json j = json::parse(read_text_file(join_path(dir, stem + ".json")));
    if (j.at("format").get<std::string>() != "schedule-v1")
        throw IoError(stem + ": unknown schedule format");

    ConformalSchedule sched;
    sched.alpha = j.at("alpha").get<double>();
    sched.z = j.at("z").get<double>();
    sched.use_z = j.at("use_z").get<bool>();

    const std::string csv_path = join_path(dir, j.at("csv_file").get<std::string>());
    const std::vector<std::string> lines = split_lines(read_text_file(csv_path));
    if (lines.empty() || lines[0] != "t,q,n_cal,flagged_infinite")
        throw IoError(csv_path + ": unexpected schedule header");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != 4) throw IoError(csv_path + ": ragged row " + std::to_string(i));
        sched.times.push_back(parse_double(cells[0]));
        sched.q.push_back(parse_double(cells[1]));
        sched.n_cal.push_back(static_cast<std::size_t>(std::stoull(cells[2])));
        sched.flagged_infinite.push_back(cells[3] == "1" ? 1 : 0);
    }
    if (meta) {
        meta->n1 = j.at("n1").get<std::size_t>();
        meta->n2 = j.at("n2").get<std::size_t>();
        meta->predict_seed = j.at("predict_seed").get<std::uint64_t>();
    }
    return sched;
}

}  // namespace spikeop
