#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "spikeop/conformal.hpp"
#include "spikeop/dynamics.hpp"
#include "spikeop/opnet.hpp"
#include "spikeop/reliability.hpp"

namespace spikeop {

// Shortest decimal form that parses back to the same bits (%.17g).
std::string format_double(double v);
double parse_double(const std::string& s);

bool file_exists(const std::string& path);
void ensure_dir(const std::string& dir);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Comma-separated, '\n' line endings, every value via format_double; an
// empty header writes no header row. Reruns produce identical bytes.
void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path, bool expect_header,
                                std::vector<std::string>* header_out = nullptr);

// CSV whose header row holds the grid times and whose rows are samples.
void save_function_set(const std::string& path, const FunctionSampleSet& set);
FunctionSampleSet load_function_set(const std::string& path);

std::string to_string(BranchActivation a);
BranchActivation branch_activation_from_string(const std::string& s);
std::string to_string(PhiKind k);
PhiKind phi_kind_from_string(const std::string& s);
std::string to_string(ExceedanceSense s);
ExceedanceSense exceedance_sense_from_string(const std::string& s);
std::string to_string(ForcingConvention f);
ForcingConvention forcing_convention_from_string(const std::string& s);

// Provenance stored next to a dataset. The system/excitation descriptions
// are opaque JSON texts supplied by the caller and embedded verbatim.
struct DatasetManifestInfo {
    std::string role;
    std::size_t response_dof = 0;
    std::string system_json;
    std::string excitation_json;
    std::uint64_t excitation_seed = 0;
    double solver_dt = 0.0;
};

// Writes <stem>_manifest.json, <stem>_inputs.csv, <stem>_responses.csv.
void save_dataset(const std::string& dir, const std::string& stem, const OperatorDataset& ds,
                  const DatasetManifestInfo& info);

// Same, but the manifest references an inputs CSV already present in dir
// (datasets for several dofs share one excitation file).
void save_dataset(const std::string& dir, const std::string& stem, const OperatorDataset& ds,
                  const DatasetManifestInfo& info, const std::string& existing_inputs_file);
OperatorDataset load_dataset(const std::string& dir, const std::string& stem,
                             DatasetManifestInfo* info = nullptr);

// Writes <stem>.json (architecture, standardization, segment table) and
// <stem>.bin (the flat parameter vector as little-endian 64-bit reals in
// mu | delta | vsn order).
void save_model(const std::string& dir, const std::string& stem, const ModelBundle& model);
ModelBundle load_model(const std::string& dir, const std::string& stem);

void save_train_log(const std::string& path, const std::vector<TrainLogRow>& log);
std::vector<TrainLogRow> load_train_log(const std::string& path);

// Prediction settings the schedule was calibrated with; deployment must
// reuse them for the scores to stay exchangeable.
struct ScheduleMeta {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::uint64_t predict_seed = 0;
};

// Writes <stem>.csv (t, q, n_cal, flagged_infinite) and <stem>.json.
void save_schedule(const std::string& dir, const std::string& stem,
                   const ConformalSchedule& sched, const ScheduleMeta& meta);
ConformalSchedule load_schedule(const std::string& dir, const std::string& stem,
                                ScheduleMeta* meta = nullptr);

}  // namespace spikeop
