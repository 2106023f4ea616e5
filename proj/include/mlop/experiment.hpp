#pragma once

#include "mlop/config.hpp"
#include "mlop/datasets.hpp"
#include "mlop/metrics.hpp"
#include "mlop/solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mlop {

struct MetricToggles {
  bool errors = true;       // nearest-reference statistics, relative error
  bool snr = false;         // background SNR, image data only
  bool pca = false;         // local-PCA angle error of Q_final
  double pca_radius = 0.0;  // 0 selects 4 x fill distance of Q0
};

// One experiment: where the data comes from, how to reconstruct, what to
// measure and where to write. Serialised as a single JSON object with the
// keys name, dataset, solver, metrics, output_dir, dataset_dir.
struct ExperimentConfig {
  std::string name = "run";
  DatasetSpec dataset;
  SolverConfig solver;
  MetricToggles metrics;
  std::filesystem::path output_dir;   // empty: <output root>/<name>
  std::filesystem::path dataset_dir;  // empty: generate from `dataset`
};

void to_json(nlohmann::json& j, const MetricToggles& m);
void from_json(const nlohmann::json& j, MetricToggles& m);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// $MLOP_OUTPUT_ROOT when set and non-empty, otherwise "runs".
std::filesystem::path default_output_root();

// Input cloud plus whatever the metrics need, as stored by write_dataset.
struct DatasetFiles {
  PointCloud points;
  std::optional<PointCloud> reference;
  std::optional<Matrix> reference_masks;
};

DatasetFiles to_files(const Dataset& d);

// P.csv, clean.csv, reference.csv and spec.json; masks.csv and
// reference_masks.csv for images; embedding.csv for O(2).
void write_dataset(const Dataset& d, const std::filesystem::path& dir);
// Reads P.csv and, when present, reference.csv and reference_masks.csv.
DatasetFiles read_dataset(const std::filesystem::path& dir);

// Metrics of a finished reconstruction. Fields whose inputs are missing
// (no reference, no masks) keep their defaults.
ExperimentReport score_run(const std::string& experiment, const PointCloud& q0, const PointCloud& q_final,
                           const DatasetFiles& data, const SketchMatrix& s, const MetricToggles& metrics);

struct RunOutput {
  RunResult result;
  ExperimentReport report;
};

RunOutput run_experiment(const ExperimentConfig& config, const DatasetFiles& data);

// Q_final.csv, Q0.csv, trace.csv, report.json and sketch.csv. With a
// reference also errors.csv (per point: initial and final distance to the
// nearest reference point).
void write_run(const RunOutput& out, const std::filesystem::path& dir,
               const std::optional<PointCloud>& reference = std::nullopt);

// Recomputes report.json for an existing run directory from its Q0.csv,
// Q_final.csv and sketch.csv against the dataset in data_dir. Solver fields
// (iterations, convergence, supports, config) are carried over from the old
// report when one exists.
ExperimentReport rescore(const std::filesystem::path& run_dir, const std::filesystem::path& data_dir,
                         const MetricToggles& metrics);

// ---------------------------------------------------------------------------
// Canned experiments with fixed sizes and seeds.

struct ReproduceOptions {
  std::filesystem::path output_dir;  // empty: nothing is written
  unsigned threads = 1;
  std::uint64_t seed = 1;
  Index pca_bootstraps = 10;
};

struct SummaryRow {
  std::string experiment;
  double noise = 0.0;
  ExperimentReport report;
};

struct PcaRow {
  double noise = 0.0;
  std::string data;  // clean | noisy | denoised
  double median_deg = 0.0;
  std::vector<double> per_bootstrap;
};

const std::vector<std::string>& reproduce_names();

// Dataset, solver and metric settings of a named experiment (o2, cone,
// cylinder2d, cylinder6d, ellipses) at their reference sizes.
ExperimentConfig canned_config(const std::string& name, const ReproduceOptions& options);

// Runs o2, cone, cylinder2d, cylinder6d, ellipses (one row) or noise-sweep
// (one row per noise level 0, 0.1, 0.2, 0.5).
std::vector<SummaryRow> reproduce_runs(const std::string& name, const ReproduceOptions& options);

// Local-PCA benchmark on the 2-D cylinder: for each noise level and
// bootstrap, 160 clean points sampled at random, 160 noisy points sampled at
// random, and 160 points reconstructed from the 816 noisy points; rows carry
// the median over bootstraps of the per-set median angle error.
std::vector<PcaRow> pca_benchmark(const ReproduceOptions& options, const std::vector<double>& noises = {0.1, 0.2});

// Dispatches on the name and writes summary.csv under options.output_dir.
void reproduce(const std::string& name, const ReproduceOptions& options);

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
void write_pca_csv(const std::filesystem::path& path, const std::vector<PcaRow>& rows);

}  // namespace mlop
