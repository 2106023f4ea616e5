#include "mlop/experiment.hpp"

#include "mlop/errors.hpp"
#include "mlop/io.hpp"
#include "mlop/neighborhood.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mlop {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const MetricToggles& m) {
  j = json{{"errors", m.errors}, {"snr", m.snr}, {"pca", m.pca}, {"pca_radius", m.pca_radius}};
}

void from_json(const json& j, MetricToggles& m) {
  static const std::set<std::string> known{"errors", "snr", "pca", "pca_radius"};
  if (!j.is_object()) throw ConfigError("metrics must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown metrics key '" + key + "'");
  }
  try {
    m = MetricToggles{};
    if (j.contains("errors")) m.errors = j.at("errors").get<bool>();
    if (j.contains("snr")) m.snr = j.at("snr").get<bool>();
    if (j.contains("pca")) m.pca = j.at("pca").get<bool>();
    if (j.contains("pca_radius")) m.pca_radius = j.at("pca_radius").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("metrics: ") + e.what());
  }
  if (m.pca_radius < 0.0) throw ConfigError("pca_radius must be non-negative");
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"name", c.name},
           {"dataset", c.dataset},
           {"solver", c.solver},
           {"metrics", c.metrics},
           {"output_dir", c.output_dir.string()},
           {"dataset_dir", c.dataset_dir.string()}};
}

void from_json(const json& j, ExperimentConfig& c) {
  static const std::set<std::string> known{"name", "dataset", "solver", "metrics", "output_dir", "dataset_dir"};
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown experiment config key '" + key + "'");
  }
  c = ExperimentConfig{};
  try {
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("dataset_dir")) c.dataset_dir = j.at("dataset_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<DatasetSpec>();
  if (j.contains("solver")) c.solver = j.at("solver").get<SolverConfig>();
  if (j.contains("metrics")) c.metrics = j.at("metrics").get<MetricToggles>();
  if (c.name.empty()) throw ConfigError("experiment name must not be empty");
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j.get<ExperimentConfig>();
}

fs::path default_output_root() {
  const char* env = std::getenv("MLOP_OUTPUT_ROOT");
  if (env != nullptr && *env != '\0') return fs::path(env);
  return fs::path("runs");
}

// ---------------------------------------------------------------------------

DatasetFiles to_files(const Dataset& d) { return DatasetFiles{d.points, d.reference, d.reference_masks}; }

void write_dataset(const Dataset& d, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_cloud(d.points, dir / "P.csv");
  save_cloud(d.clean, dir / "clean.csv");
  save_cloud(d.reference, dir / "reference.csv");
  if (d.masks) save_matrix(*d.masks, dir / "masks.csv");
  if (d.reference_masks) save_matrix(*d.reference_masks, dir / "reference_masks.csv");
  if (d.embedding) save_matrix(*d.embedding, dir / "embedding.csv");
  write_text(dir / "spec.json", json(d.spec).dump(2) + "\n");
}

DatasetFiles read_dataset(const fs::path& dir) {
  DatasetFiles out{load_cloud(dir / "P.csv"), std::nullopt, std::nullopt};
  if (fs::exists(dir / "reference.csv")) out.reference = load_cloud(dir / "reference.csv");
  if (fs::exists(dir / "reference_masks.csv")) out.reference_masks = load_matrix(dir / "reference_masks.csv");
  if (out.reference && out.reference->dim() != out.points.dim()) {
    throw ConfigError("reference.csv and P.csv differ in dimension");
  }
  return out;
}

ExperimentReport score_run(const std::string& experiment, const PointCloud& q0, const PointCloud& q_final,
                           const DatasetFiles& data, const SketchMatrix& s, const MetricToggles& metrics) {
  ExperimentReport r;
  r.experiment = experiment;
  r.sketch_dim = s.sketch_dim();
  if (q0.size() >= 2) r.fill_distance_initial = fill_distance(q0, s);
  if (q_final.size() >= 2) r.fill_distance_final = fill_distance(q_final, s);
  if (!data.reference) return r;
  const PointCloud& ref = *data.reference;

  if (metrics.errors) {
    const double diameter = sketched_diameter(ref, s);
    if (!(diameter > 0.0)) throw ConfigError("reference cloud has zero diameter");
    const NearestErrors e0 = nearest_reference_errors(q0, ref, s);
    const NearestErrors e1 = nearest_reference_errors(q_final, ref, s);
    r.relative_error_initial = e0.mean / diameter;
    r.relative_error = e1.mean / diameter;
    r.rmse_initial = e0.rmse;
    r.rmse = e1.rmse;
    r.max_error_initial = e0.max;
    r.max_error = e1.max;
    r.max_rel_error_initial = e0.max / diameter;
    r.max_rel_error = e1.max / diameter;
    r.variance_initial = e0.variance;
    r.variance = e1.variance;
  }
  if (metrics.snr) {
    if (!data.reference_masks) throw ConfigError("SNR requested but the dataset has no reference masks");
    r.snr_initial = background_snr(q0.points(), nearest_masks(q0, ref, *data.reference_masks, s)).median;
    r.snr_final = background_snr(q_final.points(), nearest_masks(q_final, ref, *data.reference_masks, s)).median;
  }
  if (metrics.pca) {
    const double h = metrics.pca_radius > 0.0 ? metrics.pca_radius : 4.0 * fill_distance(q0, s);
    r.pca_angle_deg = local_pca_angle_error(q_final, ref, h, s).median_deg;
  }
  return r;
}

RunOutput run_experiment(const ExperimentConfig& config, const DatasetFiles& data) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result = run(data.points, config.solver);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  ExperimentReport report = score_run(config.name, result.q0, result.q_final, data, result.sketch, config.metrics);
  report.runtime_ms = ms;
  report.iterations_run = result.iterations;
  report.converged = result.converged;
  report.supports = json(result.supports);
  report.config = json(config);
  return RunOutput{std::move(result), std::move(report)};
}

namespace {

void write_errors_csv(const fs::path& path, const NearestErrors& e0, const NearestErrors& e1) {
  std::ostringstream out;
  out << "index,initial,final\n";
  char buf[96];
  for (std::size_t i = 0; i < e0.distances.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, e0.distances[i], e1.distances[i]);
    out << buf;
  }
  write_text(path, out.str());
}

}  // namespace

void write_run(const RunOutput& out, const fs::path& dir, const std::optional<PointCloud>& reference) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_cloud(out.result.q_final, dir / "Q_final.csv");
  save_cloud(out.result.q0, dir / "Q0.csv");
  save_sketch(out.result.sketch, dir / "sketch.csv");
  std::ostringstream trace;
  write_trace_csv(trace, out.result.trace);
  write_text(dir / "trace.csv", trace.str());
  write_text(dir / "report.json", json(out.report).dump(2) + "\n");
  if (reference) {
    write_errors_csv(dir / "errors.csv", nearest_reference_errors(out.result.q0, *reference, out.result.sketch),
                     nearest_reference_errors(out.result.q_final, *reference, out.result.sketch));
  }
}

ExperimentReport rescore(const fs::path& run_dir, const fs::path& data_dir, const MetricToggles& metrics) {
  const DatasetFiles data = read_dataset(data_dir);
  const PointCloud q0 = load_cloud(run_dir / "Q0.csv");
  const PointCloud q_final = load_cloud(run_dir / "Q_final.csv");
  const SketchMatrix s = load_sketch(run_dir / "sketch.csv");
  if (s.ambient_dim() != data.points.dim()) throw ConfigError("sketch.csv does not match the dataset dimension");

  std::string experiment = run_dir.filename().string();
  json old;
  if (fs::exists(run_dir / "report.json")) {
    try {
      old = json::parse(read_text(run_dir / "report.json"));
    } catch (const json::parse_error& e) {
      throw ConfigError("report.json: " + std::string(e.what()));
    }
    if (old.contains("experiment")) experiment = old.at("experiment").get<std::string>();
  }
  ExperimentReport r = score_run(experiment, q0, q_final, data, s, metrics);
  if (old.is_object()) {
    r.iterations_run = old.value("iterations_run", Index{0});
    r.converged = old.value("converged", false);
    r.runtime_ms = old.value("runtime_ms", 0.0);
    if (old.contains("supports")) r.supports = old.at("supports");
    if (old.contains("config")) r.config = old.at("config");
  }
  write_text(run_dir / "report.json", json(r).dump(2) + "\n");
  if (data.reference) {
    write_errors_csv(run_dir / "errors.csv", nearest_reference_errors(q0, *data.reference, s),
                     nearest_reference_errors(q_final, *data.reference, s));
  }
  return r;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& reproduce_names() {
  static const std::vector<std::string> names{"o2",         "cone",     "cylinder2d",   "noise-sweep",
                                              "cylinder6d", "ellipses", "pca-benchmark"};
  return names;
}

ExperimentConfig canned_config(const std::string& name, const ReproduceOptions& options) {
  ExperimentConfig c;
  c.name = name;
  c.dataset.seed = options.seed;
  c.solver.seed = options.seed;
  c.solver.threads = options.threads;
  c.solver.max_iters = 500;
  if (name == "o2") {
    c.dataset.kind = DatasetKind::kO2;
    c.dataset.count = 500;
    c.dataset.noise = 0.2;
    c.solver.q_size = 50;
    // Fifty points around one sample.
    c.solver.init = InitMode::kAroundPoint;
    c.solver.init_index = 0;
  } else if (name == "cone") {
    c.dataset.kind = DatasetKind::kConeSegment;
    c.dataset.count = 720;
    c.dataset.noise = 0.2;
    c.solver.q_size = 144;
  } else if (name == "cylinder2d") {
    c.dataset.kind = DatasetKind::kCylinder2d;
    c.dataset.count = 816;
    c.dataset.noise = 0.1;
    c.solver.q_size = 163;
  } else if (name == "cylinder6d") {
    c.dataset.kind = DatasetKind::kCylinder6d;
    c.dataset.count = 1200;
    c.dataset.noise = 0.1;
    // A 4x denser grid is barely finer in six dimensions; the nearest
    // reference point would then dominate every error.
    c.dataset.reference_density = 32.0;
    c.solver.q_size = 460;
    c.solver.max_iters = 300;
  } else if (name == "ellipses") {
    c.dataset.kind = DatasetKind::kEllipseImages;
    c.dataset.count = 900;
    c.dataset.noise = 0.05;
    c.solver.q_size = 180;
    c.solver.max_iters = 1000;
    c.metrics.snr = true;
  } else {
    throw ConfigError("no canned configuration named '" + name + "'");
  }
  return c;
}

namespace {

SummaryRow run_one(const ExperimentConfig& config, const ReproduceOptions& options, const std::string& label) {
  const Dataset d = generate(config.dataset);
  const DatasetFiles data = to_files(d);
  RunOutput out = run_experiment(config, data);
  if (!options.output_dir.empty()) {
    const fs::path dir = options.output_dir / label;
    write_dataset(d, dir / "data");
    write_run(out, dir, d.reference);
  }
  return SummaryRow{config.name, config.dataset.noise, std::move(out.report)};
}

PointCloud random_subset(const PointCloud& x, Index k, Rng& rng) {
  const auto picked = rng.sample_without_replacement(static_cast<std::size_t>(x.size()), static_cast<std::size_t>(k));
  const std::vector<Index> idx(picked.begin(), picked.end());
  return x.subset(idx);
}

std::string noise_label(double noise) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sigma_%g", noise);
  return buf;
}

}  // namespace

std::vector<SummaryRow> reproduce_runs(const std::string& name, const ReproduceOptions& options) {
  if (name == "noise-sweep") {
    std::vector<SummaryRow> rows;
    for (double noise : {0.0, 0.1, 0.2, 0.5}) {
      ExperimentConfig c = canned_config("cylinder2d", options);
      c.name = "noise-sweep";
      c.dataset.noise = noise;
      rows.push_back(run_one(c, options, noise_label(noise)));
    }
    return rows;
  }
  return {run_one(canned_config(name, options), options, name)};
}

std::vector<PcaRow> pca_benchmark(const ReproduceOptions& options, const std::vector<double>& noises) {
  constexpr Index kSetSize = 160;
  if (options.pca_bootstraps < 1) throw ConfigError("pca_bootstraps must be >= 1");
  std::vector<PcaRow> rows;
  for (double noise : noises) {
    PcaRow clean{noise, "clean", 0.0, {}};
    PcaRow noisy{noise, "noisy", 0.0, {}};
    PcaRow denoised{noise, "denoised", 0.0, {}};
    for (Index b = 0; b < options.pca_bootstraps; ++b) {
      const std::uint64_t seed = derive_seed(options.seed + static_cast<std::uint64_t>(b), seed_tag::kBootstrap);
      ExperimentConfig c = canned_config("cylinder2d", options);
      c.dataset.noise = noise;
      c.dataset.seed = seed;
      c.solver.seed = seed;
      c.solver.q_size = kSetSize;
      const Dataset d = generate(c.dataset);
      const SketchMatrix s = sketch_for_run(d.points, c.solver);

      Rng pick(seed);
      const PointCloud clean_set = random_subset(d.clean, kSetSize, pick);
      const PointCloud noisy_set = random_subset(d.points, kSetSize, pick);
      const RunResult r = run(d.points, c.solver, s);

      // One radius for all three sets of a bootstrap, tied to the spacing of
      // a random sample of this size.
      const double h = 4.0 * fill_distance(clean_set, s);
      clean.per_bootstrap.push_back(local_pca_angle_error(clean_set, d.reference, h, s).median_deg);
      noisy.per_bootstrap.push_back(local_pca_angle_error(noisy_set, d.reference, h, s).median_deg);
      denoised.per_bootstrap.push_back(local_pca_angle_error(r.q_final, d.reference, h, s).median_deg);
    }
    for (PcaRow* row : {&clean, &noisy, &denoised}) {
      row->median_deg = median(row->per_bootstrap);
      rows.push_back(std::move(*row));
    }
  }
  return rows;
}

void write_summary_csv(const fs::path& path, const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "experiment,noise,relative_error_initial,relative_error,rmse_initial,rmse,max_rel_error_initial,"
         "max_rel_error,variance_initial,variance,fill_distance_initial,fill_distance_final,snr_initial,snr_final,"
         "iterations_run,converged,runtime_ms\n";
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", *v);
    return std::string(buf);
  };
  for (const auto& row : rows) {
    const ExperimentReport& r = row.report;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,",
                  row.experiment.c_str(), row.noise, r.relative_error_initial, r.relative_error, r.rmse_initial,
                  r.rmse, r.max_rel_error_initial, r.max_rel_error, r.variance_initial, r.variance,
                  r.fill_distance_initial, r.fill_distance_final);
    out << buf << opt(r.snr_initial) << ',' << opt(r.snr_final) << ',' << r.iterations_run << ','
        << (r.converged ? "true" : "false") << ',' << r.runtime_ms << '\n';
  }
  write_text(path, out.str());
}

void write_pca_csv(const fs::path& path, const std::vector<PcaRow>& rows) {
  std::ostringstream out;
  out << "noise,data,median_angle_deg";
  const std::size_t boots = rows.empty() ? 0 : rows.front().per_bootstrap.size();
  for (std::size_t b = 0; b < boots; ++b) out << ",bootstrap_" << b;
  out << '\n';
  for (const auto& row : rows) {
    out << row.noise << ',' << row.data << ',' << row.median_deg;
    for (double v : row.per_bootstrap) out << ',' << v;
    out << '\n';
  }
  write_text(path, out.str());
}

void reproduce(const std::string& name, const ReproduceOptions& options) {
  if (options.output_dir.empty()) throw ConfigError("reproduce needs an output directory");
  std::error_code ec;
  fs::create_directories(options.output_dir, ec);
  if (ec) throw IoError("cannot create " + options.output_dir.string() + ": " + ec.message());
  if (name == "pca-benchmark") {
    write_pca_csv(options.output_dir / "summary.csv", pca_benchmark(options));
    return;
  }
  write_summary_csv(options.output_dir / "summary.csv", reproduce_runs(name, options));
}

}  // namespace mlop
