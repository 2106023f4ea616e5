// Command-line front end: gen, run, reproduce, metrics.
//
// Exit codes: 0 success (also when max_iters was reached; report.json then
// carries max_iters_reached = true), 2 configuration or usage error,
// 3 numerical abort, 4 I/O error.

#include "mlop/datasets.hpp"
#include "mlop/errors.hpp"
#include "mlop/experiment.hpp"
#include "mlop/io.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct GenArgs {
  std::string spec_file;
  std::string kind;
  std::optional<mlop::Index> count;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  std::optional<mlop::Index> ambient_dim;
  std::optional<double> reference_density;
  std::string out;
};

struct RunArgs {
  std::string config_file;
  std::string data_dir;
  std::string out;
  std::string name;
  std::optional<mlop::Index> max_iters;
  std::optional<mlop::Index> q_size;
  std::optional<mlop::Index> sketch_dim;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool snr = false;
  bool pca = false;
};

struct ReproduceArgs {
  std::string name;
  std::string out;
  std::uint64_t seed = 1;
  mlop::Index bootstraps = 10;
};

struct MetricsArgs {
  std::string run_dir;
  std::string data_dir;
  bool no_errors = false;
  bool snr = false;
  bool pca = false;
  double pca_radius = 0.0;
};

int cmd_gen(const GenArgs& a) {
  mlop::DatasetSpec spec;
  if (!a.spec_file.empty()) {
    const auto j = nlohmann::json::parse(mlop::read_text(a.spec_file), nullptr, false);
    if (j.is_discarded()) throw mlop::ConfigError(a.spec_file + ": not valid JSON");
    spec = j.get<mlop::DatasetSpec>();
  }
  if (!a.kind.empty()) spec.kind = mlop::parse_kind(a.kind);
  if (a.count) spec.count = *a.count;
  if (a.noise) spec.noise = *a.noise;
  if (a.seed) spec.seed = *a.seed;
  if (a.ambient_dim) spec.ambient_dim = *a.ambient_dim;
  if (a.reference_density) spec.reference_density = *a.reference_density;
  spec.validate();
  const fs::path out = a.out.empty() ? mlop::default_output_root() / "data" : fs::path(a.out);
  mlop::write_dataset(mlop::generate(spec), out);
  std::cout << "wrote dataset (" << spec.count << " points) to " << out.string() << "\n";
  return 0;
}

int cmd_run(const RunArgs& a, unsigned threads) {
  mlop::ExperimentConfig config;
  if (!a.config_file.empty()) config = mlop::load_experiment_config(a.config_file);
  if (!a.name.empty()) config.name = a.name;
  if (!a.data_dir.empty()) config.dataset_dir = a.data_dir;
  if (!a.out.empty()) config.output_dir = a.out;
  if (a.max_iters) config.solver.max_iters = *a.max_iters;
  if (a.q_size) config.solver.q_size = *a.q_size;
  if (a.sketch_dim) config.solver.sketch_dim = *a.sketch_dim;
  if (a.seed) config.solver.seed = *a.seed;
  if (a.tol) config.solver.stop_tol = *a.tol;
  if (a.snr) config.metrics.snr = true;
  if (a.pca) config.metrics.pca = true;
  if (threads > 0) config.solver.threads = threads;
  config.solver.validate();

  const fs::path out = config.output_dir.empty() ? mlop::default_output_root() / config.name : config.output_dir;
  const mlop::DatasetFiles data = [&] {
    if (!config.dataset_dir.empty()) {
      // Record what the files were generated from, when gen left a spec.
      const fs::path spec_file = config.dataset_dir / "spec.json";
      if (fs::exists(spec_file)) {
        config.dataset = nlohmann::json::parse(mlop::read_text(spec_file)).get<mlop::DatasetSpec>();
      }
      return mlop::read_dataset(config.dataset_dir);
    }
    const mlop::Dataset d = mlop::generate(config.dataset);
    mlop::write_dataset(d, out / "data");
    return mlop::to_files(d);
  }();
  const mlop::RunOutput result = mlop::run_experiment(config, data);
  mlop::write_run(result, out, data.reference);

  const auto& r = result.report;
  std::cout << config.name << ": " << r.iterations_run << " iterations, "
            << (r.converged ? "converged" : "max_iters reached");
  if (data.reference) std::cout << ", relative error " << r.relative_error_initial << " -> " << r.relative_error;
  std::cout << "\nwrote " << out.string() << "\n";
  return 0;
}

int cmd_reproduce(const ReproduceArgs& a, unsigned threads) {
  mlop::ReproduceOptions options;
  options.output_dir = a.out.empty() ? mlop::default_output_root() / ("reproduce-" + a.name) : fs::path(a.out);
  options.threads = threads > 0 ? threads : 1;
  options.seed = a.seed;
  options.pca_bootstraps = a.bootstraps;
  mlop::reproduce(a.name, options);
  std::cout << mlop::read_text(options.output_dir / "summary.csv");
  return 0;
}

int cmd_metrics(const MetricsArgs& a) {
  const fs::path run_dir = a.run_dir;
  fs::path data_dir = a.data_dir;
  if (data_dir.empty()) data_dir = run_dir / "data";
  if (!fs::exists(data_dir / "P.csv")) {
    throw mlop::IoError("no dataset at " + data_dir.string() + " (pass --data)");
  }
  mlop::MetricToggles toggles;
  toggles.errors = !a.no_errors;
  toggles.snr = a.snr;
  toggles.pca = a.pca;
  toggles.pca_radius = a.pca_radius;
  const mlop::ExperimentReport r = mlop::rescore(run_dir, data_dir, toggles);
  std::cout << nlohmann::json(r).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold reconstruction by locally optimal projection"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads for the per-point phase (0: keep config value)");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic dataset");
  g->add_option("--spec", gen.spec_file, "DatasetSpec JSON file; flags override its fields");
  g->add_option("--kind", gen.kind, "o2 | cone_segment | cylinder2d | cylinder6d | ellipse_images | grid_line");
  g->add_option("--count", gen.count, "number of points J");
  g->add_option("--noise", gen.noise, "noise level");
  g->add_option("--seed", gen.seed, "master seed");
  g->add_option("--ambient-dim", gen.ambient_dim, "ambient dimension (0: dataset default)");
  g->add_option("--reference-density", gen.reference_density, "reference oversampling factor");
  g->add_option("--out", gen.out, "output directory");

  RunArgs run;
  auto* r = app.add_subcommand("run", "reconstruct from a dataset and score the result");
  r->add_option("config", run.config_file, "ExperimentConfig JSON file");
  r->add_option("--data", run.data_dir, "dataset directory written by gen");
  r->add_option("--out", run.out, "output directory");
  r->add_option("--name", run.name, "experiment name");
  r->add_option("--max-iters", run.max_iters, "iteration cap");
  r->add_option("--q-size", run.q_size, "number of reconstruction points I");
  r->add_option("--sketch-dim", run.sketch_dim, "sketch dimension m");
  r->add_option("--seed", run.seed, "solver seed");
  r->add_option("--tol", run.tol, "stopping tolerance on the largest gradient norm");
  r->add_flag("--snr", run.snr, "compute background SNR (image data)");
  r->add_flag("--pca", run.pca, "compute the local-PCA angle error");

  ReproduceArgs rep;
  auto* p = app.add_subcommand("reproduce", "run a canned experiment and write summary.csv");
  p->add_option("name", rep.name, "experiment")
      ->required()
      ->check(CLI::IsMember(mlop::reproduce_names()));
  p->add_option("--out", rep.out, "output directory");
  p->add_option("--seed", rep.seed, "master seed");
  p->add_option("--bootstraps", rep.bootstraps, "bootstrap rounds for pca-benchmark")->check(CLI::PositiveNumber);

  MetricsArgs met;
  auto* m = app.add_subcommand("metrics", "re-score an existing run directory");
  m->add_option("run_dir", met.run_dir, "directory holding Q0.csv, Q_final.csv, sketch.csv")->required();
  m->add_option("--data", met.data_dir, "dataset directory (default: <run_dir>/data)");
  m->add_flag("--no-errors", met.no_errors, "skip the nearest-reference statistics");
  m->add_flag("--snr", met.snr, "compute background SNR");
  m->add_flag("--pca", met.pca, "compute the local-PCA angle error");
  m->add_option("--pca-radius", met.pca_radius, "PCA neighbourhood radius (0: 4 x fill distance of Q0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*r) return cmd_run(run, threads);
    if (*p) return cmd_reproduce(rep, threads);
    if (*m) return cmd_metrics(met);
  } catch (const mlop::SolverAbort& e) {
    std::cerr << "numerical abort at iteration " << e.iteration() << ": " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mlop::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mlop::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mlop::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
