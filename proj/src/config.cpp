#include "mlop/config.hpp"

#include "mlop/errors.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace mlop {

void SolverConfig::validate() const {
  if (q_size < 1) throw ConfigError("q_size must be a positive integer");
  if (!(eps_h > 0.0)) throw ConfigError("eps_h must be positive");
  if (stop_tol && !(*stop_tol > 0.0)) throw ConfigError("stop_tol must be positive");
  if (max_iters < 0) throw ConfigError("max_iters must be non-negative");
  if (sketch_dim < 1) throw ConfigError("sketch_dim must be a positive integer");
  if (!(neighbor_cutoff_mult > 0.0)) throw ConfigError("neighbor_cutoff_mult must be positive");
  for (const auto& [name, v] : {std::pair{"initial_step", initial_step}, std::pair{"step_min", step_min},
                                std::pair{"step_max", step_max}, std::pair{"max_displacement", max_displacement}}) {
    if (v && !(*v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  }
  if (step_min && step_max && *step_min > *step_max) throw ConfigError("step_min exceeds step_max");
  if (initial_step && step_min && *initial_step < *step_min) {
    throw ConfigError("initial_step below step_min");
  }
  if (initial_step && step_max && *initial_step > *step_max) {
    throw ConfigError("initial_step above step_max");
  }
  if (init_radius < 0.0) throw ConfigError("init_radius must be non-negative");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

void SolverConfig::validate_for(Index cloud_size, Index ambient_dim) const {
  validate();
  if (q_size > cloud_size) {
    throw ConfigError("q_size " + std::to_string(q_size) + " exceeds input size " +
                      std::to_string(cloud_size) + " (only I <= J is supported)");
  }
  if (sketch_dim > ambient_dim) {
    throw ConfigError("sketch_dim " + std::to_string(sketch_dim) + " exceeds ambient dimension " +
                      std::to_string(ambient_dim));
  }
  if (init == InitMode::kAroundPoint && (init_index < 0 || init_index >= cloud_size)) {
    throw ConfigError("init_index out of range");
  }
}

ResolvedSteps resolve_steps(const SolverConfig& config, double h1) {
  ResolvedSteps r{
      config.initial_step.value_or(0.1 * h1),
      config.step_min.value_or(1e-4 * h1),
      config.step_max.value_or(h1),
      config.stop_tol.value_or(1e-4 * h1),
      config.max_displacement.value_or(0.1 * h1),
  };
  if (r.min > r.max) throw ConfigError("resolved step_min exceeds step_max");
  r.initial = std::clamp(r.initial, r.min, r.max);
  return r;
}

namespace {

const char* init_name(InitMode m) { return m == InitMode::kRandom ? "random" : "around_point"; }

const char* attraction_name(AttractionModel m) {
  return m == AttractionModel::kFrozenWeight ? "frozen_weight" : "literal";
}

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

void to_json(nlohmann::json& j, const SolverConfig& c) {
  j = nlohmann::json{{"q_size", c.q_size},
                     {"eps_h", c.eps_h},
                     {"max_iters", c.max_iters},
                     {"sketch_dim", c.sketch_dim},
                     {"neighbor_cutoff_mult", c.neighbor_cutoff_mult},
                     {"seed", c.seed},
                     {"init", init_name(c.init)},
                     {"attraction", attraction_name(c.attraction)},
                     {"init_index", c.init_index},
                     {"init_radius", c.init_radius},
                     {"threads", c.threads}};
  put_optional(j, "stop_tol", c.stop_tol);
  put_optional(j, "initial_step", c.initial_step);
  put_optional(j, "step_min", c.step_min);
  put_optional(j, "step_max", c.step_max);
  put_optional(j, "max_displacement", c.max_displacement);
}

void from_json(const nlohmann::json& j, SolverConfig& c) {
  static const std::set<std::string> known{
      "q_size",     "eps_h", "stop_tol",   "max_iters",  "sketch_dim",  "initial_step",
      "step_min",   "step_max", "neighbor_cutoff_mult", "seed", "init", "init_index",
      "init_radius", "threads", "max_displacement", "attraction"};
  if (!j.is_object()) throw ConfigError("solver config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown solver config key '" + key + "'");
  }
  try {
    c = SolverConfig{};
    if (j.contains("q_size")) c.q_size = j.at("q_size").get<Index>();
    if (j.contains("eps_h")) c.eps_h = j.at("eps_h").get<double>();
    if (j.contains("stop_tol")) c.stop_tol = j.at("stop_tol").get<double>();
    if (j.contains("max_iters")) c.max_iters = j.at("max_iters").get<Index>();
    if (j.contains("sketch_dim")) c.sketch_dim = j.at("sketch_dim").get<Index>();
    if (j.contains("initial_step")) c.initial_step = j.at("initial_step").get<double>();
    if (j.contains("step_min")) c.step_min = j.at("step_min").get<double>();
    if (j.contains("step_max")) c.step_max = j.at("step_max").get<double>();
    if (j.contains("neighbor_cutoff_mult")) {
      c.neighbor_cutoff_mult = j.at("neighbor_cutoff_mult").get<double>();
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("init")) {
      const auto mode = j.at("init").get<std::string>();
      if (mode == "random") {
        c.init = InitMode::kRandom;
      } else if (mode == "around_point") {
        c.init = InitMode::kAroundPoint;
      } else {
        throw ConfigError("unknown init mode '" + mode + "'");
      }
    }
    if (j.contains("attraction")) {
      const auto model = j.at("attraction").get<std::string>();
      if (model == "frozen_weight") {
        c.attraction = AttractionModel::kFrozenWeight;
      } else if (model == "literal") {
        c.attraction = AttractionModel::kLiteral;
      } else {
        throw ConfigError("unknown attraction model '" + model + "'");
      }
    }
    if (j.contains("max_displacement")) c.max_displacement = j.at("max_displacement").get<double>();
    if (j.contains("init_index")) c.init_index = j.at("init_index").get<Index>();
    if (j.contains("init_radius")) c.init_radius = j.at("init_radius").get<double>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("solver config: ") + e.what());
  }
}

}  // namespace mlop
