#pragma once

#include "mlop/core.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <optional>

namespace mlop {

// How Q^(0) is drawn from P.
enum class InitMode {
  kRandom,       // uniform subsample without replacement
  kAroundPoint,  // subsample of the points near P[init_index]
};

// Coefficient used for the pull of the data points on a reconstruction point.
//
// kFrozenWeight: alpha = w / H. This is the Weiszfeld / L1-median weight and
//   the exact derivative of a bounded potential that grows with distance, so
//   reconstruction points are pulled toward the local data. Default.
// kLiteral: alpha = w / H (1 - 2 H^2 / h1^2), the exact derivative of the
//   energy sum H w. That energy falls again beyond H = h1 / sqrt(2), and on a
//   sampled surface of dimension >= 2 the net force points away from it, so
//   the descent leaves the data. Kept for comparison.
enum class AttractionModel {
  kFrozenWeight,
  kLiteral,
};

// Every tunable of the reconstruction. Quantities whose natural scale is the
// attraction support h1 are optional: when unset they resolve relative to h1
// once supports are estimated (see ResolvedSteps).
struct SolverConfig {
  Index q_size = 0;                       // I
  double eps_h = 0.1;                     // epsilon of the H_eps norm
  std::optional<double> stop_tol;         // default 1e-4 * h1
  Index max_iters = 500;
  Index sketch_dim = 10;                  // m
  std::optional<double> initial_step;     // default 0.1 * h1
  std::optional<double> step_min;         // default 1e-4 * h1
  std::optional<double> step_max;         // default h1
  std::optional<double> max_displacement; // per-point move cap, default 0.1 * h1
  AttractionModel attraction = AttractionModel::kFrozenWeight;
  double neighbor_cutoff_mult = 2.0 * std::sqrt(2.0);
  std::uint64_t seed = 0;
  InitMode init = InitMode::kRandom;
  Index init_index = 0;
  double init_radius = 0.0;               // 0: take the I nearest points
  unsigned threads = 1;

  // Checks everything that does not depend on the data; throws ConfigError.
  void validate() const;
  // Checks the pairing with an input of the given size and dimension.
  void validate_for(Index cloud_size, Index ambient_dim) const;
};

// Step-size rule after h1 is known.
struct ResolvedSteps {
  double initial;
  double min;
  double max;
  double stop_tol;
  double max_displacement;
};
ResolvedSteps resolve_steps(const SolverConfig& config, double h1);

void to_json(nlohmann::json& j, const SolverConfig& c);
// Unknown keys are rejected so that typos do not silently fall back to
// defaults.
void from_json(const nlohmann::json& j, SolverConfig& c);

}  // namespace mlop
