#include "mlop/solver.hpp"

#include "mlop/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <thread>

namespace mlop {

KernelParams KernelParams::from(const SupportParams& supports, const SolverConfig& config) {
  KernelParams k;
  k.h1 = supports.h1;
  k.h2 = supports.h2;
  k.eps = config.eps_h;
  k.cutoff_mult = config.neighbor_cutoff_mult;
  k.min_separation = 1e-9 * supports.h2;
  k.attraction = config.attraction;
  return k;
}

double h_eps_norm(const VectorRef& v, double eps, const SketchMatrix& s) {
  return h_eps(sketched_norm(s, v), eps);
}

double eta(double r, double min_separation) {
  if (!(r > min_separation)) throw CoincidentPointsError(r);
  return 1.0 / (3.0 * r * r * r);
}

double eta_abs_deriv(double r, double min_separation) {
  if (!(r > min_separation)) throw CoincidentPointsError(r);
  const double r2 = r * r;
  return 1.0 / (r2 * r2);
}

double attraction_weight(double dist, const KernelParams& k) {
  if (dist > k.cutoff_mult * k.h1) return 0.0;
  const double d2 = dist * dist;
  const double h = std::sqrt(d2 + k.eps);
  const double w = std::exp(-d2 / (k.h1 * k.h1));
  if (k.attraction == AttractionModel::kFrozenWeight) return w / h;
  return w / h * (1.0 - 2.0 * (d2 + k.eps) / (k.h1 * k.h1));
}

double repulsion_weight(double dist, const KernelParams& k) {
  if (dist > k.cutoff_mult * k.h2) return 0.0;
  const double e = eta(dist, k.min_separation);
  const double w = std::exp(-dist * dist / (k.h2 * k.h2));
  return w / dist * (eta_abs_deriv(dist, k.min_separation) + 2.0 * e * dist / (k.h2 * k.h2));
}

double attraction_coeff(const VectorRef& q, const VectorRef& p, const KernelParams& k,
                        const SketchMatrix& s) {
  return attraction_weight(sketched_dist(s, q, p), k);
}

double repulsion_coeff(const VectorRef& q, const VectorRef& q_other, const KernelParams& k,
                       const SketchMatrix& s) {
  return repulsion_weight(sketched_dist(s, q, q_other), k);
}

double balance_lambda(const GradientTerms& terms, const SketchMatrix& s) {
  const double a = sketched_norm(s, terms.attraction);
  const double r = sketched_norm(s, terms.repulsion);
  if (r == 0.0 || a == 0.0) return 0.0;
  return -a / r;
}

double bb_step(const VectorRef& dq, const VectorRef& dg, const StepRule& rule) {
  const double denom = dg.squaredNorm();
  if (denom == 0.0) return rule.initial;
  const double raw = dq.dot(dg) / denom;
  if (!(raw > 0.0) || !std::isfinite(raw)) return rule.initial;
  return std::clamp(raw, rule.min, rule.max);
}

// ---------------------------------------------------------------------------

Objective::Objective(const PointCloud& p, const SketchMatrix& s, KernelParams kernel)
    : p_(&p), s_(&s), kernel_(kernel), p_projected_(s.project_rows(p.points())) {
  if (!(kernel_.h1 > 0.0) || !(kernel_.h2 > 0.0)) throw ConfigError("supports h1, h2 must be positive");
  if (!(kernel_.eps > 0.0)) throw ConfigError("eps must be positive");
}

GradientTerms Objective::terms(Index i, const Matrix& q, const Matrix& q_projected) const {
  const Index n = q.cols();
  const Matrix& pts = p_->points();
  const auto qi = q.row(i);
  const auto qpi = q_projected.row(i);

  GradientTerms t{Vector::Zero(n), Vector::Zero(n), 0.0, 0.0};

  const double cut1 = kernel_.cutoff_mult * kernel_.h1;
  const double cut1_sq = cut1 * cut1;
  const double inv_h1 = 1.0 / kernel_.h1;
  const double inv_h1_sq = inv_h1 * inv_h1;
  const bool literal = kernel_.attraction == AttractionModel::kLiteral;
  // Potential whose gradient has coefficient w / H, shifted to vanish at the cutoff.
  const double frozen_scale = std::exp(kernel_.eps * inv_h1_sq) * kernel_.h1 * std::sqrt(std::numbers::pi) / 2.0;
  const double erf_at_cutoff = std::erf(std::sqrt(cut1_sq + kernel_.eps) * inv_h1);
  for (Index j = 0; j < p_projected_.rows(); ++j) {
    const double d2 = (qpi - p_projected_.row(j)).squaredNorm();
    if (d2 > cut1_sq) continue;
    const double h_sq = d2 + kernel_.eps;
    const double h = std::sqrt(h_sq);
    const double w = std::exp(-d2 * inv_h1_sq);
    const double alpha = literal ? w / h * (1.0 - 2.0 * h_sq * inv_h1_sq) : w / h;
    t.attraction.noalias() += alpha * (qi - pts.row(j)).transpose();
    t.attraction_energy += literal ? h * w : frozen_scale * (std::erf(h * inv_h1) - erf_at_cutoff);
  }

  const double cut2 = kernel_.cutoff_mult * kernel_.h2;
  const double cut2_sq = cut2 * cut2;
  const double inv_h2_sq = 1.0 / (kernel_.h2 * kernel_.h2);
  for (Index k = 0; k < q_projected.rows(); ++k) {
    if (k == i) continue;
    const double d2 = (qpi - q_projected.row(k)).squaredNorm();
    if (d2 > cut2_sq) continue;
    const double d = std::sqrt(d2);
    const double e = eta(d, kernel_.min_separation);
    const double w = std::exp(-d2 * inv_h2_sq);
    const double beta = w / d * (eta_abs_deriv(d, kernel_.min_separation) + 2.0 * e * d * inv_h2_sq);
    t.repulsion.noalias() += beta * (qi - q.row(k)).transpose();
    t.repulsion_energy += e * w;
  }
  return t;
}

double Objective::point_cost(Index i, const Matrix& q, const Matrix& q_projected,
                             std::span<const double> lambda) const {
  const GradientTerms t = terms(i, q, q_projected);
  const double l = lambda.empty() ? 0.0 : lambda[static_cast<std::size_t>(i)];
  return t.attraction_energy - l * t.repulsion_energy;
}

double Objective::cost(const Matrix& q, const Matrix& q_projected, std::span<const double> lambda) const {
  double total = 0.0;
  for (Index i = 0; i < q.rows(); ++i) total += point_cost(i, q, q_projected, lambda);
  return total;
}

double Objective::cost(const Matrix& q, std::span<const double> lambda) const {
  return cost(q, s_->project_rows(q), lambda);
}

double Objective::attraction_energy(const Matrix& q, const Matrix& q_projected) const {
  double total = 0.0;
  for (Index i = 0; i < q.rows(); ++i) total += terms(i, q, q_projected).attraction_energy;
  return total;
}

std::vector<double> Objective::repulsion_energies(const Matrix& q, const Matrix& q_projected) const {
  std::vector<double> out(static_cast<std::size_t>(q.rows()));
  for (Index i = 0; i < q.rows(); ++i) out[static_cast<std::size_t>(i)] = terms(i, q, q_projected).repulsion_energy;
  return out;
}

// ---------------------------------------------------------------------------

void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& fn) {
  if (count <= 0) return;
  const auto workers = static_cast<Index>(std::min<Index>(std::max(1u, threads), count));
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (Index i = w; i < count; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  // Lowest index wins so the reported failure does not depend on scheduling.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SolverAbort::SolverAbort(Index iteration, const std::string& cause)
    : NumericalError("solver aborted at iteration " + std::to_string(iteration) + ": " + cause),
      iteration_(iteration) {}

std::vector<double> init_lambda(const Objective& objective, const Matrix& q) {
  const Matrix qp = objective.sketch().project_rows(q);
  std::vector<double> lambda(static_cast<std::size_t>(q.rows()));
  for (Index i = 0; i < q.rows(); ++i) {
    lambda[static_cast<std::size_t>(i)] = balance_lambda(objective.terms(i, q, qp), objective.sketch());
  }
  return lambda;
}

Solver::Solver(const PointCloud& p, const SketchMatrix& s, const SupportParams& supports,
               const SolverConfig& config, Matrix q0)
    : objective_(p, s, KernelParams::from(supports, config)),
      config_(config),
      steps_(resolve_steps(config, supports.h1)) {
  if (q0.rows() < 1 || q0.cols() != p.dim()) throw ConfigError("Q0 must be a non-empty set in the ambient space of P");
  const auto count = static_cast<std::size_t>(q0.rows());
  state_.q_curr = std::move(q0);
  state_.q_prev = state_.q_curr;
  state_.grad_curr = Matrix::Zero(state_.q_curr.rows(), state_.q_curr.cols());
  state_.grad_prev = state_.grad_curr;
  state_.lambda.assign(count, 0.0);
  state_.step.assign(count, steps_.initial);
  state_.grad_norms.assign(count, 0.0);
  q_projected_ = s.project_rows(state_.q_curr);
  order_.resize(count);
  std::iota(order_.begin(), order_.end(), Index{0});
}

void Solver::evaluate() {
  const Index count = state_.q_curr.rows();
  std::vector<GradientTerms> terms(static_cast<std::size_t>(count));
  parallel_for(count, config_.threads, [&](Index i) {
    terms[static_cast<std::size_t>(i)] = objective_.terms(i, state_.q_curr, q_projected_);
  });

  if (!state_.lambda_initialized) {
    for (Index i = 0; i < count; ++i) {
      state_.lambda[static_cast<std::size_t>(i)] =
          balance_lambda(terms[static_cast<std::size_t>(i)], objective_.sketch());
    }
    state_.lambda_initialized = true;
  }

  for (Index i = 0; i < count; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const Vector g = combine_gradient(terms[si], state_.lambda[si]);
    if (!g.allFinite()) {
      throw NumericalError("non-finite gradient at reconstruction point " + std::to_string(i));
    }
    state_.grad_curr.row(i) = g.transpose();
    state_.grad_norms[si] = sketched_norm(objective_.sketch(), g);
  }
  current_cost_ = 0.0;
  for (Index i = 0; i < count; ++i) {
    const auto si = static_cast<std::size_t>(i);
    current_cost_ += terms[si].attraction_energy - state_.lambda[si] * terms[si].repulsion_energy;
  }
  evaluated_ = true;
}

Vector Solver::gradient_at(Index i) const {
  if (!state_.lambda_initialized) throw ConfigError("gradient_at before lambda initialisation");
  return combine_gradient(objective_.terms(i, state_.q_curr, q_projected_),
                          state_.lambda[static_cast<std::size_t>(i)]);
}

IterationRecord Solver::iterate() {
  const auto start = std::chrono::steady_clock::now();
  evaluate();

  IterationRecord rec;
  rec.iter = state_.iter;
  rec.max_grad_norm = *std::max_element(state_.grad_norms.begin(), state_.grad_norms.end());
  rec.cost = current_cost_;
  rec.fill_distance = q_projected_.rows() >= 2 ? fill_distance_projected(q_projected_) : 0.0;

  if (rec.max_grad_norm < steps_.stop_tol) {
    converged_ = true;
  } else {
    const StepRule rule{steps_.initial, steps_.min, steps_.max};
    const Index count = state_.q_curr.rows();
    for (Index i = 0; i < count; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (state_.iter == 0) {
        state_.step[si] = steps_.initial;
      } else {
        const Vector dq = (state_.q_curr.row(i) - state_.q_prev.row(i)).transpose();
        const Vector dg = (state_.grad_curr.row(i) - state_.grad_prev.row(i)).transpose();
        state_.step[si] = bb_step(dq, dg, rule);
      }
      // The clamp bounds gamma, not the move: gradients scale with the number
      // of neighbours, so a bounded gamma can still throw a point far outside
      // its support. Shrink the step so no point moves further than the cap.
      const double move = state_.step[si] * state_.grad_curr.row(i).norm();
      if (move > steps_.max_displacement) state_.step[si] *= steps_.max_displacement / move;
    }
    Matrix next = state_.q_curr;
    for (Index i : order_) {
      next.row(i) -= state_.step[static_cast<std::size_t>(i)] * state_.grad_curr.row(i);
    }
    if (!next.allFinite()) throw NumericalError("non-finite iterate");
    state_.q_prev = std::move(state_.q_curr);
    state_.grad_prev = state_.grad_curr;
    state_.q_curr = std::move(next);
    q_projected_ = objective_.sketch().project_rows(state_.q_curr);
    ++state_.iter;
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

// ---------------------------------------------------------------------------

std::vector<Index> initial_subsample(const PointCloud& p, const SolverConfig& config,
                                     const SketchMatrix& s, Rng& rng) {
  const auto j = static_cast<std::size_t>(p.size());
  const auto i = static_cast<std::size_t>(config.q_size);
  if (i < 1 || i > j) throw ConfigError("q_size must satisfy 1 <= I <= J");

  std::vector<Index> out;
  if (config.init == InitMode::kRandom) {
    for (std::size_t k : rng.sample_without_replacement(j, i)) out.push_back(static_cast<Index>(k));
  } else {
    const Matrix pp = s.project_rows(p.points());
    std::vector<double> d(j);
    for (std::size_t k = 0; k < j; ++k) d[k] = projected_dist(pp, config.init_index, pp, static_cast<Index>(k));
    std::vector<Index> by_distance(j);
    std::iota(by_distance.begin(), by_distance.end(), Index{0});
    std::stable_sort(by_distance.begin(), by_distance.end(),
                     [&](Index a, Index b) { return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)]; });
    std::size_t inside = 0;
    while (inside < j && d[static_cast<std::size_t>(by_distance[inside])] <= config.init_radius) ++inside;
    if (config.init_radius > 0.0 && inside >= i) {
      for (std::size_t k : rng.sample_without_replacement(inside, i)) out.push_back(by_distance[k]);
    } else {
      out.assign(by_distance.begin(), by_distance.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SketchMatrix sketch_for_run(const PointCloud& p, const SolverConfig& config) {
  config.validate_for(p.size(), p.dim());
  Rng sketch_rng(derive_seed(config.seed, seed_tag::kSketch));
  try {
    return build_sketch(p, config.sketch_dim, sketch_rng);
  } catch (const DegenerateSketchError& e) {
    if (e.achieved_rank() < 1) throw;
    // A fresh stream from the same seed keeps the retry reproducible.
    Rng retry_rng(derive_seed(config.seed, seed_tag::kSketch));
    return build_sketch(p, static_cast<Index>(e.achieved_rank()), retry_rng);
  }
}

RunResult run(const PointCloud& p, const SolverConfig& config) {
  return run(p, config, sketch_for_run(p, config));
}

RunResult run(const PointCloud& p, const SolverConfig& config, const SketchMatrix& s) {
  config.validate_for(p.size(), p.dim());
  if (s.ambient_dim() != p.dim()) throw ConfigError("sketch does not match the ambient dimension of P");

  Rng init_rng(derive_seed(config.seed, seed_tag::kInit));
  std::vector<Index> q0_idx = initial_subsample(p, config, s, init_rng);
  PointCloud q0 = p.subset(q0_idx);
  Rng support_rng(derive_seed(config.seed, seed_tag::kSupportSample));
  const SupportParams supports = estimate_supports(p, q0, s, support_rng);

  Solver solver(p, s, supports, config, q0.points());
  std::vector<IterationRecord> trace;
  trace.reserve(static_cast<std::size_t>(config.max_iters));
  try {
    for (Index k = 0; k < config.max_iters; ++k) {
      trace.push_back(solver.iterate());
      if (solver.converged()) break;
    }
  } catch (const SolverAbort&) {
    throw;
  } catch (const NumericalError& e) {
    throw SolverAbort(solver.state().iter, e.what());
  }

  const SolverState& st = solver.state();
  return RunResult{PointCloud(st.q_curr),
                   std::move(q0),
                   std::move(q0_idx),
                   std::move(trace),
                   supports,
                   s,
                   st.lambda,
                   solver.converged(),
                   st.iter};
}

void write_trace_csv(std::ostream& out, std::span<const IterationRecord> trace) {
  out << "iter,max_grad_norm,cost,fill_distance_Q,wall_ms\n";
  out << std::setprecision(17);
  for (const auto& r : trace) {
    out << r.iter << ',' << r.max_grad_norm << ',' << r.cost << ',' << r.fill_distance << ','
        << std::setprecision(6) << r.wall_ms << std::setprecision(17) << '\n';
  }
}

}  // namespace mlop
