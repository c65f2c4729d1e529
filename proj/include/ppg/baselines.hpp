#ifndef PPG_BASELINES_HPP
#define PPG_BASELINES_HPP

#include "ppg/core.hpp"
#include "ppg/metrics.hpp"
#include "ppg/solver.hpp"
#include "ppg/stochastic.hpp"

#include <cmath>
#include <stdexcept>

namespace ppg {

namespace detail {

inline void require_no_prox_terms(const ProblemSpec& problem, const char* solver) {
  for (Index i = 0; i < problem.size(); ++i)
    if (!problem.g[i].is_zero)
      throw std::invalid_argument(std::string(solver) + " requires g_i = 0, but nonsmooth term " + std::to_string(i) +
                                  " is present");
}

inline void require_no_smooth_terms(const ProblemSpec& problem, const char* solver) {
  for (Index i = 0; i < problem.size(); ++i)
    if (!problem.f[i].is_zero)
      throw std::invalid_argument(std::string(solver) + " requires f_i = 0, but smooth term " + std::to_string(i) +
                                  " is present");
}

inline MetricsLog new_log(const char* solver, const ProblemSpec& problem, double alpha) {
  MetricsLog log;
  log.meta.solver = solver;
  log.meta.problem_kind = problem.kind;
  log.meta.alpha = alpha;
  return log;
}

}  // namespace detail

/// Proximal gradient (forward-backward) for problems with every g_i = 0:
///   x^{k+1} = prox_{alpha r}(x^k - (alpha/n) sum_i grad f_i(x^k)),
/// started from x^0 = prox_{alpha r}(0) so that its iterates line up with
/// the x_half sequence of PPG. The residual column is ||x^{k+1} - x^k|| / alpha.
inline SolveResult proximal_gradient_run(const ProblemSpec& problem, const SolveOptions& opts,
                                         const std::optional<Vec>& start = std::nullopt) {
  problem.validate();
  detail::require_no_prox_terms(problem, "proximal gradient");
  const StepSize step = resolve_step_size(problem, opts.alpha);
  const double alpha = step.alpha;
  const long every = opts.record_every > 0 ? opts.record_every : 1;
  const double n = double(problem.size());

  SolveResult res;
  res.warnings = step.warnings;
  res.log = detail::new_log("prox-grad", problem, alpha);
  Vec x = detail::prox_r(problem, start ? *start : Vec::Zero(problem.dim), alpha);
  const Stopwatch clock;
  const double scale = std::sqrt(double(problem.dim));
  for (long k = 0; k < opts.max_iters; ++k) {
    if (opts.observer) opts.observer(k, x);
    Vec grad = Vec::Zero(problem.dim);
    for (Index i = 0; i < problem.size(); ++i)
      if (!problem.f[i].is_zero) grad += problem.f[i].gradient(x);
    detail::require_finite(grad, 0, "gradient");
    Vec next = detail::prox_r(problem, Vec(x - (alpha / n) * grad), alpha);
    const double resid = (next - x).norm() / alpha;
    res.final_residual = resid;
    res.iterations = k + 1;
    const bool done = resid / scale <= opts.tol;
    if (k % every == 0 || done || k + 1 == opts.max_iters)
      res.log.append(detail::make_report(k, double(k), resid, x, problem, opts, clock));
    x = std::move(next);
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

/// Consensus ADMM for f_i = 0 with penalty rho = 1/alpha, so each iteration
/// calls exactly the prox operators PPG calls (prox_{alpha g_i}, prox_{alpha r}):
///   x_i = prox_{alpha g_i}(z - u_i)
///   z   = prox_{alpha r}(mean_i(x_i + u_i))
///   u_i = u_i + x_i - z
/// The residual column is the primal residual sqrt(sum_i ||x_i - z||^2) / alpha.
inline SolveResult consensus_admm_run(const ProblemSpec& problem, const SolveOptions& opts) {
  problem.validate();
  detail::require_no_smooth_terms(problem, "consensus ADMM");
  const StepSize step = resolve_step_size(problem, opts.alpha);
  const double alpha = step.alpha;
  const Index n = problem.size();
  const long every = opts.record_every > 0 ? opts.record_every : 1;

  SolveResult res;
  res.warnings = step.warnings;
  res.log = detail::new_log("admm", problem, alpha);
  Block x = Block::Zero(n, problem.dim);
  Block u = Block::Zero(n, problem.dim);
  Vec z = Vec::Zero(problem.dim);
  const Stopwatch clock;
  const double scale = detail::residual_scale(problem);
  for (long k = 0; k < opts.max_iters; ++k) {
    if (opts.observer) opts.observer(k, z);
    parallel_for(n, opts.threads, [&](Index b, Index e) {
      for (Index i = b; i < e; ++i) {
        Vec xi = problem.g[i].prox(Vec(z - u.row(i).transpose()), alpha);
        detail::require_finite(xi, i, "prox output");
        x.row(i) = xi.transpose();
      }
    });
    const Block xu = x + u;
    z = detail::prox_r(problem, row_mean(xu, problem.chunks(), opts.threads), alpha);
    double sq = 0.0;
    for (Index i = 0; i < n; ++i) {
      u.row(i) += x.row(i) - z.transpose();
      sq += (x.row(i) - z.transpose()).squaredNorm();
    }
    const double resid = std::sqrt(sq) / alpha;
    res.final_residual = resid;
    res.iterations = k + 1;
    const bool done = resid / scale <= opts.tol;
    if (k % every == 0 || done || k + 1 == opts.max_iters)
      res.log.append(detail::make_report(k, double(k), resid, z, problem, opts, clock));
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(z);
  return res;
}

/// alpha_k = c / k
struct DiminishingStep {
  double c = 1.0;

  double at(long k) const { return c / double(k); }
  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("diminishing step constant c must be positive");
  }
};

/// Stochastic proximal iteration x^{k+1} = prox_{alpha_k g_{i(k)}}(x^k) with
/// alpha_k = c/k, for problems with f = 0 and r = 0. A constant step size is
/// not accepted (opts.alpha must be unset). opts.max_iters counts steps; the
/// residual column is ||x^{k+1} - x^k|| / alpha_k of the last step.
inline SolveResult stochastic_prox_iteration_run(const ProblemSpec& problem, const DiminishingStep& step,
                                                 UniformSampler sampler, const SolveOptions& opts) {
  problem.validate();
  step.validate();
  detail::require_no_smooth_terms(problem, "stochastic proximal iteration");
  if (!problem.r.is_zero)
    throw std::invalid_argument("stochastic proximal iteration requires r = 0; fold r into the terms first");
  if (opts.alpha)
    throw std::invalid_argument("stochastic proximal iteration uses the diminishing step c/k, not a constant alpha");
  const Index n = problem.size();
  const long every = opts.record_every > 0 ? opts.record_every : static_cast<long>(n);

  SolveResult res;
  res.log = detail::new_log("spi", problem, step.c);
  res.log.meta.seed = sampler.seed();
  Vec x = Vec::Zero(problem.dim);
  double last = 0.0;
  const Stopwatch clock;
  for (long k = 0; k < opts.max_iters; ++k) {
    if (k % every == 0)
      res.log.append(detail::make_report(k, double(k) / double(n), last, x, problem, opts, clock));
    if (opts.observer) opts.observer(k, x);
    const double ak = step.at(k + 1);
    const Index i = sampler.next_index(n);
    Vec next = problem.g[i].prox(x, ak);
    detail::require_finite(next, i, "prox output");
    last = (next - x).norm() / ak;
    x = std::move(next);
    res.iterations = k + 1;
  }
  res.final_residual = last;
  if (res.log.empty() || res.log.back().k != res.iterations)
    res.log.append(detail::make_report(res.iterations, double(res.iterations) / double(n), last, x, problem, opts, clock));
  res.x = std::move(x);
  return res;
}

/// Finito for smooth-only problems (g = 0, r = 0):
///   phi = w = mean_i z_i,  z_{i(k)} = phi - alpha grad f_{i(k)}(phi)
/// with w maintained by the same O(d) running update as S-PPG.
/// opts.max_iters counts steps. The residual column is ||p(z)|| of the
/// equivalent splitting iterate.
inline SolveResult finito_run(const ProblemSpec& problem, UniformSampler sampler, const SolveOptions& opts) {
  problem.validate();
  detail::require_no_prox_terms(problem, "Finito");
  if (!problem.r.is_zero) throw std::invalid_argument("Finito requires r = 0");
  const StepSize step = resolve_step_size(problem, opts.alpha);
  const double alpha = step.alpha;
  const Index n = problem.size();
  const long every = opts.record_every > 0 ? opts.record_every : static_cast<long>(n);

  SolveResult res;
  res.warnings = step.warnings;
  res.log = detail::new_log("finito", problem, alpha);
  res.log.meta.seed = sampler.seed();
  res.state = SolverState::zeros(problem, alpha);
  Block& z = res.state.z;
  Vec& w = res.state.zbar;
  const Stopwatch clock;
  const double scale = detail::residual_scale(problem);

  auto record = [&](long k) {
    const double nrm = residual_map(res.state, problem).norm();
    res.final_residual = nrm;
    res.log.append(detail::make_report(k, double(k) / double(n), nrm, w, problem, opts, clock));
    return nrm / scale <= opts.tol;
  };

  for (long k = 0; k < opts.max_iters; ++k) {
    if (k % every == 0 && record(k)) {
      res.converged = true;
      break;
    }
    const Index i = sampler.next_index(n);
    const Vec phi = w;
    if (opts.observer) opts.observer(k, phi);
    Vec grad = problem.f[i].gradient(phi);
    detail::require_finite(grad, i, "gradient");
    const Vec zi = phi - alpha * grad;
    w += (zi - z.row(i).transpose()) / double(n);
    z.row(i) = zi.transpose();
    ++res.state.k;
    res.iterations = k + 1;
  }
  if (!res.converged && (res.log.empty() || res.log.back().k != res.state.k)) res.converged = record(res.state.k);
  res.x = w;
  return res;
}

}  // namespace ppg

#endif  // PPG_BASELINES_HPP
