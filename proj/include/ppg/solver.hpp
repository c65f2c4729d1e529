#ifndef PPG_SOLVER_HPP
#define PPG_SOLVER_HPP

#include "ppg/core.hpp"
#include "ppg/metrics.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ppg {

struct SolveOptions {
  /// Unset picks 1/L when the problem has a Lipschitz bound, else 1.
  std::optional<double> alpha;
  long max_iters = 1000;
  /// Stop once ||p(z)|| / sqrt(n d) <= tol.
  double tol = 1e-10;
  bool ergodic = false;
  /// Record a metrics row every this many iterations; 0 means the solver
  /// default (1 for the deterministic methods, n for the stochastic ones).
  long record_every = 0;
  int threads = 1;
  bool timing = false;
  bool track_objective = true;
  /// Reference solution for the dist_to_ref column.
  std::optional<Vec> reference;
  /// Called once per iteration k with the iterate the solver reports for k
  /// (x_half for the splitting methods, x^k or z^k for the baselines).
  std::function<void(long, const Vec&)> observer;
};

/// Step size after validation against 0 < alpha < 3/(2L); alpha >= 2/L is
/// rejected outright, the band in between only warns.
struct StepSize {
  double alpha = 1.0;
  std::vector<std::string> warnings;
};

inline StepSize resolve_step_size(const ProblemSpec& problem, const std::optional<double>& requested) {
  StepSize out;
  const double L = problem.lipschitz();
  if (!requested) {
    if (L > 0.0) {
      out.alpha = 1.0 / L;
    } else {
      out.alpha = 1.0;
      out.warnings.emplace_back("no Lipschitz bound available; using alpha = 1");
    }
    return out;
  }
  const double a = *requested;
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("step size alpha must be positive and finite");
  if (L > 0.0 && a >= 2.0 / L) {
    std::ostringstream msg;
    msg << "step size alpha = " << a << " violates alpha < 2/L = " << 2.0 / L << " (L = " << L << ")";
    throw std::invalid_argument(msg.str());
  }
  if (L > 0.0 && a >= 1.5 / L) {
    std::ostringstream msg;
    msg << "alpha = " << a << " is outside the guaranteed range 0 < alpha < 3/(2L) = " << 1.5 / L;
    out.warnings.push_back(msg.str());
  }
  out.alpha = a;
  return out;
}

/// Running sums for the ergodic (averaged) iterates.
struct ErgodicState {
  Vec sum_x_half;
  Block sum_x;
  long count = 0;

  ErgodicState() = default;
  ErgodicState(Index n, Index d) : sum_x_half(Vec::Zero(d)), sum_x(Block::Zero(n, d)) {}

  Vec x_half() const { return count ? Vec(sum_x_half / double(count)) : sum_x_half; }
  Block x() const { return count ? Block(sum_x / double(count)) : sum_x; }
};

struct StepResult {
  Vec x_half;
  double residual_norm = 0.0;  ///< ||p(z^k)||_F of the state before the step
};

/// One PPG iteration:
///   x_half = prox_{alpha r}(zbar)
///   x_i    = prox_{alpha g_i}(2 x_half - z_i - alpha grad f_i(x_half))
///   z_i   += x_i - x_half
/// Rows are independent and may run on `threads` workers; zbar and the
/// residual are reduced in a fixed order.
inline StepResult ppg_step(SolverState& state, const ProblemSpec& problem, int threads = 1,
                           ErgodicState* ergodic = nullptr) {
  detail::check_state(state, problem);
  const Index n = problem.size();
  StepResult out;
  out.x_half = detail::prox_r(problem, state.zbar, state.alpha);
  std::vector<double> row_sq(static_cast<std::size_t>(n));

  parallel_for(n, threads, [&](Index b, Index e) {
    for (Index i = b; i < e; ++i) {
      const Vec xi = detail::term_update(problem, i, out.x_half, state.z.row(i).transpose(), state.alpha);
      const Vec delta = xi - out.x_half;
      state.z.row(i) += delta.transpose();
      row_sq[static_cast<std::size_t>(i)] = delta.squaredNorm();
      if (ergodic) ergodic->sum_x.row(i) += xi.transpose();
    }
  });

  double sq = 0.0;
  for (double v : row_sq) sq += v;
  out.residual_norm = std::sqrt(sq) / state.alpha;
  state.zbar = row_mean(state.z, problem.chunks(), threads);
  if (ergodic) {
    ergodic->sum_x_half += out.x_half;
    ++ergodic->count;
  }
  ++state.k;
  return out;
}

struct SolveResult {
  Vec x;
  MetricsLog log;
  std::optional<Vec> ergodic_x;
  bool converged = false;
  long iterations = 0;
  double final_residual = 0.0;
  SolverState state;
  std::vector<std::string> warnings;
  long resyncs = 0;
};

namespace detail {

inline double residual_scale(const ProblemSpec& problem) {
  return std::sqrt(static_cast<double>(problem.size()) * static_cast<double>(problem.dim));
}

inline ResidualReport make_report(long k, double epoch, double residual, const Vec& x, const ProblemSpec& problem,
                                  const SolveOptions& opts, const Stopwatch& clock) {
  ResidualReport row;
  row.k = k;
  row.epoch = epoch;
  row.residual_norm = residual;
  if (opts.track_objective) row.objective = objective(x, problem);
  if (opts.reference) row.dist_to_ref = (x - *opts.reference).norm();
  if (opts.timing) row.wall_time_s = clock.seconds();
  return row;
}

}  // namespace detail

/// Runs PPG from z = 0 (or `warm_start`) until the normalized residual drops
/// below opts.tol or opts.max_iters iterations have run.
inline SolveResult ppg_run(const ProblemSpec& problem, const SolveOptions& opts,
                           const std::optional<Block>& warm_start = std::nullopt) {
  problem.validate();
  const StepSize step = resolve_step_size(problem, opts.alpha);
  if (opts.max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  const long every = opts.record_every > 0 ? opts.record_every : 1;

  SolveResult res;
  res.warnings = step.warnings;
  res.state = warm_start ? SolverState::from_block(problem, *warm_start, step.alpha)
                         : SolverState::zeros(problem, step.alpha);
  res.log.meta.solver = "ppg";
  res.log.meta.problem_kind = problem.kind;
  res.log.meta.alpha = step.alpha;

  std::optional<ErgodicState> erg;
  if (opts.ergodic) erg.emplace(problem.size(), problem.dim);

  const double scale = detail::residual_scale(problem);
  const Stopwatch clock;
  for (long it = 0; it < opts.max_iters; ++it) {
    const long k = res.state.k;
    const StepResult sr = ppg_step(res.state, problem, opts.threads, erg ? &*erg : nullptr);
    if (opts.observer) opts.observer(k, sr.x_half);
    res.final_residual = sr.residual_norm;
    res.iterations = it + 1;
    const bool done = sr.residual_norm / scale <= opts.tol;
    if (k % every == 0 || done || it + 1 == opts.max_iters)
      res.log.append(detail::make_report(k, static_cast<double>(k), sr.residual_norm, sr.x_half, problem, opts, clock));
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.x = detail::prox_r(problem, res.state.zbar, res.state.alpha);
  if (erg) res.ergodic_x = erg->x_half();
  return res;
}

}  // namespace ppg

#endif  // PPG_SOLVER_HPP
