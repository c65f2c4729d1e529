#ifndef PPG_STOCHASTIC_HPP
#define PPG_STOCHASTIC_HPP

#include "ppg/core.hpp"
#include "ppg/metrics.hpp"
#include "ppg/solver.hpp"

#include <cstdint>

namespace ppg {

/// Counter-based SplitMix64 stream: draw j is mix(seed + (j+1) * 0x9E3779B97F4A7C15)
/// with the SplitMix64 finalizer. Indices are mapped to [0, n) with Lemire's
/// multiply-shift and rejection, so a (seed, n) pair yields the same index
/// sequence on every platform.
class UniformSampler {
 public:
  explicit UniformSampler(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    std::uint64_t x = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  /// Uniform index in [0, n).
  Index next_index(Index n) {
    if (n <= 0) throw std::invalid_argument("sampler range must be positive");
    const auto range = static_cast<std::uint64_t>(n);
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<Index>(m >> 64);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

struct StochasticStep {
  Index index = 0;
  Vec x_half;
};

/// S-PPG update of a single row i; zbar is moved by (x_i - x_half)/n in O(d).
inline StochasticStep sppg_update_row(SolverState& state, const ProblemSpec& problem, Index i) {
  const Index n = problem.size();
  StochasticStep out;
  out.index = i;
  out.x_half = detail::prox_r(problem, state.zbar, state.alpha);
  const Vec xi = detail::term_update(problem, i, out.x_half, state.z.row(i).transpose(), state.alpha);
  const Vec delta = xi - out.x_half;
  state.z.row(i) += delta.transpose();
  state.zbar += delta / static_cast<double>(n);
  ++state.k;
  return out;
}

/// One S-PPG iteration with i(k) drawn uniformly.
inline StochasticStep sppg_step(SolverState& state, const ProblemSpec& problem, UniformSampler& sampler) {
  detail::check_state(state, problem);
  return sppg_update_row(state, problem, sampler.next_index(problem.size()));
}

inline constexpr double kZbarDriftTol = 1e-9;

/// Re-synchronizes zbar with the exact row mean when the running update has
/// drifted beyond kZbarDriftTol (1 + ||zbar||). Returns true on re-sync.
inline bool resync_zbar(SolverState& state, const ProblemSpec& problem) {
  Vec exact = row_mean(state.z, problem.chunks());
  if ((state.zbar - exact).norm() > kZbarDriftTol * (1.0 + state.zbar.norm())) {
    state.zbar = std::move(exact);
    return true;
  }
  return false;
}

/// Runs S-PPG with constant step size. opts.max_iters counts single-row
/// steps (n steps = one epoch); the residual, which costs O(nd), is only
/// evaluated every record_every steps (default n).
inline SolveResult sppg_run(const ProblemSpec& problem, const SolveOptions& opts, UniformSampler sampler,
                            const std::optional<Block>& warm_start = std::nullopt) {
  problem.validate();
  const StepSize step = resolve_step_size(problem, opts.alpha);
  const Index n = problem.size();
  const long every = opts.record_every > 0 ? opts.record_every : static_cast<long>(n);

  SolveResult res;
  res.warnings = step.warnings;
  res.state = warm_start ? SolverState::from_block(problem, *warm_start, step.alpha)
                         : SolverState::zeros(problem, step.alpha);
  res.log.meta.solver = "sppg";
  res.log.meta.problem_kind = problem.kind;
  res.log.meta.alpha = step.alpha;
  res.log.meta.seed = sampler.seed();

  const double scale = detail::residual_scale(problem);
  const Stopwatch clock;
  std::optional<ErgodicState> erg;
  if (opts.ergodic) erg.emplace(n, problem.dim);

  auto record = [&](long k) {
    const ResidualMap rm = residual_map(res.state, problem, opts.threads);
    const double nrm = rm.norm();
    res.final_residual = nrm;
    res.log.append(detail::make_report(k, double(k) / double(n), nrm, rm.x_half, problem, opts, clock));
    return nrm / scale <= opts.tol;
  };

  for (long it = 0; it < opts.max_iters; ++it) {
    const long k = res.state.k;
    if (k % every == 0 && record(k)) {
      res.converged = true;
      break;
    }
    const StochasticStep st = sppg_step(res.state, problem, sampler);
    if (opts.observer) opts.observer(k, st.x_half);
    if (erg) {
      erg->sum_x_half += st.x_half;
      ++erg->count;
    }
    res.iterations = it + 1;
    if (res.state.k % n == 0 && resync_zbar(res.state, problem)) ++res.resyncs;
  }
  if (!res.converged && (res.log.empty() || res.log.back().k != res.state.k))
    res.converged = record(res.state.k);
  res.x = detail::prox_r(problem, res.state.zbar, res.state.alpha);
  if (erg) res.ergodic_x = erg->x_half();
  return res;
}

}  // namespace ppg

#endif  // PPG_STOCHASTIC_HPP
