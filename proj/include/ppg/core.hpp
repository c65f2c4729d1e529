#ifndef PPG_CORE_HPP
#define PPG_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace ppg {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
/// n x d block of per-term vectors; row i holds the copy owned by term i.
using Block = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when a prox or gradient evaluation produces NaN/Inf.
/// `term()` is the index of the offending term, or -1 for the regularizer r.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, Index term)
      : std::runtime_error(what), term_(term) {}
  Index term() const noexcept { return term_; }

 private:
  Index term_;
};

/// An iterative inner solve hit its step cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Differentiable convex term with an L-Lipschitz gradient.
struct SmoothFn {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  double lipschitz = 0.0;
  bool is_zero = false;

  static SmoothFn zero() {
    SmoothFn f;
    f.value = [](const Vec&) { return 0.0; };
    f.gradient = [](const Vec& x) { return Vec::Zero(x.size()); };
    f.is_zero = true;
    return f;
  }
};

/// Closed convex proper term accessed through its proximal operator.
/// `prox(x0, alpha)` returns argmin_u alpha*h(u) + 0.5*||u - x0||^2.
/// `value` may be left empty when h is awkward to evaluate; objective
/// reporting then yields "unavailable" instead of failing.
struct ProxFn {
  std::function<Vec(const Vec&, double)> prox;
  std::function<double(const Vec&)> value;
  bool is_zero = false;

  bool has_value() const { return static_cast<bool>(value); }

  static ProxFn zero() {
    ProxFn h;
    h.prox = [](const Vec& x, double) { return x; };
    h.value = [](const Vec&) { return 0.0; };
    h.is_zero = true;
    return h;
  }
};

/// r(x) + (1/n) sum_i (f_i(x) + g_i(x)) over x in R^dim.
struct ProblemSpec {
  Index dim = 0;
  ProxFn r = ProxFn::zero();
  std::vector<SmoothFn> f;
  std::vector<ProxFn> g;
  std::string kind = "custom";
  /// Number of fixed chunks used by the row-mean reduction. Fixed at
  /// construction so the summation order never depends on thread count.
  Index reduction_chunks = 0;

  Index size() const { return static_cast<Index>(g.size()); }

  double lipschitz() const {
    double L = 0.0;
    for (const auto& fi : f) L = std::max(L, fi.lipschitz);
    return L;
  }

  bool smooth_free() const {
    return std::all_of(f.begin(), f.end(), [](const SmoothFn& s) { return s.is_zero; });
  }
  bool nonsmooth_free() const {
    return std::all_of(g.begin(), g.end(), [](const ProxFn& h) { return h.is_zero; });
  }

  Index chunks() const {
    const Index n = size();
    if (reduction_chunks > 0) return std::min(reduction_chunks, n);
    return std::min<Index>(n, 64);
  }

  void validate() const {
    if (dim <= 0) throw std::invalid_argument("problem dimension must be positive");
    if (g.empty()) throw std::invalid_argument("problem needs at least one term (n >= 1)");
    if (f.size() != g.size())
      throw std::invalid_argument("smooth and nonsmooth term lists differ in length");
    if (!r.prox) throw std::invalid_argument("regularizer r has no prox");
    for (Index i = 0; i < size(); ++i) {
      if (!g[i].prox) throw std::invalid_argument("term " + std::to_string(i) + " has no prox");
      if (!f[i].gradient) throw std::invalid_argument("term " + std::to_string(i) + " has no gradient");
      if (!(f[i].lipschitz >= 0.0))
        throw std::invalid_argument("term " + std::to_string(i) + " has a negative Lipschitz bound");
    }
  }
};

/// Builds a problem with every f_i = 0.
inline ProblemSpec make_prox_problem(Index dim, ProxFn r, std::vector<ProxFn> g, std::string kind) {
  ProblemSpec p;
  p.dim = dim;
  p.r = std::move(r);
  p.f.assign(g.size(), SmoothFn::zero());
  p.g = std::move(g);
  p.kind = std::move(kind);
  return p;
}

/// Runs fn(begin, end) over [0, count) split into `threads` contiguous ranges.
template <class Fn>
void parallel_for(Index count, int threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    fn(Index{0}, count);
    return;
  }
  const Index workers = std::min<Index>(threads, count);
  const Index step = (count + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (Index w = 1; w < workers; ++w) {
      const Index b = w * step;
      const Index e = std::min(count, b + step);
      if (b >= e) break;
      pool.emplace_back([&fn, &errors, w, b, e] {
        try {
          fn(b, e);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    try {
      fn(Index{0}, std::min(count, step));
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  // lowest failing range wins so the reported term index is thread-count independent
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Mean of the rows of z. Rows are summed in `chunks` contiguous chunks of
/// size ceil(n/chunks); partials are combined in chunk order, so the result
/// is bitwise identical for every thread count.
inline Vec row_mean(const Block& z, Index chunks, int threads = 1) {
  const Index n = z.rows();
  const Index d = z.cols();
  chunks = std::clamp<Index>(chunks, 1, std::max<Index>(n, 1));
  const Index width = (n + chunks - 1) / chunks;
  Mat partial = Mat::Zero(d, chunks);
  parallel_for(chunks, threads, [&](Index cb, Index ce) {
    for (Index c = cb; c < ce; ++c) {
      const Index rb = c * width;
      const Index re = std::min(n, rb + width);
      for (Index i = rb; i < re; ++i) partial.col(c) += z.row(i).transpose();
    }
  });
  Vec total = Vec::Zero(d);
  for (Index c = 0; c < chunks; ++c) total += partial.col(c);
  return total / static_cast<double>(n);
}

/// Iterate of the splitting methods: z holds one d-vector per term and zbar
/// caches their mean.
struct SolverState {
  Block z;
  Vec zbar;
  double alpha = 1.0;
  long k = 0;

  static SolverState zeros(const ProblemSpec& problem, double alpha) {
    SolverState s;
    s.z = Block::Zero(problem.size(), problem.dim);
    s.zbar = Vec::Zero(problem.dim);
    s.alpha = alpha;
    return s;
  }

  static SolverState from_block(const ProblemSpec& problem, Block z0, double alpha) {
    if (z0.rows() != problem.size() || z0.cols() != problem.dim)
      throw std::invalid_argument("warm start has the wrong shape");
    SolverState s;
    s.zbar = row_mean(z0, problem.chunks());
    s.z = std::move(z0);
    s.alpha = alpha;
    return s;
  }

  /// ||zbar - mean(rows)||, measured with the deterministic reduction.
  double zbar_drift(Index chunks) const { return (zbar - row_mean(z, chunks)).norm(); }
};

namespace detail {

inline void require_finite(const Vec& v, Index term, const char* what) {
  if (!v.allFinite()) {
    const std::string who = term < 0 ? std::string("regularizer r") : "term " + std::to_string(term);
    throw NumericalError(std::string("non-finite ") + what + " in " + who, term);
  }
}

inline Vec prox_r(const ProblemSpec& problem, const Vec& zbar, double alpha) {
  Vec x = problem.r.prox(zbar, alpha);
  require_finite(x, -1, "prox output");
  return x;
}

/// x'_i = prox_{alpha g_i}(2 x_half - z_i - alpha grad f_i(x_half))
inline Vec term_update(const ProblemSpec& problem, Index i, const Vec& x_half,
                       const Eigen::Ref<const Vec>& z_i, double alpha) {
  Vec v = 2.0 * x_half - z_i;
  if (!problem.f[i].is_zero) {
    Vec grad = problem.f[i].gradient(x_half);
    require_finite(grad, i, "gradient");
    v -= alpha * grad;
  }
  Vec x = problem.g[i].prox(v, alpha);
  require_finite(x, i, "prox output");
  return x;
}

inline void check_state(const SolverState& s, const ProblemSpec& problem) {
  if (s.z.rows() != problem.size() || s.z.cols() != problem.dim || s.zbar.size() != problem.dim)
    throw std::invalid_argument("solver state does not match problem dimensions");
  if (!(s.alpha > 0.0) || !std::isfinite(s.alpha))
    throw std::invalid_argument("step size alpha must be positive and finite");
}

}  // namespace detail

struct ResidualMap {
  Block p;          ///< (x_half - x'_i) / alpha per row
  Vec x_half;       ///< prox_{alpha r}(zbar)
  Block x_primes;   ///< x'_i per row
  double norm() const { return p.norm(); }
};

/// Fixed-point residual p(z); PPG is exactly z <- z - alpha p(z).
/// Does not touch the state.
inline ResidualMap residual_map(const SolverState& state, const ProblemSpec& problem, int threads = 1) {
  detail::check_state(state, problem);
  const Index n = problem.size();
  ResidualMap out;
  out.x_half = detail::prox_r(problem, state.zbar, state.alpha);
  out.x_primes.resize(n, problem.dim);
  out.p.resize(n, problem.dim);
  parallel_for(n, threads, [&](Index b, Index e) {
    for (Index i = b; i < e; ++i) {
      Vec xi = detail::term_update(problem, i, out.x_half, state.z.row(i).transpose(), state.alpha);
      out.x_primes.row(i) = xi.transpose();
      out.p.row(i) = ((out.x_half - xi) / state.alpha).transpose();
    }
  });
  return out;
}

/// r(x) + (1/n) sum_i (f_i(x) + g_i(x)); nullopt when some term has no value handle.
inline std::optional<double> objective(const Vec& x, const ProblemSpec& problem) {
  if (!problem.r.has_value()) return std::nullopt;
  double sum = 0.0;
  for (Index i = 0; i < problem.size(); ++i) {
    if (!problem.f[i].value || !problem.g[i].has_value()) return std::nullopt;
    sum += problem.f[i].value(x) + problem.g[i].value(x);
  }
  return problem.r.value(x) + sum / static_cast<double>(problem.size());
}

/// E = r(x_half) + fbar(x_half) + (1/n) sum_i g_i(x'_i) - ref_objective.
/// Not necessarily positive away from the solution.
inline std::optional<double> e_gap(const Vec& x_half, const Block& x_primes, double ref_objective,
                                   const ProblemSpec& problem) {
  if (!problem.r.has_value()) return std::nullopt;
  const Index n = problem.size();
  if (x_primes.rows() != n) throw std::invalid_argument("x_primes must have one row per term");
  double fsum = 0.0, gsum = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (!problem.f[i].value || !problem.g[i].has_value()) return std::nullopt;
    fsum += problem.f[i].value(x_half);
    gsum += problem.g[i].value(x_primes.row(i).transpose());
  }
  return problem.r.value(x_half) + (fsum + gsum) / static_cast<double>(n) - ref_objective;
}

}  // namespace ppg

#endif  // PPG_CORE_HPP
