#ifndef PPG_PROX_HPP
#define PPG_PROX_HPP

#include "ppg/core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace ppg {

// ---------------------------------------------------------------------------
// Elementary operators
// ---------------------------------------------------------------------------

/// Closed interval [lo, hi]; either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi)
      throw std::invalid_argument("interval requires lo <= hi");
  }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

inline double soft_threshold_scalar(double x, double lam) {
  if (x > lam) return x - lam;
  if (x < -lam) return x + lam;
  return 0.0;
}

/// Elementwise scalar soft-thresholding (prox of lam*||.||_1).
inline Vec soft_threshold(const Vec& x, double lam) {
  if (lam == 0.0) return x;
  return x.unaryExpr([lam](double v) { return soft_threshold_scalar(v, lam); });
}

/// max{1 - lam/||x||, 0} x, the prox of lam*||.||_2.
inline Vec soft_threshold_vector(const Vec& x, double lam) {
  if (lam == 0.0) return x;
  const double nrm = x.norm();
  if (nrm <= lam) return Vec::Zero(x.size());
  return (1.0 - lam / nrm) * x;
}

/// U s_lam(Sigma) V^T, the prox of lam*||.||_* (nuclear norm).
inline Mat soft_threshold_matrix(const Mat& m, double lam) {
  if (lam == 0.0) return m;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge", -1);
  const Vec s = svd.singularValues().unaryExpr([lam](double v) { return std::max(v - lam, 0.0); });
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

inline double project_interval(double x, const Interval& iv) { return std::clamp(x, iv.lo, iv.hi); }

inline Vec project_interval(const Vec& x, const Interval& iv) {
  return x.unaryExpr([&iv](double v) { return project_interval(v, iv); });
}

/// x0 / (1 + alpha*lam), the prox of (lam/2)||.||^2.
inline Vec prox_scaled_sq_norm(const Vec& x0, double lam, double alpha) {
  if (lam == 0.0) return x0;
  return x0 / (1.0 + alpha * lam);
}

/// Closed-form prox of alpha*max{1 - y a^T x, 0}.
inline Vec prox_hinge(const Vec& x0, const Eigen::Ref<const Vec>& a, double y, double alpha, double a_norm_sq) {
  const double step = project_interval((1.0 - y * a.dot(x0)) / a_norm_sq, Interval(0.0, alpha));
  return x0 + (step * y) * a;
}

inline Vec prox_hinge(const Vec& x0, const Eigen::Ref<const Vec>& a, double y, double alpha) {
  const double nsq = a.squaredNorm();
  if (nsq == 0.0) throw std::invalid_argument("hinge prox needs a nonzero feature vector");
  return prox_hinge(x0, a, y, alpha, nsq);
}

// ---------------------------------------------------------------------------
// Scalar convex functions and the one-dimensional reduction
// ---------------------------------------------------------------------------

/// Convex f: R -> R u {+inf}. `slope` is the right derivative (it may be
/// +/-inf outside the domain); it is all the bisection solver needs.
/// `curvature` enables safeguarded Newton; `prox(t, c)` = prox_{c f}(t)
/// short-circuits the inner solve when a closed form exists.
struct ScalarFn {
  std::function<double(double)> value;
  std::function<double(double)> slope;
  std::function<double(double)> curvature;
  std::function<double(double, double)> prox;

  static ScalarFn zero() {
    return {[](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; },
            [](double t, double) { return t; }};
  }
  /// f(t) = c t
  static ScalarFn linear(double c) {
    return {[c](double t) { return c * t; }, [c](double) { return c; }, [](double) { return 0.0; },
            [c](double t, double s) { return t - s * c; }};
  }
  /// f(t) = lam |t|
  static ScalarFn abs(double lam) {
    return {[lam](double t) { return lam * std::abs(t); },
            [lam](double t) { return t < 0.0 ? -lam : lam; }, nullptr,
            [lam](double t, double s) { return soft_threshold_scalar(t, s * lam); }};
  }
  /// f(t) = max{1 - y t, 0}; solved by bisection (no closed form attached).
  static ScalarFn hinge(double y) {
    ScalarFn f;
    f.value = [y](double t) { return std::max(1.0 - y * t, 0.0); };
    if (y > 0)
      f.slope = [](double t) { return t < 1.0 ? -1.0 : 0.0; };
    else
      f.slope = [](double t) { return t < -1.0 ? 0.0 : 1.0; };
    return f;
  }
  /// Indicator of an interval.
  static ScalarFn indicator(Interval iv) {
    ScalarFn f;
    f.value = [iv](double t) { return iv.contains(t) ? 0.0 : kInf; };
    f.slope = [iv](double t) {
      if (t < iv.lo) return -kInf;
      if (t >= iv.hi) return kInf;
      return 0.0;
    };
    f.prox = [iv](double t, double) { return project_interval(t, iv); };
    return f;
  }
  /// A(t) = t^2 / 2, Gaussian log-partition.
  static ScalarFn gaussian() {
    return {[](double t) { return 0.5 * t * t; }, [](double t) { return t; }, [](double) { return 1.0; },
            nullptr};
  }
  /// A(t) = log(1 + e^t), logistic log-partition.
  static ScalarFn logistic() {
    ScalarFn f;
    f.value = [](double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); };
    f.slope = [](double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); };
    f.curvature = [](double t) {
      const double s = t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
      return s * (1.0 - s);
    };
    return f;
  }
  /// f(t) - c t
  ScalarFn minus_linear(double c) const {
    ScalarFn out;
    out.value = [v = value, c](double t) { return v(t) - c * t; };
    out.slope = [s = slope, c](double t) { return s(t) - c; };
    out.curvature = curvature;
    if (prox) out.prox = [p = prox, c](double t, double s) { return p(t + s * c, s); };
    return out;
  }
};

inline constexpr int kMaxInnerSteps = 200;
inline constexpr double kInnerTol = 1e-12;

namespace detail {

/// beta minimizing alpha*f(t0 + beta*s) + (s/2) beta^2 for s > 0.
inline double solve_affine_step(const ScalarFn& f, double t0, double s, double alpha) {
  if (f.prox) return (f.prox(t0, alpha * s) - t0) / s;

  // sign of the right derivative of the 1-D objective, divided by s
  auto h = [&](double b) {
    const double v = alpha * f.slope(t0 + b * s) + b;
    if (std::isnan(v)) throw ConvergenceError("1-D prox: slope evaluated to NaN");
    return v;
  };

  double lo = -1.0, hi = 1.0;
  for (int grow = 0; h(lo) >= 0.0; ++grow) {
    if (grow > 1100) throw ConvergenceError("1-D prox: could not bracket the minimizer");
    hi = lo;
    lo *= 2.0;
  }
  for (int grow = 0; h(hi) < 0.0; ++grow) {
    if (grow > 1100) throw ConvergenceError("1-D prox: could not bracket the minimizer");
    lo = hi;
    hi *= 2.0;
  }

  if (f.curvature) {
    double b = std::clamp(0.0, lo, hi);
    for (int it = 0; it < kMaxInnerSteps; ++it) {
      const double hb = h(b);
      if (hb >= 0.0) hi = b; else lo = b;
      const double deriv = alpha * s * f.curvature(t0 + b * s) + 1.0;
      double next = b - hb / deriv;
      if (!(next > lo && next < hi)) next = lo + 0.5 * (hi - lo);
      if (std::abs(next - b) <= kInnerTol || hi - lo <= kInnerTol) return next;
      b = next;
    }
    throw ConvergenceError("1-D prox: Newton did not converge in 200 steps");
  }

  for (int it = 0; it < kMaxInnerSteps; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (hi - lo <= kInnerTol || mid <= lo || mid >= hi) return mid;
    const double hm = h(mid);
    if (hm == 0.0) return mid;
    if (hm > 0.0) hi = mid; else lo = mid;
  }
  throw ConvergenceError("1-D prox: bisection did not converge in 200 steps");
}

}  // namespace detail

/// prox_{c f}(t0) for scalar f.
inline double prox_scalar(const ScalarFn& f, double t0, double c) {
  return t0 + detail::solve_affine_step(f, t0, 1.0, c);
}

/// prox of alpha*f(a^T x) at x0: x0 + beta a where beta solves the 1-D problem
/// min_beta alpha*f(a^T x0 + beta ||a||^2) + (||a||^2/2) beta^2.
inline Vec prox_affine_1d(const Eigen::Ref<const Vec>& a, const ScalarFn& f, const Vec& x0, double alpha) {
  const double s = a.squaredNorm();
  if (s == 0.0) throw std::invalid_argument("prox_affine_1d requires a nonzero direction");
  const double beta = detail::solve_affine_step(f, a.dot(x0), s, alpha);
  return x0 + beta * a;
}

/// prox of alpha*[A(xi^T b) - Ti xi^T b] at x0.
inline Vec prox_glm_1d(const Vec& x0, const Eigen::Ref<const Vec>& xi, double Ti, const ScalarFn& link,
                       double alpha) {
  if (xi.squaredNorm() == 0.0) return x0;
  return prox_affine_1d(xi, link.minus_linear(Ti), x0, alpha);
}

/// prox of alpha*f(sum_i a_i xi_i) over the stacked rows of `xi`; f acts on
/// R^d through `f.prox`.
inline Block prox_sum_coupling(const Vec& a, const ProxFn& f, const Block& xi, double alpha) {
  if (a.size() != xi.rows()) throw std::invalid_argument("coupling weights must match block rows");
  const double nsq = a.squaredNorm();
  if (nsq == 0.0) throw std::invalid_argument("coupling weights must be nonzero");
  const Vec combo = xi.transpose() * a;
  const Vec w = f.prox(combo, alpha * nsq);
  const Vec v = (combo - w) / nsq;
  Block out = xi;
  for (Index i = 0; i < xi.rows(); ++i) out.row(i) -= a(i) * v.transpose();
  return out;
}

/// prox of alpha*f(x + y).
inline std::pair<Vec, Vec> prox_pair_sum(const ProxFn& f, const Vec& x0, const Vec& y0, double alpha) {
  const Vec p = f.prox(x0 + y0, 2.0 * alpha);
  return {0.5 * (x0 - y0 + p), 0.5 * (y0 - x0 + p)};
}

/// prox of alpha*f(x - y).
inline std::pair<Vec, Vec> prox_pair_diff(const ProxFn& f, const Vec& x0, const Vec& y0, double alpha) {
  const Vec p = f.prox(x0 - y0, 2.0 * alpha);
  return {0.5 * (x0 + y0 + p), 0.5 * (x0 + y0 - p)};
}

// ---------------------------------------------------------------------------
// Cached least-squares prox
// ---------------------------------------------------------------------------

/// Cholesky factor of I + alpha A^T A together with alpha A^T b, so that the
/// prox of (1/2)||Ax - b||^2 costs two triangular solves.
class CachedQuadraticProx {
 public:
  CachedQuadraticProx(const Mat& A, const Vec& b, double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (A.rows() != b.size()) throw std::invalid_argument("A and b row counts differ");
    Mat m = Mat::Identity(A.cols(), A.cols());
    m.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose(), alpha);
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky of I + alpha A^T A failed", -1);
    chol_ = llt.matrixL();
    atb_ = alpha * (A.transpose() * b);
  }

  double alpha() const { return alpha_; }
  bool valid_for(double alpha) const { return alpha == alpha_; }
  const Mat& chol() const { return chol_; }
  const Vec& atb() const { return atb_; }

  /// Solves (I + alpha A^T A) u = alpha A^T b + v.
  Vec solve(const Vec& v) const {
    Vec u = atb_ + v;
    chol_.triangularView<Eigen::Lower>().solveInPlace(u);
    chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(u);
    return u;
  }

 private:
  double alpha_;
  Mat chol_;
  Vec atb_;
};

inline Vec prox_quadratic(const CachedQuadraticProx& cache, const Vec& v) { return cache.solve(v); }

// ---------------------------------------------------------------------------
// ProxFn factories
// ---------------------------------------------------------------------------

namespace prox {

inline ProxFn l1_norm(double lam) {
  ProxFn h;
  h.prox = [lam](const Vec& x, double a) { return soft_threshold(x, a * lam); };
  h.value = [lam](const Vec& x) { return lam * x.lpNorm<1>(); };
  h.is_zero = lam == 0.0;
  return h;
}

inline ProxFn l2_norm(double lam) {
  ProxFn h;
  h.prox = [lam](const Vec& x, double a) { return soft_threshold_vector(x, a * lam); };
  h.value = [lam](const Vec& x) { return lam * x.norm(); };
  h.is_zero = lam == 0.0;
  return h;
}

/// (lam/2)||x||^2
inline ProxFn sq_norm(double lam) {
  ProxFn h;
  h.prox = [lam](const Vec& x, double a) { return prox_scaled_sq_norm(x, lam, a); };
  h.value = [lam](const Vec& x) { return 0.5 * lam * x.squaredNorm(); };
  h.is_zero = lam == 0.0;
  return h;
}

/// (nu/2)||x - c||^2
inline ProxFn sq_dist(double nu, Vec c) {
  ProxFn h;
  h.prox = [nu, c](const Vec& x, double a) { return Vec((x + (a * nu) * c) / (1.0 + a * nu)); };
  h.value = [nu, c](const Vec& x) { return 0.5 * nu * (x - c).squaredNorm(); };
  return h;
}

inline ProxFn box(Interval iv) {
  ProxFn h;
  h.prox = [iv](const Vec& x, double) { return project_interval(x, iv); };
  h.value = [iv](const Vec& x) {
    for (Index j = 0; j < x.size(); ++j)
      if (!iv.contains(x(j))) return kInf;
    return 0.0;
  };
  return h;
}

/// sum_j f(x_j) for scalar f.
inline ProxFn separable(ScalarFn f) {
  ProxFn h;
  h.prox = [f](const Vec& x, double a) {
    return Vec(x.unaryExpr([&f, a](double t) { return prox_scalar(f, t, a); }));
  };
  h.value = [f](const Vec& x) {
    double s = 0.0;
    for (Index j = 0; j < x.size(); ++j) s += f.value(x(j));
    return s;
  };
  return h;
}

/// max{1 - y a^T x, 0}
inline ProxFn hinge(Vec a, double y) {
  const double nsq = a.squaredNorm();
  if (nsq == 0.0) throw std::invalid_argument("hinge term needs a nonzero feature vector");
  ProxFn h;
  h.prox = [a, y, nsq](const Vec& x, double al) { return prox_hinge(x, a, y, al, nsq); };
  h.value = [a, y](const Vec& x) { return std::max(1.0 - y * a.dot(x), 0.0); };
  return h;
}

/// h(x) + (lam/2)||x||^2, using prox_{a(h + lam/2||.||^2)}(x) = prox_{a'h}(x/(1+a lam)).
inline ProxFn add_sq_norm(ProxFn h, double lam) {
  ProxFn out;
  out.prox = [p = h.prox, lam](const Vec& x, double a) {
    const double shrink = 1.0 + a * lam;
    return p(x / shrink, a / shrink);
  };
  if (h.value) out.value = [v = h.value, lam](const Vec& x) { return v(x) + 0.5 * lam * x.squaredNorm(); };
  return out;
}

/// w * h(x) for w > 0.
inline ProxFn scaled(ProxFn h, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("prox scaling must be positive");
  ProxFn out;
  out.prox = [p = h.prox, w](const Vec& x, double a) { return p(x, a * w); };
  if (h.value) out.value = [v = h.value, w](const Vec& x) { return w * v(x); };
  out.is_zero = h.is_zero;
  return out;
}

/// (1/2)||Ax - b||^2 with a factorization cached for `alpha_hint`; other step
/// sizes fall back to a fresh factorization per call.
inline ProxFn least_squares(Mat A, Vec b, double alpha_hint) {
  auto cache = std::make_shared<const CachedQuadraticProx>(A, b, alpha_hint);
  auto data = std::make_shared<const std::pair<Mat, Vec>>(std::move(A), std::move(b));
  ProxFn h;
  h.prox = [cache, data](const Vec& v, double a) {
    if (cache->valid_for(a)) return prox_quadratic(*cache, v);
    return CachedQuadraticProx(data->first, data->second, a).solve(v);
  };
  h.value = [data](const Vec& x) { return 0.5 * (data->first * x - data->second).squaredNorm(); };
  return h;
}

}  // namespace prox

}  // namespace ppg

#endif  // PPG_PROX_HPP
