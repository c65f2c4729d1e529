#ifndef PPG_PROBLEMS_HPP
#define PPG_PROBLEMS_HPP

#include "ppg/coloring.hpp"
#include "ppg/core.hpp"
#include "ppg/prox.hpp"

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppg {

// ---------------------------------------------------------------------------
// Smooth building blocks
// ---------------------------------------------------------------------------

namespace smooth {

/// (1/2)(a^T x - y)^2, Lipschitz constant ||a||^2.
inline SmoothFn squared_residual(Vec a, double y) {
  SmoothFn f;
  f.lipschitz = a.squaredNorm();
  f.value = [a, y](const Vec& x) {
    const double r = a.dot(x) - y;
    return 0.5 * r * r;
  };
  f.gradient = [a, y](const Vec& x) { return Vec((a.dot(x) - y) * a); };
  return f;
}

/// (w/2)||x - c||^2
inline SmoothFn sq_dist(double w, Vec c) {
  SmoothFn f;
  f.lipschitz = w;
  f.value = [w, c](const Vec& x) { return 0.5 * w * (x - c).squaredNorm(); };
  f.gradient = [w, c](const Vec& x) { return Vec(w * (x - c)); };
  return f;
}

/// s * f
inline SmoothFn scaled(SmoothFn f, double s) {
  SmoothFn out;
  out.lipschitz = s * f.lipschitz;
  out.is_zero = f.is_zero;
  out.value = [v = f.value, s](const Vec& x) { return s * v(x); };
  out.gradient = [gr = f.gradient, s](const Vec& x) { return Vec(s * gr(x)); };
  return out;
}

}  // namespace smooth

// ---------------------------------------------------------------------------
// Recasting r + (1/n) sum f_i + (1/m) sum g_j into the equal-count form
// ---------------------------------------------------------------------------

inline constexpr Index kDefaultRecastCap = 1'000'000;

/// r + (1/n) sum_i f_i + (1/m) sum_j g_j, evaluated directly.
inline std::optional<double> natural_objective(const ProxFn& r, const std::vector<SmoothFn>& f,
                                               const std::vector<ProxFn>& g, const Vec& x) {
  if (!r.has_value()) return std::nullopt;
  double fs = 0.0, gs = 0.0;
  for (const auto& fi : f) fs += fi.value(x);
  for (const auto& gj : g) {
    if (!gj.has_value()) return std::nullopt;
    gs += gj.value(x);
  }
  return r.value(x) + fs / double(f.size()) + gs / double(g.size());
}

/// n*m terms; term (i, j) = f_i + g_j, stored at index i*m + j.
inline ProblemSpec recast_symmetric(Index dim, ProxFn r, const std::vector<SmoothFn>& f,
                                    const std::vector<ProxFn>& g, Index cap = kDefaultRecastCap) {
  const auto n = static_cast<Index>(f.size());
  const auto m = static_cast<Index>(g.size());
  if (n == 0 || m == 0) throw std::invalid_argument("recast needs at least one smooth and one nonsmooth term");
  if (n > cap / m) throw std::invalid_argument("recast would create " + std::to_string(n) + "*" +
                                               std::to_string(m) + " terms, above the cap of " + std::to_string(cap));
  ProblemSpec p;
  p.dim = dim;
  p.r = std::move(r);
  p.kind = "recast-symmetric";
  p.f.reserve(static_cast<std::size_t>(n * m));
  p.g.reserve(static_cast<std::size_t>(n * m));
  for (const auto& fi : f)
    for (const auto& gj : g) {
      p.f.push_back(fi);
      p.g.push_back(gj);
    }
  return p;
}

/// n + m terms: ((m+n)/n) f_i paired with 0, then 0 paired with ((m+n)/m) g_j.
inline ProblemSpec recast_weighted(Index dim, ProxFn r, const std::vector<SmoothFn>& f,
                                   const std::vector<ProxFn>& g) {
  const double n = double(f.size());
  const double m = double(g.size());
  if (f.empty() || g.empty()) throw std::invalid_argument("recast needs at least one smooth and one nonsmooth term");
  ProblemSpec p;
  p.dim = dim;
  p.r = std::move(r);
  p.kind = "recast-weighted";
  for (const auto& fi : f) {
    p.f.push_back(smooth::scaled(fi, (m + n) / n));
    p.g.push_back(ProxFn::zero());
  }
  for (const auto& gj : g) {
    p.f.push_back(SmoothFn::zero());
    p.g.push_back(prox::scaled(gj, (m + n) / m));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Overlapping group lasso
// ---------------------------------------------------------------------------

/// n collections of index groups; groups inside one collection are disjoint.
struct GroupPartition {
  std::vector<std::vector<std::vector<Index>>> collections;

  Index size() const { return static_cast<Index>(collections.size()); }

  void validate(Index dim) const {
    if (collections.empty()) throw std::invalid_argument("group partition has no collections");
    for (std::size_t c = 0; c < collections.size(); ++c) {
      std::set<Index> seen;
      for (const auto& grp : collections[c]) {
        if (grp.empty()) throw std::invalid_argument("collection " + std::to_string(c) + " has an empty group");
        for (Index j : grp) {
          if (j < 0 || j >= dim)
            throw std::invalid_argument("group index " + std::to_string(j) + " out of range in collection " +
                                        std::to_string(c));
          if (!seen.insert(j).second)
            throw std::invalid_argument("groups overlap inside collection " + std::to_string(c) + " at index " +
                                        std::to_string(j));
        }
      }
    }
  }

  /// Indices not covered by any group of collection c.
  std::vector<Index> complement(Index c, Index dim) const {
    std::vector<bool> hit(static_cast<std::size_t>(dim), false);
    for (const auto& grp : collections[static_cast<std::size_t>(c)])
      for (Index j : grp) hit[static_cast<std::size_t>(j)] = true;
    std::vector<Index> out;
    for (Index j = 0; j < dim; ++j)
      if (!hit[static_cast<std::size_t>(j)]) out.push_back(j);
    return out;
  }

  /// Staggered layout: collection c holds consecutive groups of `group_size`
  /// indices starting at c*shift, as many as fit in [0, dim). For dim = 42,
  /// n = 3, size 9, shift 3 this is the classic 12-group overlapping layout.
  static GroupPartition staggered(Index dim, Index n, Index group_size = 9, Index shift = 3) {
    GroupPartition p;
    for (Index c = 0; c < n; ++c) {
      std::vector<std::vector<Index>> coll;
      for (Index start = c * shift; start + group_size <= dim; start += group_size) {
        std::vector<Index> grp(static_cast<std::size_t>(group_size));
        for (Index j = 0; j < group_size; ++j) grp[static_cast<std::size_t>(j)] = start + j;
        coll.push_back(std::move(grp));
      }
      p.collections.push_back(std::move(coll));
    }
    return p;
  }
};

/// 1/2||Ax - b||^2 + lambda1 * sum_G ||x_G||, recast with one term per
/// collection and lambda2 = n * lambda1. `alpha` selects the cached Cholesky
/// factorization used by prox_r.
inline ProblemSpec build_group_lasso(const Mat& A, const Vec& b, double lambda1, const GroupPartition& partition,
                                     double alpha) {
  if (A.rows() != b.size()) throw std::invalid_argument("A and b have different row counts");
  if (lambda1 < 0.0) throw std::invalid_argument("lambda1 must be non-negative");
  partition.validate(A.cols());
  const Index n = partition.size();
  const double lambda2 = double(n) * lambda1;

  std::vector<ProxFn> g;
  for (Index c = 0; c < n; ++c) {
    auto groups = std::make_shared<const std::vector<std::vector<Index>>>(
        partition.collections[static_cast<std::size_t>(c)]);
    ProxFn h;
    h.prox = [groups, lambda2](const Vec& v, double a) {
      Vec out = v;
      for (const auto& grp : *groups) out(grp) = soft_threshold_vector(v(grp), a * lambda2);
      return out;
    };
    h.value = [groups, lambda2](const Vec& x) {
      double s = 0.0;
      for (const auto& grp : *groups) s += Vec(x(grp)).norm();
      return lambda2 * s;
    };
    h.is_zero = lambda2 == 0.0 || groups->empty();
    g.push_back(std::move(h));
  }
  return make_prox_problem(A.cols(), prox::least_squares(A, b, alpha), std::move(g), "group-lasso");
}

// ---------------------------------------------------------------------------
// SVM
// ---------------------------------------------------------------------------

/// Rows of `a` are feature vectors, labels y in {-1, +1}.
struct SvmData {
  Block a;
  Vec y;
  double lambda = 0.1;

  void validate() const {
    if (a.rows() != y.size()) throw std::invalid_argument("SVM feature rows and labels differ in count");
    if (a.rows() == 0) throw std::invalid_argument("SVM data is empty");
    if (!(lambda > 0.0)) throw std::invalid_argument("SVM lambda must be positive");
    for (Index i = 0; i < a.rows(); ++i) {
      if (y(i) != 1.0 && y(i) != -1.0) throw std::invalid_argument("SVM label at row " + std::to_string(i) + " is not +/-1");
      if (a.row(i).squaredNorm() == 0.0) throw std::invalid_argument("SVM feature row " + std::to_string(i) + " is zero");
    }
  }
};

namespace detail {

inline std::vector<ProxFn> hinge_terms(const std::shared_ptr<const SvmData>& data) {
  const Index n = data->a.rows();
  auto nsq = std::make_shared<Vec>(data->a.rowwise().squaredNorm());
  std::vector<ProxFn> g;
  g.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    ProxFn h;
    h.prox = [data, nsq, i](const Vec& x, double al) {
      return prox_hinge(x, data->a.row(i).transpose(), data->y(i), al, (*nsq)(i));
    };
    h.value = [data, i](const Vec& x) { return std::max(1.0 - data->y(i) * data->a.row(i).dot(x), 0.0); };
    g.push_back(std::move(h));
  }
  return g;
}

}  // namespace detail

/// r = (lambda/2)||x||^2, g_i = hinge on row i, f = 0.
inline ProblemSpec build_svm(SvmData data) {
  data.validate();
  auto shared = std::make_shared<const SvmData>(std::move(data));
  return make_prox_problem(shared->a.cols(), prox::sq_norm(shared->lambda), detail::hinge_terms(shared), "svm");
}

/// Same objective with the regularizer folded into every term:
/// g_i = hinge_i + (lambda/2)||x||^2, r = 0. This is the form stochastic
/// proximal iteration needs.
inline ProblemSpec build_svm_folded(SvmData data) {
  data.validate();
  auto shared = std::make_shared<const SvmData>(std::move(data));
  std::vector<ProxFn> g = detail::hinge_terms(shared);
  for (auto& h : g) h = prox::add_sq_norm(std::move(h), shared->lambda);
  return make_prox_problem(shared->a.cols(), ProxFn::zero(), std::move(g), "svm");
}

// ---------------------------------------------------------------------------
// Fused lasso
// ---------------------------------------------------------------------------

/// Absolute slack used when evaluating interval indicators on iterates.
inline constexpr double kFeasibilityTol = 1e-9;

namespace detail {

/// Indicator of |x_{j+1} - x_j| <= eps over pairs (j, j+1), j = first, first+2, ...
inline ProxFn chain_pairs_indicator(Index dim, Index first, double eps) {
  std::vector<Index> left, right;
  for (Index j = first; j + 1 < dim; j += 2) {
    left.push_back(j);
    right.push_back(j + 1);
  }
  ProxFn h;
  if (left.empty() || std::isinf(eps)) {
    h = ProxFn::zero();
    return h;
  }
  const ProxFn box = prox::box(Interval(-eps, eps));
  h.prox = [left, right, box](const Vec& v, double a) {
    auto [xl, xr] = prox_pair_diff(box, v(right), v(left), a);
    Vec out = v;
    out(right) = xl;
    out(left) = xr;
    return out;
  };
  h.value = [left, right, eps](const Vec& x) {
    for (std::size_t k = 0; k < left.size(); ++k)
      if (std::abs(x(right[k]) - x(left[k])) > eps + kFeasibilityTol) return kInf;
    return 0.0;
  };
  return h;
}

}  // namespace detail

/// lambda||x||_1 + (1/n) sum_i (1/2)(a_i^T x - y_i)^2 s.t. |x_{j+1} - x_j| <= eps,
/// recast as 2n terms: term 2i pairs l_i with the odd-pair constraints
/// (x_1,x_2),(x_3,x_4),..., term 2i+1 pairs l_i with the even-pair ones.
inline ProblemSpec build_fused_lasso(const Mat& A, const Vec& y, double lambda, double eps) {
  if (A.rows() != y.size()) throw std::invalid_argument("A and y have different row counts");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
  const Index d = A.cols();
  const ProxFn g_odd = detail::chain_pairs_indicator(d, 0, eps);
  const ProxFn g_even = detail::chain_pairs_indicator(d, 1, eps);
  ProblemSpec p;
  p.dim = d;
  p.r = prox::l1_norm(lambda);
  p.kind = "fused-lasso";
  for (Index i = 0; i < A.rows(); ++i) {
    const SmoothFn li = smooth::squared_residual(A.row(i).transpose(), y(i));
    p.f.push_back(li);
    p.g.push_back(g_odd);
    p.f.push_back(li);
    p.g.push_back(g_even);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Network lasso
// ---------------------------------------------------------------------------

/// sum_v [lambda1 ||x_v||_1 + l_v(x_v)] + lambda2 sum_{uv in E} ||x_u - x_v||
/// over the stacked variable (x_0, ..., x_{V-1}) in R^{V d}. The edge
/// penalty is split by color class; term c carries sum_v l_v and
/// lambda3 = C * lambda2 times the class-c edge penalties.
inline ProblemSpec build_network_lasso(const Graph& graph, Index d, const std::vector<SmoothFn>& losses,
                                       double lambda1, double lambda2,
                                       std::optional<EdgeColoring> coloring = std::nullopt) {
  graph.validate();
  if (static_cast<Index>(losses.size()) != graph.vertices)
    throw std::invalid_argument("network lasso needs one loss per vertex");
  if (d <= 0) throw std::invalid_argument("per-vertex dimension must be positive");
  if (!coloring) coloring = greedy_edge_coloring(graph);
  if (!is_valid_edge_coloring(graph, *coloring)) throw std::invalid_argument("edge coloring is invalid");

  const Index V = graph.vertices;
  const Index C = std::max<Index>(coloring->colors(), 1);
  const double lambda3 = double(C) * lambda2;

  SmoothFn f;
  auto shared_losses = std::make_shared<const std::vector<SmoothFn>>(losses);
  f.value = [shared_losses, d](const Vec& x) {
    double s = 0.0;
    for (std::size_t v = 0; v < shared_losses->size(); ++v)
      s += (*shared_losses)[v].value(x.segment(Index(v) * d, d));
    return s;
  };
  f.gradient = [shared_losses, d](const Vec& x) {
    Vec out(x.size());
    for (std::size_t v = 0; v < shared_losses->size(); ++v)
      out.segment(Index(v) * d, d) = (*shared_losses)[v].gradient(x.segment(Index(v) * d, d));
    return out;
  };
  f.is_zero = std::all_of(losses.begin(), losses.end(), [](const SmoothFn& l) { return l.is_zero; });
  for (const auto& l : losses) f.lipschitz = std::max(f.lipschitz, l.lipschitz);

  ProblemSpec p;
  p.dim = V * d;
  p.r = prox::l1_norm(lambda1);
  p.kind = "network-lasso";
  const ProxFn edge_norm = prox::l2_norm(lambda3);
  for (Index c = 0; c < C; ++c) {
    std::vector<std::pair<Index, Index>> pairs;
    if (c < coloring->colors())
      for (Index e : coloring->classes[static_cast<std::size_t>(c)]) pairs.push_back(graph.edges[std::size_t(e)]);
    ProxFn h;
    if (pairs.empty() || lambda3 == 0.0) {
      h = ProxFn::zero();
    } else {
      h.prox = [pairs, edge_norm, d](const Vec& v, double a) {
        Vec out = v;
        for (auto [u, w] : pairs) {
          auto [xu, xw] = prox_pair_diff(edge_norm, v.segment(u * d, d), v.segment(w * d, d), a);
          out.segment(u * d, d) = xu;
          out.segment(w * d, d) = xw;
        }
        return out;
      };
      h.value = [pairs, lambda3, d](const Vec& x) {
        double s = 0.0;
        for (auto [u, w] : pairs) s += (x.segment(u * d, d) - x.segment(w * d, d)).norm();
        return lambda3 * s;
      };
    }
    p.f.push_back(f);
    p.g.push_back(std::move(h));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Generalized linear model
// ---------------------------------------------------------------------------

/// (1/n) sum_i A(x_i^T beta) - T_i x_i^T beta with log-partition `link`.
inline ProblemSpec build_glm(const Mat& X, const Vec& T, const ScalarFn& link) {
  if (X.rows() != T.size()) throw std::invalid_argument("X and T have different row counts");
  if (!link.value || !link.slope) throw std::invalid_argument("GLM link needs value and slope");
  auto rows = std::make_shared<const Block>(X);
  std::vector<ProxFn> g;
  for (Index i = 0; i < X.rows(); ++i) {
    const double Ti = T(i);
    ProxFn h;
    h.prox = [rows, i, Ti, link](const Vec& x, double a) {
      return prox_glm_1d(x, rows->row(i).transpose(), Ti, link, a);
    };
    h.value = [rows, i, Ti, link](const Vec& x) {
      const double t = rows->row(i).dot(x);
      return link.value(t) - Ti * t;
    };
    g.push_back(std::move(h));
  }
  return make_prox_problem(X.cols(), ProxFn::zero(), std::move(g), "glm");
}

}  // namespace ppg

#endif  // PPG_PROBLEMS_HPP
