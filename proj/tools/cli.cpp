#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#ifndef PPG_VERSION
#define PPG_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace ppg::cli {

namespace {

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw std::invalid_argument(where + ": unknown field '" + it.key() + "'");
}

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw std::invalid_argument(where + ": missing field '" + key + "'");
  if (!j[key].is_number()) throw std::invalid_argument(where + ": field '" + key + "' must be a number");
  return j[key].get<double>();
}

std::string text(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string())
    throw std::invalid_argument(where + ": missing string field '" + key + "'");
  return j[key].get<std::string>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (std::find(kAlgorithms.begin(), kAlgorithms.end(), algo) == kAlgorithms.end())
    throw std::invalid_argument("unknown algo '" + algo + "' (expected ppg, sppg, prox-grad, admm, spi or finito)");
  if (problem_file.empty()) throw std::invalid_argument("no problem file given");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  if (epochs && !(*epochs > 0)) throw std::invalid_argument("epochs must be positive");
  if (threads && *threads < 1) throw std::invalid_argument("threads must be at least 1");
  if (record_every < 0) throw std::invalid_argument("record_every must be non-negative");
  if (!(tol >= 0)) throw std::invalid_argument("tol must be non-negative");
  if (algo == "spi" && alpha) throw std::invalid_argument("spi uses the diminishing step c/k; set spi_c instead of alpha");
}

RunConfig parse_run_config(const json& j, const std::string& base_dir) {
  const std::string where = "run config";
  if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  reject_unknown(j,
                 {"problem_file", "algo", "alpha", "tol", "max_iters", "epochs", "seed", "threads", "record_every",
                  "ergodic", "timing", "metrics_out", "spi_c", "label"},
                 where);
  RunConfig c;
  if (j.contains("problem_file")) c.problem_file = resolve(base_dir, text(j, "problem_file", where));
  if (j.contains("algo")) c.algo = text(j, "algo", where);
  if (j.contains("alpha") && !j["alpha"].is_null()) c.alpha = number(j, "alpha", where);
  if (j.contains("tol")) c.tol = number(j, "tol", where);
  if (j.contains("max_iters")) c.max_iters = j["max_iters"].get<long>();
  if (j.contains("epochs") && !j["epochs"].is_null()) c.epochs = number(j, "epochs", where);
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) c.threads = j["threads"].get<int>();
  if (j.contains("record_every")) c.record_every = j["record_every"].get<long>();
  if (j.contains("ergodic")) c.ergodic = j["ergodic"].get<bool>();
  if (j.contains("timing")) c.timing = j["timing"].get<bool>();
  if (j.contains("metrics_out")) c.metrics_out = resolve(base_dir, text(j, "metrics_out", where));
  if (j.contains("spi_c") && !j["spi_c"].is_null()) c.spi_c = number(j, "spi_c", where);
  if (j.contains("label")) c.label = text(j, "label", where);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  try {
    return parse_run_config(read_json(path), fs::path(path).parent_path().string());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

int default_threads() {
  if (const char* env = std::getenv("PPG_THREADS")) {
    char* end = nullptr;
    const long t = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && t >= 1 && t <= 1024) return int(t);
  }
  return 1;
}

bool is_stochastic(const std::string& algo) { return algo == "sppg" || algo == "spi" || algo == "finito"; }

long step_budget(const RunConfig& cfg, Index n) {
  if (!cfg.epochs) return cfg.max_iters;
  const double per_epoch = is_stochastic(cfg.algo) ? double(n) : 1.0;
  return static_cast<long>(std::ceil(*cfg.epochs * per_epoch));
}

std::string meta_path(const std::string& metrics_out) {
  fs::path p(metrics_out);
  p.replace_extension(".meta.json");
  return p.string();
}

// ---------------------------------------------------------------------------
// Problem files
// ---------------------------------------------------------------------------

namespace {

GroupPartition parse_collections(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + ": 'collections' must be an array");
  GroupPartition p;
  for (const auto& coll : j) {
    std::vector<std::vector<Index>> groups;
    for (const auto& grp : coll) groups.push_back(grp.get<std::vector<Index>>());
    p.collections.push_back(std::move(groups));
  }
  return p;
}

Problem load_problem_json(const json& j, const std::string& path, std::optional<double> alpha) {
  const std::string base = fs::path(path).parent_path().string();
  const std::string where = path;
  const std::string kind = text(j, "kind", where);
  Problem out;
  out.path = path;
  if (j.contains("alpha") && !j["alpha"].is_null()) out.suggested_alpha = number(j, "alpha", where);
  const double a = alpha ? *alpha : out.suggested_alpha.value_or(1.0);

  if (kind == "group-lasso") {
    reject_unknown(j, {"kind", "A", "b", "lambda1", "collections", "alpha"}, where);
    const Mat A = read_dense_csv(resolve(base, text(j, "A", where)));
    const Vec b = read_vector_csv(resolve(base, text(j, "b", where)));
    out.spec = build_group_lasso(A, b, number(j, "lambda1", where), parse_collections(j.at("collections"), where), a);
  } else if (kind == "svm") {
    reject_unknown(j, {"kind", "data", "lambda", "dim", "alpha"}, where);
    std::optional<Index> dim;
    if (j.contains("dim")) dim = j["dim"].get<Index>();
    const LabeledData data = read_libsvm(resolve(base, text(j, "data", where)), dim);
    SvmData svm;
    svm.a = data.features;
    svm.y = data.labels;
    svm.lambda = number(j, "lambda", where);
    out.spec = build_svm(svm);
    out.svm = std::move(svm);
  } else if (kind == "fused-lasso") {
    reject_unknown(j, {"kind", "A", "y", "lambda", "eps", "alpha"}, where);
    const Mat A = read_dense_csv(resolve(base, text(j, "A", where)));
    const Vec y = read_vector_csv(resolve(base, text(j, "y", where)));
    const double eps = !j.contains("eps") || j["eps"].is_null() ? kInf : number(j, "eps", where);
    out.spec = build_fused_lasso(A, y, number(j, "lambda", where), eps);
  } else if (kind == "network-lasso") {
    reject_unknown(j, {"kind", "vertices", "edges", "d", "centers", "lambda1", "lambda2", "alpha"}, where);
    Graph g;
    g.vertices = j.at("vertices").get<Index>();
    for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<Index>(), e.at(1).get<Index>());
    const Index d = j.at("d").get<Index>();
    const Mat centers = read_dense_csv(resolve(base, text(j, "centers", where)));
    if (centers.rows() != g.vertices || centers.cols() != d)
      throw std::invalid_argument(where + ": centers must be vertices x d");
    std::vector<SmoothFn> losses;
    for (Index v = 0; v < g.vertices; ++v) losses.push_back(smooth::sq_dist(1.0, centers.row(v).transpose()));
    out.spec = build_network_lasso(g, d, losses, number(j, "lambda1", where), number(j, "lambda2", where));
  } else if (kind == "glm") {
    reject_unknown(j, {"kind", "X", "T", "link", "alpha"}, where);
    const Mat X = read_dense_csv(resolve(base, text(j, "X", where)));
    const Vec T = read_vector_csv(resolve(base, text(j, "T", where)));
    const std::string link = text(j, "link", where);
    if (link != "logistic" && link != "gaussian")
      throw std::invalid_argument(where + ": link must be 'logistic' or 'gaussian'");
    out.spec = build_glm(X, T, link == "logistic" ? ScalarFn::logistic() : ScalarFn::gaussian());
  } else if (kind == "least-squares") {
    reject_unknown(j, {"kind", "A", "b", "lambda", "alpha"}, where);
    const Mat A = read_dense_csv(resolve(base, text(j, "A", where)));
    const Vec b = read_vector_csv(resolve(base, text(j, "b", where)));
    if (A.rows() != b.size()) throw std::invalid_argument(where + ": A and b have different row counts");
    ProblemSpec p;
    p.dim = A.cols();
    p.kind = "least-squares";
    const double lam = j.contains("lambda") ? number(j, "lambda", where) : 0.0;
    if (lam > 0) p.r = prox::l1_norm(lam);
    for (Index i = 0; i < A.rows(); ++i) {
      p.f.push_back(smooth::squared_residual(A.row(i).transpose(), b(i)));
      p.g.push_back(ProxFn::zero());
    }
    out.spec = std::move(p);
  } else {
    throw std::invalid_argument(where + ": unknown problem kind '" + kind + "'");
  }
  return out;
}

}  // namespace

Problem load_problem(const std::string& path, std::optional<double> alpha) {
  try {
    return load_problem_json(read_json(path), path, alpha);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Solving
// ---------------------------------------------------------------------------

SolveResult run_solver(const Problem& problem, const RunConfig& cfg, const std::optional<Vec>& reference) {
  cfg.validate();
  const ProblemSpec& spec = problem.spec;
  SolveOptions o;
  o.alpha = cfg.alpha ? cfg.alpha : (cfg.algo == "spi" ? std::nullopt : problem.suggested_alpha);
  o.max_iters = step_budget(cfg, spec.size());
  o.tol = cfg.tol;
  o.ergodic = cfg.ergodic;
  o.record_every = cfg.record_every;
  o.threads = cfg.threads.value_or(default_threads());
  o.timing = cfg.timing;
  o.reference = reference;

  SolveResult res;
  UniformSampler sampler(cfg.seed);
  if (cfg.algo == "ppg") {
    res = ppg_run(spec, o);
  } else if (cfg.algo == "sppg") {
    res = sppg_run(spec, o, sampler);
  } else if (cfg.algo == "prox-grad") {
    res = proximal_gradient_run(spec, o);
  } else if (cfg.algo == "admm") {
    res = consensus_admm_run(spec, o);
  } else if (cfg.algo == "finito") {
    res = finito_run(spec, sampler, o);
  } else {
    DiminishingStep step;
    if (cfg.spi_c) step.c = *cfg.spi_c;
    // the regularizer has to live inside the sampled terms
    res = problem.svm ? stochastic_prox_iteration_run(build_svm_folded(*problem.svm), step, sampler, o)
                      : stochastic_prox_iteration_run(spec, step, sampler, o);
  }
  res.log.meta.version = PPG_VERSION;
  res.log.meta.seed = cfg.seed;
  return res;
}

// ---------------------------------------------------------------------------
// Data generation
// ---------------------------------------------------------------------------

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double normal() { return std::normal_distribution<double>()(eng_); }
  double uniform() { return std::uniform_real_distribution<double>()(eng_); }
  Mat gaussian(Index r, Index c) {
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }
  Vec gaussian(Index n) { return gaussian(n, 1).col(0); }

 private:
  std::mt19937_64 eng_;
};

void require_positive(Index v, const char* name) {
  if (v <= 0) throw std::invalid_argument(std::string(name) + " must be positive");
}

std::string gen_group_lasso(const GenOptions& o, Rng& rng, const fs::path& dir) {
  require_positive(o.m, "m");
  require_positive(o.d, "d");
  require_positive(o.n, "n");
  const GroupPartition part = GroupPartition::staggered(o.d, o.n, o.group_size, o.shift);
  part.validate(o.d);
  const Mat A = rng.gaussian(o.m, o.d);
  // planted truth: the first third of the groups of collection 0 are active
  Vec truth = Vec::Zero(o.d);
  const auto& first = part.collections.front();
  const std::size_t active = std::max<std::size_t>(1, (first.size() + 2) / 3);
  for (std::size_t g = 0; g < std::min(active, first.size()); ++g)
    for (Index j : first[g]) truth(j) = rng.normal();
  const Vec b = A * truth + o.noise * rng.gaussian(o.m);
  write_dense_csv((dir / "A.csv").string(), A);
  write_dense_csv((dir / "b.csv").string(), b);
  write_dense_csv((dir / "truth.csv").string(), truth);
  Eigen::SelfAdjointEigenSolver<Mat> es(A.transpose() * A, Eigen::EigenvaluesOnly);
  nlohmann::ordered_json j;
  j["kind"] = "group-lasso";
  j["A"] = "A.csv";
  j["b"] = "b.csv";
  j["lambda1"] = o.lambda1;
  j["alpha"] = 1.0 / es.eigenvalues().maxCoeff();
  j["collections"] = part.collections;
  const std::string path = (dir / "problem.json").string();
  write_json(path, j);
  return path;
}

std::string gen_svm(const GenOptions& o, Rng& rng, const fs::path& dir) {
  require_positive(o.n, "n");
  require_positive(o.d, "d");
  Mat a = rng.gaussian(o.n, o.d) / std::sqrt(double(o.d));
  const Vec w = rng.gaussian(o.d);
  Vec y(o.n);
  for (Index i = 0; i < o.n; ++i) {
    y(i) = a.row(i).dot(w) >= 0 ? 1.0 : -1.0;
    if (rng.uniform() < o.flip) y(i) = -y(i);
  }
  write_libsvm((dir / "train.svm").string(), a, y);
  nlohmann::ordered_json j;
  j["kind"] = "svm";
  j["data"] = "train.svm";
  j["dim"] = o.d;
  j["lambda"] = o.lambda;
  const std::string path = (dir / "problem.json").string();
  write_json(path, j);
  return path;
}

std::string gen_fused_lasso(const GenOptions& o, Rng& rng, const fs::path& dir) {
  require_positive(o.n, "n");
  require_positive(o.d, "d");
  // piecewise-constant truth with up to five pieces
  Vec truth(o.d);
  const Index pieces = std::min<Index>(5, o.d);
  for (Index p = 0; p < pieces; ++p) {
    const double level = rng.normal();
    for (Index j = p * o.d / pieces; j < (p + 1) * o.d / pieces; ++j) truth(j) = level;
  }
  const Mat A = rng.gaussian(o.n, o.d);
  const Vec y = A * truth + o.noise * rng.gaussian(o.n);
  write_dense_csv((dir / "A.csv").string(), A);
  write_dense_csv((dir / "y.csv").string(), y);
  write_dense_csv((dir / "truth.csv").string(), truth);
  nlohmann::ordered_json j;
  j["kind"] = "fused-lasso";
  j["A"] = "A.csv";
  j["y"] = "y.csv";
  j["lambda"] = o.lambda;
  if (std::isfinite(o.eps))
    j["eps"] = o.eps;
  else
    j["eps"] = nullptr;
  const std::string path = (dir / "problem.json").string();
  write_json(path, j);
  return path;
}

std::string gen_network_lasso(const GenOptions& o, Rng& rng, const fs::path& dir) {
  require_positive(o.d, "d");
  Graph g;
  if (o.graph == "hypercube") {
    if (o.order < 1 || o.order > 20) throw std::invalid_argument("hypercube order must be in [1, 20]");
    g = Graph::hypercube(int(o.order));
  } else if (o.graph == "path") {
    require_positive(o.vertices, "vertices");
    g = Graph::path(o.vertices);
  } else {
    throw std::invalid_argument("graph must be 'hypercube' or 'path'");
  }
  // two clusters: vertices in the lower half share one center, the rest another
  const Vec c0 = rng.gaussian(o.d), c1 = rng.gaussian(o.d);
  Mat centers(g.vertices, o.d);
  for (Index v = 0; v < g.vertices; ++v)
    centers.row(v) = ((v < g.vertices / 2 ? c0 : c1) + o.noise * rng.gaussian(o.d)).transpose();
  write_dense_csv((dir / "centers.csv").string(), centers);
  nlohmann::ordered_json j;
  j["kind"] = "network-lasso";
  j["vertices"] = g.vertices;
  j["edges"] = g.edges;
  j["d"] = o.d;
  j["centers"] = "centers.csv";
  j["lambda1"] = o.lambda1;
  j["lambda2"] = o.lambda2;
  const std::string path = (dir / "problem.json").string();
  write_json(path, j);
  return path;
}

std::string gen_glm(const GenOptions& o, Rng& rng, const fs::path& dir) {
  require_positive(o.n, "n");
  require_positive(o.d, "d");
  if (o.link != "logistic" && o.link != "gaussian") throw std::invalid_argument("link must be 'logistic' or 'gaussian'");
  const Mat X = rng.gaussian(o.n, o.d) / std::sqrt(double(o.d));
  const Vec beta = rng.gaussian(o.d);
  Vec T(o.n);
  for (Index i = 0; i < o.n; ++i) {
    const double eta = X.row(i).dot(beta);
    T(i) = o.link == "gaussian" ? eta + o.noise * rng.normal() : (rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0);
  }
  write_dense_csv((dir / "X.csv").string(), X);
  write_dense_csv((dir / "T.csv").string(), T);
  nlohmann::ordered_json j;
  j["kind"] = "glm";
  j["X"] = "X.csv";
  j["T"] = "T.csv";
  j["link"] = o.link;
  const std::string path = (dir / "problem.json").string();
  write_json(path, j);
  return path;
}

}  // namespace

std::string generate(const GenOptions& opts) {
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec || !fs::is_directory(opts.out_dir)) throw IoError("cannot create output directory " + opts.out_dir);
  Rng rng(opts.seed);
  const fs::path dir(opts.out_dir);
  if (opts.kind == "group-lasso") return gen_group_lasso(opts, rng, dir);
  if (opts.kind == "svm") return gen_svm(opts, rng, dir);
  if (opts.kind == "fused-lasso") return gen_fused_lasso(opts, rng, dir);
  if (opts.kind == "network-lasso") return gen_network_lasso(opts, rng, dir);
  if (opts.kind == "glm") return gen_glm(opts, rng, dir);
  throw std::invalid_argument("unknown kind '" + opts.kind +
                              "' (expected group-lasso, svm, fused-lasso, network-lasso or glm)");
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

namespace {

struct Moments {
  long count = 0;
  double sum = 0, sumsq = 0;
  void add(double v) {
    ++count;
    sum += v;
    sumsq += v * v;
  }
  double mean() const { return count ? sum / double(count) : 0.0; }
  double sd() const {
    if (count < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sumsq - double(count) * m * m) / double(count - 1)));
  }
};

struct SeriesPoint {
  double epoch = 0;
  long runs = 0;
  Moments residual, objective, dist;
};

std::string cell(const Moments& m, bool sd) {
  if (m.count == 0) return "";
  return format_double(sd ? m.sd() : m.mean());
}

}  // namespace

void compare(const CompareOptions& opts, std::ostream& log) {
  if (opts.runs.size() < 2) throw std::invalid_argument("compare needs at least two run configs");
  if (opts.seeds < 1) throw std::invalid_argument("seeds must be at least 1");
  if (opts.out.empty()) throw std::invalid_argument("compare needs an output path");
  const auto canon = [](const std::string& p) { return fs::weakly_canonical(p).string(); };
  const std::string problem_file = canon(opts.runs.front().problem_file);
  for (const auto& r : opts.runs) {
    r.validate();
    if (canon(r.problem_file) != problem_file)
      throw std::invalid_argument("compared runs use different problem files: " + opts.runs.front().problem_file +
                                  " and " + r.problem_file);
  }

  // Every run sees the same factorization scale when a cached solve needs one.
  const Problem probe = load_problem(problem_file);
  const Index n = probe.spec.size();

  // reference: final iterate of the run with the largest budget in full passes
  std::size_t longest = 0;
  double best_budget = -1;
  for (std::size_t i = 0; i < opts.runs.size(); ++i) {
    const double passes = double(step_budget(opts.runs[i], n)) / (is_stochastic(opts.runs[i].algo) ? double(n) : 1.0);
    if (passes > best_budget) {
      best_budget = passes;
      longest = i;
    }
  }
  auto problem_for = [&](const RunConfig& cfg) {
    return load_problem(problem_file, cfg.alpha ? cfg.alpha : probe.suggested_alpha);
  };
  const RunConfig& ref_cfg = opts.runs[longest];
  const Vec x_star = run_solver(problem_for(ref_cfg), ref_cfg).x;
  log << "reference from " << ref_cfg.display_label() << " (" << best_budget << " passes)\n";

  std::ofstream out(opts.out, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + opts.out + " for writing");
  out << "label,algo,k,epoch,runs,residual_norm_mean,residual_norm_sd,objective_mean,objective_sd,"
         "dist_to_ref_mean,dist_to_ref_sd\n";
  for (const auto& base : opts.runs) {
    const Problem problem = problem_for(base);
    const int seeds = is_stochastic(base.algo) ? opts.seeds : 1;
    std::map<long, SeriesPoint> series;
    double final_dist = 0;
    for (int s = 0; s < seeds; ++s) {
      RunConfig cfg = base;
      cfg.seed = base.seed + std::uint64_t(s);
      const SolveResult res = run_solver(problem, cfg, x_star);
      for (const auto& row : res.log.rows()) {
        SeriesPoint& pt = series[row.k];
        pt.epoch = row.epoch;
        ++pt.runs;
        pt.residual.add(row.residual_norm);
        if (row.objective) pt.objective.add(*row.objective);
        if (row.dist_to_ref) pt.dist.add(*row.dist_to_ref);
      }
      final_dist += (res.x - x_star).norm() / seeds;
    }
    const std::string label = base.display_label();
    for (const auto& [k, pt] : series) {
      out << label << ',' << base.algo << ',' << k << ',' << format_double(pt.epoch) << ',' << pt.runs << ','
          << cell(pt.residual, false) << ',' << cell(pt.residual, true) << ',' << cell(pt.objective, false) << ','
          << cell(pt.objective, true) << ',' << cell(pt.dist, false) << ',' << cell(pt.dist, true) << '\n';
    }
    log << label << ": final ||x - x*|| = " << format_double(final_dist) << " over " << seeds << " run(s)\n";
  }
  if (!out) throw IoError("write failed: " + opts.out);
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

namespace {

struct SolveFlags {
  std::string config, problem, algo, metrics_out, x_out, label;
  std::optional<double> alpha, tol, epochs, spi_c;
  std::optional<long> max_iters, record_every;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool ergodic = false, timing = false;
};

void add_solve_flags(CLI::App* app, SolveFlags& f) {
  app->add_option("--problem", f.problem, "Problem JSON file");
  app->add_option("--algo", f.algo, "ppg, sppg, prox-grad, admm, spi or finito");
  app->add_option("--alpha", f.alpha, "Step size");
  app->add_option("--tol", f.tol, "Stop when ||p(z)||/sqrt(nd) <= tol");
  app->add_option("--max-iters", f.max_iters, "Iteration budget (single-term steps for sppg, spi, finito)");
  app->add_option("--epochs", f.epochs, "Budget in passes over the terms; overrides --max-iters");
  app->add_option("--seed", f.seed, "Sampler seed");
  app->add_option("--threads", f.threads, "Worker threads (default: PPG_THREADS or 1)");
  app->add_option("--record-every", f.record_every, "Metrics cadence");
  app->add_flag("--ergodic", f.ergodic, "Also track the averaged iterate");
  app->add_flag("--timing", f.timing, "Fill the wall_time_s column");
  app->add_option("--metrics-out", f.metrics_out, "Metrics CSV path");
  app->add_option("--spi-c", f.spi_c, "Constant c of the spi step c/k");
  app->add_option("--label", f.label, "Series label");
}

RunConfig merge(const SolveFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (!f.problem.empty()) c.problem_file = f.problem;
  if (!f.algo.empty()) c.algo = f.algo;
  if (f.alpha) c.alpha = f.alpha;
  if (f.tol) c.tol = *f.tol;
  if (f.max_iters) c.max_iters = *f.max_iters;
  if (f.epochs) c.epochs = f.epochs;
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = f.threads;
  if (f.record_every) c.record_every = *f.record_every;
  if (f.ergodic) c.ergodic = true;
  if (f.timing) c.timing = true;
  if (!f.metrics_out.empty()) c.metrics_out = f.metrics_out;
  if (f.spi_c) c.spi_c = f.spi_c;
  if (!f.label.empty()) c.label = f.label;
  return c;
}

int cmd_solve(const SolveFlags& flags) {
  const RunConfig cfg = merge(flags);
  cfg.validate();
  const Problem problem = load_problem(cfg.problem_file, cfg.alpha);
  const SolveResult res = run_solver(problem, cfg);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  if (!cfg.metrics_out.empty()) {
    write_metrics_csv(res.log, cfg.metrics_out);
    write_metrics_meta(res.log.meta, meta_path(cfg.metrics_out));
  }
  if (!flags.x_out.empty()) write_dense_csv(flags.x_out, res.x);
  const auto obj = objective(res.x, problem.spec);
  std::cout << "algo " << cfg.algo << '\n'
            << "status " << (res.converged ? "converged" : "max-iters") << '\n'
            << "iterations " << res.iterations << '\n'
            << "objective " << (obj ? format_double(*obj) : std::string("n/a")) << '\n'
            << "residual " << format_double(res.final_residual) << '\n';
  if (res.ergodic_x) {
    const auto eobj = objective(*res.ergodic_x, problem.spec);
    std::cout << "ergodic_objective " << (eobj ? format_double(*eobj) : std::string("n/a")) << '\n';
  }
  if (res.resyncs) std::cout << "resyncs " << res.resyncs << '\n';
  return res.converged ? kExitConverged : kExitMaxIters;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Parallel proximal gradient solvers"};
  app.set_version_flag("--version", std::string(PPG_VERSION));
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic problem");
  gen_cmd->add_option("kind", gen.kind, "group-lasso, svm, fused-lasso, network-lasso or glm")->required();
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--m", gen.m, "Rows of A (group-lasso)");
  gen_cmd->add_option("--d", gen.d, "Dimension");
  gen_cmd->add_option("--n", gen.n, "Collections (group-lasso) or samples");
  gen_cmd->add_option("--group-size", gen.group_size, "Group size (group-lasso)");
  gen_cmd->add_option("--shift", gen.shift, "Offset between collections (group-lasso)");
  gen_cmd->add_option("--lambda", gen.lambda, "Regularization (svm, fused-lasso)");
  gen_cmd->add_option("--lambda1", gen.lambda1, "l1 or group weight");
  gen_cmd->add_option("--lambda2", gen.lambda2, "Edge weight (network-lasso)");
  gen_cmd->add_option("--eps", gen.eps, "Fused-lasso bound; inf disables it");
  gen_cmd->add_option("--noise", gen.noise, "Observation noise");
  gen_cmd->add_option("--flip", gen.flip, "Label flip probability (svm)");
  gen_cmd->add_option("--link", gen.link, "logistic or gaussian (glm)");
  gen_cmd->add_option("--graph", gen.graph, "hypercube or path (network-lasso)");
  gen_cmd->add_option("--order", gen.order, "Hypercube order");
  gen_cmd->add_option("--vertices", gen.vertices, "Path length");

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run one solver");
  solve_cmd->add_option("--config", solve.config, "Run config JSON");
  solve_cmd->add_option("--x-out", solve.x_out, "Write the final x as CSV");
  add_solve_flags(solve_cmd, solve);

  std::vector<std::string> runs;
  std::string compare_out;
  int seeds = 1;
  auto* cmp_cmd = app.add_subcommand("compare", "Run several configs on one problem and merge their metrics");
  cmp_cmd->add_option("--run", runs, "Run config JSON (repeat)")->required();
  cmp_cmd->add_option("--out", compare_out, "Merged CSV path")->required();
  cmp_cmd->add_option("--seeds", seeds, "Seeds per stochastic run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }

  try {
    if (*gen_cmd) {
      std::cout << generate(gen) << '\n';
      return 0;
    }
    if (*solve_cmd) return cmd_solve(solve);
    CompareOptions c;
    for (const auto& r : runs) c.runs.push_back(load_run_config(r));
    c.out = compare_out;
    c.seeds = seeds;
    compare(c, std::cout);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace ppg::cli
