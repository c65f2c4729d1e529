#ifndef PPG_TOOLS_CLI_HPP
#define PPG_TOOLS_CLI_HPP

#include "ppg/ppg.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ppg::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMaxIters = 2;

inline const std::vector<std::string> kAlgorithms = {"ppg", "sppg", "prox-grad", "admm", "spi", "finito"};

/// One solver run. Paths are resolved against the directory of the config
/// file they came from.
struct RunConfig {
  std::string problem_file;
  std::string algo = "ppg";
  std::optional<double> alpha;
  double tol = 1e-10;
  long max_iters = 1000;
  std::optional<double> epochs;
  std::uint64_t seed = 0;
  std::optional<int> threads;
  long record_every = 0;
  bool ergodic = false;
  bool timing = false;
  std::string metrics_out;
  std::optional<double> spi_c;
  std::string label;

  void validate() const;
  std::string display_label() const { return label.empty() ? algo : label; }
};

RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);

/// A problem loaded from its JSON description.
struct Problem {
  std::string path;
  ProblemSpec spec;
  std::optional<SvmData> svm;
  std::optional<double> suggested_alpha;
};

/// `alpha` is needed up front by kinds that cache a factorization.
Problem load_problem(const std::string& path, std::optional<double> alpha = std::nullopt);

/// Thread count from PPG_THREADS, or 1.
int default_threads();

/// Steps a run will take: epochs * n for the single-term solvers, epochs
/// for the full-pass ones, otherwise max_iters.
long step_budget(const RunConfig& cfg, Index n);

bool is_stochastic(const std::string& algo);

SolveResult run_solver(const Problem& problem, const RunConfig& cfg, const std::optional<Vec>& reference = std::nullopt);

/// Sidecar path for run metadata: run.csv -> run.meta.json.
std::string meta_path(const std::string& metrics_out);

struct GenOptions {
  std::string kind;
  std::string out_dir;
  std::uint64_t seed = 0;
  Index m = 300, d = 42, n = 3;
  Index group_size = 9, shift = 3;
  double lambda = 0.1, lambda1 = 0.5, lambda2 = 0.5;
  double eps = 0.1;
  double noise = 0.1, flip = 0.05;
  std::string link = "logistic";
  std::string graph = "hypercube";
  Index order = 3, vertices = 8;
};

/// Writes data files plus problem.json into out_dir; returns the problem path.
std::string generate(const GenOptions& opts);

/// Long-format comparison of several runs on one problem.
struct CompareOptions {
  std::vector<RunConfig> runs;
  std::string out;
  int seeds = 1;
};

void compare(const CompareOptions& opts, std::ostream& log);

/// Full command-line entry point.
int run(int argc, char** argv);

}  // namespace ppg::cli

#endif  // PPG_TOOLS_CLI_HPP
