#ifndef PPG_METRICS_HPP
#define PPG_METRICS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppg {

/// One diagnostics row. `residual_norm` is solver specific: ||p(z)||_F for
/// the splitting methods, the scaled step length for the baselines that keep
/// no z block (see each solver).
struct ResidualReport {
  long k = 0;
  double epoch = 0.0;
  double residual_norm = 0.0;
  std::optional<double> objective;
  std::optional<double> dist_to_ref;  ///< ||x_half - x_ref||_2
  std::optional<double> wall_time_s;
};

struct MetricsMeta {
  std::string solver;
  std::string problem_kind;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::string version;
};

/// Append-only record; k strictly increases.
class MetricsLog {
 public:
  MetricsMeta meta;

  void append(ResidualReport row) {
    if (!rows_.empty() && row.k <= rows_.back().k)
      throw std::logic_error("metrics rows must be strictly increasing in k");
    if (!(row.residual_norm >= 0.0))
      throw std::logic_error("residual norm must be non-negative");
    rows_.push_back(std::move(row));
  }

  const std::vector<ResidualReport>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  std::size_t size() const { return rows_.size(); }
  const ResidualReport& back() const { return rows_.back(); }

 private:
  std::vector<ResidualReport> rows_;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ppg

#endif  // PPG_METRICS_HPP
