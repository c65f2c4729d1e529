#ifndef PPG_IO_HPP
#define PPG_IO_HPP

#include "ppg/core.hpp"
#include "ppg/metrics.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace ppg {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

}  // namespace io_detail

/// %.17g, which round-trips every finite double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Rectangular numeric CSV. A first line that does not parse as numbers is
/// taken as a header and skipped. LF and CRLF line endings are accepted.
inline Mat read_dense_csv(const std::string& path) {
  auto in = io_detail::open_in(path);
  std::vector<double> values;
  Index cols = -1, rows = 0;
  std::string line;
  long lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = io_detail::trim(line);
    if (body.empty()) continue;
    const auto cells = io_detail::split(body, ',');
    std::vector<double> parsed;
    parsed.reserve(cells.size());
    bool numeric = true;
    for (auto c : cells) {
      auto v = io_detail::parse_double(c);
      if (!v) {
        numeric = false;
        break;
      }
      parsed.push_back(*v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw IoError(path + ":" + std::to_string(lineno) + ": non-numeric cell");
    }
    first = false;
    if (cols < 0) cols = static_cast<Index>(parsed.size());
    if (static_cast<Index>(parsed.size()) != cols)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) + " cells, found " +
                    std::to_string(parsed.size()));
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  if (rows == 0) throw IoError(path + ": no numeric rows");
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

inline void write_dense_csv(const std::string& path, const Mat& m) {
  auto out = io_detail::open_out(path);
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failed: " + path);
}

/// Column vector from a one-column CSV (or a single row).
inline Vec read_vector_csv(const std::string& path) {
  const Mat m = read_dense_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw IoError(path + ": expected a single row or column");
}

struct LabeledData {
  Mat features;
  Vec labels;
};

/// LIBSVM text format ("label idx:val ..." with 1-based indices), densified.
/// The dimension is the largest index seen unless `dim` is given.
inline LabeledData read_libsvm(const std::string& path, std::optional<Index> dim = std::nullopt) {
  auto in = io_detail::open_in(path);
  std::vector<double> labels;
  std::vector<std::vector<std::pair<Index, double>>> rows;
  Index max_index = 0;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = io_detail::trim(body);
    if (body.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    std::istringstream tokens{std::string(body)};
    std::string tok;
    tokens >> tok;
    const auto label = io_detail::parse_double(tok);
    if (!label) throw IoError(where + "malformed label '" + tok + "'");
    std::vector<std::pair<Index, double>> row;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw IoError(where + "malformed token '" + tok + "'");
      long long idx = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || p != tok.data() + colon) throw IoError(where + "malformed index in '" + tok + "'");
      if (idx <= 0) throw IoError(where + "feature indices are 1-based; got " + std::to_string(idx));
      const auto val = io_detail::parse_double(std::string_view(tok).substr(colon + 1));
      if (!val) throw IoError(where + "malformed value in '" + tok + "'");
      if (dim && idx > *dim)
        throw IoError(where + "index " + std::to_string(idx) + " exceeds dimension " + std::to_string(*dim));
      max_index = std::max<Index>(max_index, static_cast<Index>(idx));
      row.emplace_back(static_cast<Index>(idx - 1), *val);
    }
    labels.push_back(*label);
    rows.push_back(std::move(row));
  }
  const Index d = dim ? *dim : max_index;
  LabeledData out;
  out.features = Mat::Zero(static_cast<Index>(rows.size()), d);
  out.labels = Vec(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.labels(Index(i)) = labels[i];
    for (auto [j, v] : rows[i]) out.features(Index(i), j) = v;
  }
  return out;
}

inline void write_libsvm(const std::string& path, const Mat& features, const Vec& labels) {
  if (features.rows() != labels.size()) throw std::invalid_argument("features and labels differ in count");
  auto out = io_detail::open_out(path);
  std::string line;
  for (Index i = 0; i < features.rows(); ++i) {
    line = labels(i) == 1.0 ? "+1" : labels(i) == -1.0 ? "-1" : format_double(labels(i));
    for (Index j = 0; j < features.cols(); ++j)
      if (features(i, j) != 0.0) line += " " + std::to_string(j + 1) + ":" + format_double(features(i, j));
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failed: " + path);
}

inline constexpr const char* kMetricsHeader = "k,epoch,wall_time_s,residual_norm,objective,dist_to_ref";

inline std::string metrics_row(const ResidualReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  return std::to_string(r.k) + "," + format_double(r.epoch) + "," + opt(r.wall_time_s) + "," +
         format_double(r.residual_norm) + "," + opt(r.objective) + "," + opt(r.dist_to_ref);
}

/// Header plus one row per report; absent values are empty cells.
inline void write_metrics_csv(const MetricsLog& log, const std::string& path) {
  auto out = io_detail::open_out(path);
  std::string buf = kMetricsHeader;
  buf += '\n';
  for (const auto& r : log.rows()) {
    buf += metrics_row(r);
    buf += '\n';
  }
  out << buf;
  if (!out) throw IoError("write failed: " + path);
}

inline MetricsLog read_metrics_csv(const std::string& path) {
  auto in = io_detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || io_detail::trim(line) != kMetricsHeader)
    throw IoError(path + ": missing metrics header");
  MetricsLog log;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = io_detail::trim(line);
    if (body.empty()) continue;
    const auto cells = io_detail::split(body, ',');
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    if (cells.size() != 6) throw IoError(where + "expected 6 cells");
    auto required = [&](std::string_view c) {
      auto v = io_detail::parse_double(c);
      if (!v) throw IoError(where + "missing or malformed value");
      return *v;
    };
    auto optional = [&](std::string_view c) -> std::optional<double> {
      if (io_detail::trim(c).empty()) return std::nullopt;
      return required(c);
    };
    ResidualReport r;
    r.k = static_cast<long>(required(cells[0]));
    r.epoch = required(cells[1]);
    r.wall_time_s = optional(cells[2]);
    r.residual_norm = required(cells[3]);
    r.objective = optional(cells[4]);
    r.dist_to_ref = optional(cells[5]);
    log.append(std::move(r));
  }
  return log;
}

/// Run metadata as JSON, written next to the metrics CSV.
inline void write_metrics_meta(const MetricsMeta& meta, const std::string& path) {
  nlohmann::ordered_json j;
  j["solver"] = meta.solver;
  j["problem_kind"] = meta.problem_kind;
  j["seed"] = meta.seed;
  j["alpha"] = meta.alpha;
  j["version"] = meta.version;
  auto out = io_detail::open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace ppg

#endif  // PPG_IO_HPP
