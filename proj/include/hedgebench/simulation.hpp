#pragma once

// GBM path generation, overlapping-window construction, price-series
// ingestion and realized-volatility diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hedgebench/analytic.hpp"
#include "hedgebench/format.hpp"
#include "hedgebench/random.hpp"

namespace hedgebench {

/// Row-major matrix of price paths, n_paths x (n_steps + 1).
class PathSet {
 public:
  PathSet() = default;
  PathSet(std::size_t n_paths, std::size_t n_points, double dt, bool t0_normalized = false)
      : prices_(n_paths * n_points), n_paths_(n_paths), n_points_(n_points), dt_(dt),
        t0_normalized_(t0_normalized) {
    if (n_points < 2) throw std::invalid_argument("PathSet: rows need at least 2 points");
    if (!(dt > 0.0)) throw std::invalid_argument("PathSet: dt must be > 0");
  }

  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_points() const { return n_points_; }
  std::size_t n_steps() const { return n_points_ - 1; }
  double dt() const { return dt_; }
  bool t0_normalized() const { return t0_normalized_; }

  std::span<const double> row(std::size_t i) const {
    return {prices_.data() + i * n_points_, n_points_};
  }
  std::span<double> row(std::size_t i) { return {prices_.data() + i * n_points_, n_points_}; }
  double operator()(std::size_t i, std::size_t j) const { return prices_[i * n_points_ + j]; }

  /// Divides every row by its first element.
  void normalize() {
    for (std::size_t i = 0; i < n_paths_; ++i) {
      auto r = row(i);
      const double first = r[0];
      for (double& p : r) p /= first;
      r[0] = 1.0;
    }
    t0_normalized_ = true;
  }

  /// Subset of rows in the given order.
  PathSet select(std::span<const std::size_t> rows) const {
    PathSet out(rows.size(), n_points_, dt_, t0_normalized_);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto src = row(rows[k]);
      std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
  }

  /// Every `stride`-th point of each row (a coarser grid on the same paths).
  PathSet subsample(std::size_t stride) const {
    if (stride == 0 || n_steps() % stride != 0)
      throw std::invalid_argument("PathSet::subsample: stride must divide n_steps");
    PathSet out(n_paths_, n_steps() / stride + 1, dt_ * static_cast<double>(stride), t0_normalized_);
    for (std::size_t i = 0; i < n_paths_; ++i)
      for (std::size_t j = 0; j < out.n_points(); ++j) out.row(i)[j] = (*this)(i, j * stride);
    return out;
  }

  void validate() const {
    for (std::size_t i = 0; i < n_paths_; ++i) {
      auto r = row(i);
      for (std::size_t j = 0; j < r.size(); ++j)
        if (!(r[j] > 0.0) || !std::isfinite(r[j]))
          throw std::invalid_argument("PathSet: non-positive price at row " + std::to_string(i) +
                                      ", column " + std::to_string(j));
      if (t0_normalized_ && r[0] != 1.0)
        throw std::invalid_argument("PathSet: row " + std::to_string(i) + " is not t0-normalized");
    }
  }

 private:
  std::vector<double> prices_;
  std::size_t n_paths_ = 0;
  std::size_t n_points_ = 0;
  double dt_ = 1.0;
  bool t0_normalized_ = false;
};

struct VolStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

/// GBM with exact log-normal increments. Row i draws from its own substream
/// derived from (seed, i), so rows can be produced in any order.
inline PathSet simulate_gbm(const MarketParams& params, std::size_t n_steps, std::size_t n_paths,
                            RngSeed seed) {
  params.validate();
  if (n_steps < 1) throw std::invalid_argument("simulate_gbm: n_steps must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("simulate_gbm: n_paths must be >= 1");
  const double dt = params.maturity_T / static_cast<double>(n_steps);
  const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * dt;
  const double diffusion = params.sigma * std::sqrt(dt);
  PathSet paths(n_paths, n_steps + 1, dt, params.s0 == 1.0);
  for (std::size_t i = 0; i < n_paths; ++i) {
    NormalStream normals(substream_seed(seed.seed, i));
    auto r = paths.row(i);
    r[0] = params.s0;
    double log_x = std::log(params.s0);
    for (std::size_t j = 1; j <= n_steps; ++j) {
      log_x += drift + diffusion * normals();
      r[j] = std::exp(log_x);
    }
  }
  return paths;
}

/// Windows of `window` steps at stride one, each divided by its first price.
inline PathSet overlapping_paths(std::span<const double> series, std::size_t window,
                                 std::size_t n_paths, double dt) {
  if (window < 1) throw std::invalid_argument("overlapping_paths: window must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("overlapping_paths: n_paths must be >= 1");
  const std::size_t needed = window + n_paths;
  if (series.size() < needed)
    throw std::invalid_argument("overlapping_paths: series has " + std::to_string(series.size()) +
                                " points; " + std::to_string(n_paths) + " windows of " +
                                std::to_string(window) + " steps need at least " +
                                std::to_string(needed));
  for (std::size_t k = 0; k < series.size(); ++k)
    if (!(series[k] > 0.0))
      throw std::invalid_argument("overlapping_paths: non-positive price at index " + std::to_string(k));
  PathSet out(n_paths, window + 1, dt, true);
  for (std::size_t j = 0; j < n_paths; ++j) {
    auto r = out.row(j);
    const double first = series[j];
    for (std::size_t k = 0; k <= window; ++k) r[k] = series[j + k] / first;
    r[0] = 1.0;
  }
  return out;
}

/// Annualized sample standard deviation (n-1) of log-returns. Needs at least
/// two returns, i.e. three prices.
inline double realized_vol(std::span<const double> path, double dt) {
  if (path.size() < 3)
    throw std::invalid_argument("realized_vol: need at least 3 prices (2 returns), got " +
                                std::to_string(path.size()));
  if (!(dt > 0.0)) throw std::invalid_argument("realized_vol: dt must be > 0");
  const std::size_t m = path.size() - 1;
  std::vector<double> rets(m);
  for (std::size_t i = 0; i < m; ++i) rets[i] = std::log(path[i + 1] / path[i]);
  const double mean = std::accumulate(rets.begin(), rets.end(), 0.0) / static_cast<double>(m);
  double ss = 0.0;
  for (double x : rets) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(m - 1)) / std::sqrt(dt);
}

/// min / max / mean / sample std of per-row realized volatilities.
inline VolStats vol_stats(const PathSet& paths) {
  if (paths.n_paths() < 2) throw std::invalid_argument("vol_stats: need at least 2 paths");
  std::vector<double> vols(paths.n_paths());
  for (std::size_t i = 0; i < paths.n_paths(); ++i) vols[i] = realized_vol(paths.row(i), paths.dt());
  VolStats s;
  s.min = *std::min_element(vols.begin(), vols.end());
  s.max = *std::max_element(vols.begin(), vols.end());
  s.mean = std::accumulate(vols.begin(), vols.end(), 0.0) / static_cast<double>(vols.size());
  double ss = 0.0;
  for (double v : vols) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(vols.size() - 1));
  return s;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

/// Reads one price column from a headed CSV. Blank lines are skipped; row
/// numbers in errors are 1-based file line numbers.
inline std::vector<double> ingest_csv(const std::string& file, const std::string& column) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("ingest_csv: cannot open '" + file + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    header = detail::split_csv_line(line);
    break;
  }
  if (header.empty()) throw std::runtime_error("ingest_csv: '" + file + "' has no header row");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end())
    throw std::runtime_error("ingest_csv: column '" + column + "' not found in '" + file + "'");
  const auto col = static_cast<std::size_t>(it - header.begin());

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (col >= cells.size())
      throw std::runtime_error("ingest_csv: row " + std::to_string(line_no) + " has no column '" +
                               column + "'");
    double v = 0.0;
    if (!parse_double(cells[col], v))
      throw std::runtime_error("ingest_csv: row " + std::to_string(line_no) + ": '" + cells[col] +
                               "' is not a number");
    if (!(v > 0.0))
      throw std::runtime_error("ingest_csv: row " + std::to_string(line_no) + ": price " + cells[col] +
                               " is not positive");
    values.push_back(v);
  }
  return values;
}

/// One row per path; `# dt=` and `# t0_normalized=` header comments.
inline void write_paths_csv(std::ostream& out, const PathSet& paths) {
  out << "# dt=" << fmt_double(paths.dt()) << "\n";
  out << "# t0_normalized=" << (paths.t0_normalized() ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < paths.n_paths(); ++i) {
    auto r = paths.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << fmt_double(r[j]);
    out << "\n";
  }
}

inline PathSet read_paths_csv(std::istream& in) {
  double dt = 0.0;
  bool normalized = false;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const auto key = trim(body.substr(0, eq));
      const auto value = trim(body.substr(eq + 1));
      if (key == "dt" && !parse_double(value, dt))
        throw std::runtime_error("paths csv: bad dt '" + value + "'");
      if (key == "t0_normalized") normalized = value == "1";
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : detail::split_csv_line(line)) {
      double v = 0.0;
      if (!parse_double(cell, v))
        throw std::runtime_error("paths csv: line " + std::to_string(line_no) + ": bad value '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("paths csv: line " + std::to_string(line_no) + " has " +
                               std::to_string(row.size()) + " values, expected " +
                               std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("paths csv: no rows");
  if (!(dt > 0.0)) throw std::runtime_error("paths csv: missing or invalid '# dt=' header");
  PathSet paths(rows.size(), rows.front().size(), dt, normalized);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), paths.row(i).begin());
  paths.validate();
  return paths;
}

}  // namespace hedgebench
