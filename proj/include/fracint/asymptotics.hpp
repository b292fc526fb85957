#pragma once

// Scans of T(x) against the main term C sqrt(x), C = (2/pi) zeta(3/2), and a
// log-log fit of the residual.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fracint/error.hpp"
#include "fracint/integrator.hpp"
#include "fracint/numeric.hpp"
#include "fracint/parallel.hpp"
#include "fracint/series.hpp"

namespace fracint {

inline constexpr double kReferenceExponent = 13.0 / 30.0;
inline constexpr double kUsableFactor = 4.0;

struct ScanRecord {
  double x = 0.0;
  double t_lo = 0.0;
  double t_mid = 0.0;
  double t_hi = 0.0;
  double main_term = 0.0;
  double residual = 0.0;
  double trunc_width = 0.0;
  std::uint64_t n_segments = 0;
  std::int64_t elapsed_ms = 0;

  /// Residual large enough that truncation cannot dominate its logarithm.
  bool usable() const noexcept {
    return std::isfinite(residual) && residual != 0.0 && std::abs(residual) >= kUsableFactor * trunc_width;
  }
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_used = 0;
};

struct ScanPolicy {
  /// Fixed truncation point; default_t_min(x) when empty.
  std::optional<PositiveRational> t_min;
  unsigned threads = thread_count();
};

/// x_from * (x_to / x_from)^{i / (points - 1)}, each rounded to 12 significant digits.
inline std::vector<PositiveRational> geometric_grid(double x_from, double x_to, std::size_t points) {
  if (!(x_from >= 10.0) || !(x_to > x_from) || !(x_to <= 1e9)) {
    throw validation_error("scan range must satisfy 10 <= x_from < x_to <= 1e9");
  }
  if (points < 2 || points > 10000) throw validation_error("scan points must lie in [2, 10000]");
  std::vector<PositiveRational> grid;
  grid.reserve(points);
  const double log_ratio = std::log(x_to / x_from);
  for (std::size_t i = 0; i < points; ++i) {
    const double v = i + 1 == points ? x_to : x_from * std::exp(log_ratio * static_cast<double>(i) / static_cast<double>(points - 1));
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    grid.push_back(parse_positive_real(buf));
  }
  return grid;
}

inline ScanRecord scan_point(const PositiveRational& x, const ScanPolicy& policy, double limit_constant) {
  const PositiveRational t_min = policy.t_min && *policy.t_min < x ? *policy.t_min : default_t_min(x);
  const Enclosure e = t_total_segments(x, t_min, policy.threads);
  ScanRecord r;
  r.x = x.approx();
  r.t_lo = e.lo;
  r.t_hi = e.hi;
  r.t_mid = e.mid();
  r.main_term = limit_constant * std::sqrt(r.x);
  r.residual = r.t_mid - r.main_term;
  r.trunc_width = e.truncation_width;
  r.n_segments = e.segments;
  r.elapsed_ms = static_cast<std::int64_t>(std::llround(e.elapsed_ms));
  return r;
}

inline std::vector<ScanRecord> scan(double x_from, double x_to, std::size_t points, const ScanPolicy& policy = {}) {
  const auto grid = geometric_grid(x_from, x_to, points);
  const double limit = constants().limit_constant;
  std::vector<ScanRecord> out;
  out.reserve(grid.size());
  for (const auto& x : grid) out.push_back(scan_point(x, policy, limit));
  return out;
}

/// Least squares of log|residual| on log x over usable records.
inline FitResult fit_exponent(const std::vector<ScanRecord>& records) {
  std::vector<double> lx, ly;
  for (const auto& r : records) {
    if (!r.usable()) continue;
    lx.push_back(std::log(r.x));
    ly.push_back(std::log(std::abs(r.residual)));
  }
  if (lx.size() < 5) {
    throw validation_error("fit needs at least 5 usable records, have " + std::to_string(lx.size()));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw validation_error("fit needs at least two distinct x values");
  FitResult f;
  f.n_used = lx.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (f.intercept + f.slope * lx[i]);
    ss_res += e * e;
  }
  f.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return f;
}

struct PerDRow {
  std::uint64_t d = 0;
  double x = 0.0;
  double scaled = 0.0;     // T_d(x) / sqrt(x)
  double f_value = 0.0;
  double deviation = 0.0;  // scaled - f_value
};

inline std::vector<PerDRow> per_d_table(std::uint64_t d_max, const std::vector<PositiveRational>& x_grid) {
  if (d_max == 0 || d_max > 50) throw validation_error("per-d table requires 1 <= d_max <= 50");
  std::vector<PerDRow> rows;
  for (std::uint64_t d = 1; d <= d_max; ++d) {
    const double f = f_value(d);
    for (const auto& x : x_grid) {
      PerDRow row;
      row.d = d;
      row.x = x.approx();
      row.scaled = td_exact(x, d) / std::sqrt(row.x);
      row.f_value = f;
      row.deviation = row.scaled - f;
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kScanHeader = "x,t_lo,t_mid,t_hi,main_term,residual,trunc_width,n_segments,elapsed_ms";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_scan_csv(std::ostream& os, const std::vector<ScanRecord>& records, bool timing = true) {
  os << kScanHeader << '\n';
  for (const auto& r : records) {
    os << format_number(r.x) << ',' << format_number(r.t_lo) << ',' << format_number(r.t_mid) << ','
       << format_number(r.t_hi) << ',' << format_number(r.main_term) << ',' << format_number(r.residual) << ','
       << format_number(r.trunc_width) << ',' << r.n_segments << ',' << (timing ? r.elapsed_ms : 0) << '\n';
  }
}

inline std::vector<ScanRecord> read_scan_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw validation_error("empty scan file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kScanHeader) throw validation_error("unexpected scan header: " + line);
  std::vector<ScanRecord> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 9) throw validation_error("scan line " + std::to_string(line_no) + ": expected 9 fields");
    try {
      ScanRecord r;
      r.x = std::stod(cells[0]);
      r.t_lo = std::stod(cells[1]);
      r.t_mid = std::stod(cells[2]);
      r.t_hi = std::stod(cells[3]);
      r.main_term = std::stod(cells[4]);
      r.residual = std::stod(cells[5]);
      r.trunc_width = std::stod(cells[6]);
      r.n_segments = std::stoull(cells[7]);
      r.elapsed_ms = std::stoll(cells[8]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw validation_error("scan line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return out;
}

}  // namespace fracint
