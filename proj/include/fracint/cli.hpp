#pragma once

// Command-line front end. `run` is kept separate from main() so the whole
// surface (exit codes, stdout/stderr, ledger) can be driven from tests.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracint/asymptotics.hpp"
#include "fracint/error.hpp"
#include "fracint/integrator.hpp"
#include "fracint/numeric.hpp"
#include "fracint/oracles.hpp"
#include "fracint/series.hpp"

#ifndef FRACINT_VERSION
#define FRACINT_VERSION "0.1.0"
#endif

namespace fracint::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

struct LedgerEntry {
  std::string ts;
  std::string version = FRACINT_VERSION;
  std::string command;
  std::map<std::string, std::string> args;
  std::map<std::string, double> summary;
  std::int64_t duration_ms = 0;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point now = std::chrono::system_clock::now()) {
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string to_json_line(const LedgerEntry& e) {
  nlohmann::json j;
  j["ts"] = e.ts;
  j["version"] = e.version;
  j["command"] = e.command;
  j["args"] = e.args;
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [k, v] : e.summary) {
    if (std::isfinite(v)) summary[k] = v;
  }
  j["summary"] = summary;
  j["duration_ms"] = e.duration_ms;
  return j.dump() + "\n";
}

/// Appends one JSON line to $FRACINT_LEDGER with a single write(2) on an
/// O_APPEND descriptor. Unset variable: nothing happens. Failure: a warning.
inline bool ledger_append(const LedgerEntry& entry, std::ostream& err) {
  const char* path = std::getenv("FRACINT_LEDGER");
  if (path == nullptr || *path == '\0') return true;
  const std::string line = to_json_line(entry);
  const int fd = ::open(path, O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) {
    err << "warning: cannot open ledger " << path << "\n";
    return false;
  }
  const ssize_t written = ::write(fd, line.data(), line.size());
  ::close(fd);
  if (written != static_cast<ssize_t>(line.size())) {
    err << "warning: incomplete ledger write to " << path << "\n";
    return false;
  }
  return true;
}

namespace detail {

/// Collects named numeric results and prints them as text or one JSON object.
class Report {
 public:
  void number(const std::string& key, double v) {
    order_.push_back(key);
    numbers_[key] = v;
    json_[key] = v;
  }
  void integer(const std::string& key, std::uint64_t v) {
    order_.push_back(key);
    numbers_[key] = static_cast<double>(v);
    json_[key] = v;
    integers_.insert({key, v});
  }
  void text(const std::string& key, const std::string& v) {
    order_.push_back(key);
    json_[key] = v;
    texts_[key] = v;
  }
  void raw_json(const std::string& key, nlohmann::json v) { json_[key] = std::move(v); }

  void print(std::ostream& out, bool as_json) const {
    if (as_json) {
      out << json_.dump() << '\n';
      return;
    }
    for (const auto& key : order_) {
      out << key << ' ';
      if (auto it = texts_.find(key); it != texts_.end()) {
        out << it->second;
      } else if (auto jt = integers_.find(key); jt != integers_.end()) {
        out << jt->second;
      } else {
        out << format_number(numbers_.at(key));
      }
      out << '\n';
    }
  }

  const std::map<std::string, double>& numbers() const { return numbers_; }

 private:
  std::vector<std::string> order_;
  std::map<std::string, double> numbers_;
  std::map<std::string, std::uint64_t> integers_;
  std::map<std::string, std::string> texts_;
  nlohmann::json json_ = nlohmann::json::object();
};

inline PositiveRational parse_option(const std::string& name, const std::string& text) {
  try {
    return parse_positive_real(text);
  } catch (const validation_error& e) {
    throw validation_error("--" + name + ": " + e.what());
  }
}

struct BenchReport {
  double x = 0.0;
  double width = 0.0;
  std::uint64_t segments = 0;
  double segment_ms = 0.0;
  double segments_per_second = 0.0;
  double enclosure_width = 0.0;
  std::uint64_t quadrature_points = 0;
  double quadrature_budget = 0.0;
  double evaluation_ratio = 0.0;
};

/// Segment evaluator at enclosure width `width` against the grid size the
/// quadrature error model needs for the same total uncertainty (half spent
/// on its own truncation, half on discretisation).
inline BenchReport bench(const PositiveRational& x, double width, int reps) {
  BenchReport b;
  b.x = x.approx();
  b.width = width;
  const PositiveRational t_min = parse_positive_real(format_number(width));
  if (!(t_min < x)) throw validation_error("bench width must be smaller than x");
  double best_ms = HUGE_VAL;
  for (int i = 0; i < std::max(1, reps); ++i) {
    const Enclosure e = t_total_segments(x, t_min, 1);
    best_ms = std::min(best_ms, e.elapsed_ms);
    b.segments = e.segments;
    b.enclosure_width = e.truncation_width;
  }
  b.segment_ms = best_ms;
  b.segments_per_second = static_cast<double>(b.segments) / std::max(best_ms, 1e-6) * 1e3;

  const double half = width / 2.0;
  std::uint64_t points = 1000;
  while (quadrature_budget(b.x, half, b.x, points) > half) {
    if (points > (std::uint64_t{1} << 62)) throw numeric_error("quadrature grid size overflow");
    points *= 2;
  }
  b.quadrature_points = points;
  b.quadrature_budget = quadrature_budget(b.x, half, b.x, points);
  b.evaluation_ratio = static_cast<double>(points) / static_cast<double>(std::max<std::uint64_t>(b.segments, 1));
  return b;
}

inline void write_bench_csv(std::ostream& os, const BenchReport& b) {
  os << "x,width,segments,segment_ms,segments_per_second,enclosure_width,quadrature_points,quadrature_budget,"
        "evaluation_ratio\n";
  os << format_number(b.x) << ',' << format_number(b.width) << ',' << b.segments << ',' << format_number(b.segment_ms)
     << ',' << format_number(b.segments_per_second) << ',' << format_number(b.enclosure_width) << ','
     << b.quadrature_points << ',' << format_number(b.quadrature_budget) << ',' << format_number(b.evaluation_ratio)
     << '\n';
}

inline const char* mode_name(EnclosureMode m) {
  switch (m) {
    case EnclosureMode::segments:
      return "segments";
    case EnclosureMode::per_d:
      return "per_d";
    case EnclosureMode::direct_sum:
      return "direct_sum";
  }
  return "?";
}

inline void report_enclosure(Report& r, const Enclosure& e) {
  r.number("lo", e.lo);
  r.number("mid", e.mid());
  r.number("hi", e.hi);
  r.number("width", e.truncation_width);
  r.text("mode", mode_name(e.mode));
  r.number("param", e.param);
  r.integer("segments", e.segments);
}

}  // namespace detail

/// Runs one command line; returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"Exact evaluation and asymptotic checks for the integral of |{x/t} - {x/(t+1)}| over t > 0",
               "fracint"};
  app.require_subcommand(1);
  app.fallthrough();
  bool as_json = false;
  app.add_flag("--json", as_json, "Print a single JSON object");

  // const
  double tolerance = 1e-12;
  auto* c_const = app.add_subcommand("const", "Print zeta(3/2), gamma and the limit constants");
  c_const->add_option("--tolerance", tolerance, "Accuracy of the computed constants")->capture_default_str();

  std::string x_text, t_min_text;
  std::uint64_t d = 0;

  auto* c_t0 = app.add_subcommand("t0", "Exact T_0(x)");
  c_t0->add_option("--x", x_text, "x > 0 (decimal or scientific)")->required();

  auto* c_td = app.add_subcommand("td", "Exact T_d(x)");
  c_td->add_option("--x", x_text, "x > 0")->required();
  c_td->add_option("--d", d, "d >= 1")->required()->check(CLI::PositiveNumber);

  std::uint64_t per_d = 0;
  auto* c_eval = app.add_subcommand("eval", "Certified enclosure of T(x)");
  c_eval->add_option("--x", x_text, "x > 0")->required();
  auto* o_tmin = c_eval->add_option("--t-min", t_min_text, "Truncation point (segments mode)");
  auto* o_perd = c_eval->add_option("--per-d", per_d, "Largest d summed exactly (per-d mode)");
  o_tmin->excludes(o_perd);

  std::uint64_t sum_to = 0;
  double total_tol = 0.0;
  bool printed = false;
  auto* c_fd = app.add_subcommand("fd", "Coefficients f(d) and their sums");
  auto* o_fd_d = c_fd->add_option("--d", d, "Single coefficient f(d)");
  auto* o_fd_sum = c_fd->add_option("--sum-to", sum_to, "Partial sum up to D");
  auto* o_fd_total = c_fd->add_option("--total", total_tol, "Full series to this tolerance");
  c_fd->add_flag("--printed", printed, "Also show the variant with last term -4/sqrt(d)");
  o_fd_d->excludes(o_fd_sum)->excludes(o_fd_total);
  o_fd_sum->excludes(o_fd_total);

  std::string which, a_text, b_text;
  auto* c_sum = app.add_subcommand("sum", "Classical fractional-part sums");
  c_sum->add_option("--which", which, "eq1 | eq2 | eq3")->required()->check(CLI::IsMember({"eq1", "eq2", "eq3"}));
  c_sum->add_option("--x", x_text, "x > 0")->required();
  c_sum->add_option("--a", a_text, "Shift a (eq3)");
  c_sum->add_option("--b", b_text, "Shift b > a (eq3)");

  double x_from = 0.0, x_to = 0.0;
  std::size_t points = 0;
  std::string out_path;
  bool no_timing = false;
  auto* c_scan = app.add_subcommand("scan", "Geometric scan of T(x) against the main term (CSV)");
  c_scan->add_option("--x-from", x_from, "First x")->required();
  c_scan->add_option("--x-to", x_to, "Last x")->required();
  c_scan->add_option("--points", points, "Number of grid points")->required();
  c_scan->add_option("--out", out_path, "Write CSV here instead of stdout");
  c_scan->add_option("--t-min", t_min_text, "Fixed truncation point (default max(1e-3, x^(1/5)))");
  c_scan->add_flag("--no-timing", no_timing, "Print 0 for elapsed_ms");

  std::string in_path;
  auto* c_fit = app.add_subcommand("fit", "Fit the residual exponent from a scan CSV");
  c_fit->add_option("--in", in_path, "Scan CSV")->required()->check(CLI::ExistingFile);

  int reps = 3;
  double width = 10.0;
  auto* c_bench = app.add_subcommand("bench", "Segment evaluator throughput and cost against quadrature (CSV)");
  c_bench->add_option("--x", x_text, "x > 0")->required();
  c_bench->add_option("--reps", reps, "Timing repetitions")->capture_default_str();
  c_bench->add_option("--width", width, "Target enclosure width")->capture_default_str();

  std::uint64_t grid = 0;
  auto* c_oracle = app.add_subcommand("oracle", "Brute-force midpoint quadrature of T(x)");
  c_oracle->add_option("--x", x_text, "x > 0")->required();
  c_oracle->add_option("--points", grid, "Grid points (>= 1000)")->required();
  c_oracle->add_option("--t-min", t_min_text, "Lower end of the grid (default 1e-4)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  LedgerEntry entry;
  entry.ts = utc_timestamp();
  entry.command = sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    std::string joined;
    for (const auto& r : opt->results()) joined += (joined.empty() ? "" : " ") + r;
    std::string key = opt->get_name();
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    entry.args[key] = joined.empty() ? "true" : joined;
  }
  if (as_json) entry.args["json"] = "true";

  detail::Report report;
  int code = kExitOk;
  try {
    const std::string name = sub->get_name();
    if (name == "const") {
      const Constants c = constants(tolerance);
      report.number("zeta_three_halves", c.zeta_three_halves);
      report.number("euler_gamma", c.euler_gamma);
      report.number("limit_constant", c.limit_constant);
      report.number("series_total", c.series_total);
      report.print(out, as_json);
    } else if (name == "t0") {
      const auto x = detail::parse_option("x", x_text);
      const double t0 = t0_exact(x);
      report.number("t0", t0);
      report.number("main_term", 2.0 / 3.0 * std::sqrt(x.approx()));
      report.number("deviation", t0 - 2.0 / 3.0 * std::sqrt(x.approx()));
      report.integer("k_cap", k_cap(x));
      report.print(out, as_json);
    } else if (name == "td") {
      const auto x = detail::parse_option("x", x_text);
      const TdResult r = td_exact_detail(x, d);
      report.number("td", r.value);
      report.integer("segments", r.segments);
      report.number("scaled", r.value / std::sqrt(x.approx()));
      report.number("f_value", f_value(d));
      try {
        report.number("closed_form", td_closed_form(x, d));
      } catch (const ClosedFormDiagnostic& diag) {
        report.text("closed_form_diagnostic", diag.what());
      }
      report.print(out, as_json);
    } else if (name == "eval") {
      const auto x = detail::parse_option("x", x_text);
      Enclosure e;
      if (per_d != 0) {
        e = t_total_per_d(x, per_d);
      } else {
        const PositiveRational t_min = t_min_text.empty() ? default_t_min(x) : detail::parse_option("t-min", t_min_text);
        e = t_total_segments(x, t_min);
      }
      detail::report_enclosure(report, e);
      report.print(out, as_json);
    } else if (name == "fd") {
      if (o_fd_d->count() > 0) {
        if (d == 0) throw validation_error("--d must be >= 1");
        report.integer("d", d);
        report.number("f", f_value(d));
        if (printed) report.number("f_printed", f_value_printed(d));
      } else if (o_fd_sum->count() > 0) {
        report.integer("sum_to", sum_to);
        report.number("partial_sum", f_partial_sum(sum_to));
        if (printed) {
          NeumaierSum acc;
          for (std::uint64_t i = 1; i <= sum_to; ++i) acc.add(f_value_printed(i));
          report.number("partial_sum_printed", acc.value());
        }
      } else if (o_fd_total->count() > 0) {
        const double total = f_total(total_tol);
        const double target = constants().series_total;
        report.number("total", total);
        report.number("series_total", target);
        report.number("difference", total - target);
      } else {
        throw validation_error("fd needs one of --d, --sum-to, --total");
      }
      report.print(out, as_json);
    } else if (name == "sum") {
      const auto x = detail::parse_option("x", x_text);
      if (which == "eq1") {
        const double v = fractional_part_sum(x);
        const double gamma = constants().euler_gamma;
        report.number("sum", v);
        report.number("main_term", (1.0 - gamma) * x.approx());
        report.number("deviation", v - (1.0 - gamma) * x.approx());
      } else if (which == "eq2") {
        const double v = adjacent_difference_sum(x);
        const double main = constants().limit_constant * std::sqrt(x.approx());
        report.number("sum", v);
        report.number("main_term", main);
        report.number("deviation", v - main);
      } else {
        if (a_text.empty() || b_text.empty()) throw validation_error("eq3 needs --a and --b");
        const auto a = detail::parse_option("a", a_text);
        const auto b = detail::parse_option("b", b_text);
        const Enclosure e = shifted_difference_sum(x, a, b);
        const double c = PositiveRational::from_rational(b.value() - a.value()).approx();
        report.number("lo", e.lo);
        report.number("hi", e.hi);
        report.number("sum", e.mid());
        report.number("main_term", constants().limit_constant * std::sqrt(c * x.approx()));
      }
      report.print(out, as_json);
    } else if (name == "scan") {
      ScanPolicy policy;
      if (!t_min_text.empty()) policy.t_min = detail::parse_option("t-min", t_min_text);
      const auto records = scan(x_from, x_to, points, policy);
      std::size_t usable = 0;
      for (const auto& r : records) usable += r.usable() ? 1 : 0;
      report.integer("records", records.size());
      report.integer("usable", usable);
      if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
        if (!f) throw validation_error("cannot write " + out_path);
        write_scan_csv(f, records, !no_timing);
        if (as_json) report.print(out, true);
      } else if (as_json) {
        std::ostringstream csv;
        write_scan_csv(csv, records, !no_timing);
        report.raw_json("csv", csv.str());
        report.print(out, true);
      } else {
        write_scan_csv(out, records, !no_timing);
      }
    } else if (name == "fit") {
      std::ifstream f(in_path, std::ios::binary);
      const auto records = read_scan_csv(f);
      const FitResult fit = fit_exponent(records);
      report.number("slope", fit.slope);
      report.number("intercept", fit.intercept);
      report.number("r_squared", fit.r_squared);
      report.integer("n_used", fit.n_used);
      report.number("reference_exponent", kReferenceExponent);
      report.print(out, as_json);
    } else if (name == "bench") {
      const auto x = detail::parse_option("x", x_text);
      if (!(width > 0.0)) throw validation_error("--width must be positive");
      const auto b = detail::bench(x, width, reps);
      report.number("segments_per_second", b.segments_per_second);
      report.number("evaluation_ratio", b.evaluation_ratio);
      report.integer("segments", b.segments);
      report.integer("quadrature_points", b.quadrature_points);
      if (as_json) {
        std::ostringstream csv;
        detail::write_bench_csv(csv, b);
        report.raw_json("csv", csv.str());
        report.print(out, true);
      } else {
        detail::write_bench_csv(out, b);
      }
    } else if (name == "oracle") {
      const auto x = detail::parse_option("x", x_text);
      const double t_min = t_min_text.empty() ? std::min(1e-4, x.approx() / 10.0)
                                              : detail::parse_option("t-min", t_min_text).approx();
      const QuadratureEstimate q = quadrature_T(x, t_min, grid);
      const Enclosure e = t_total_segments(x, PositiveRational::from_double(t_min));
      report.number("value", q.value);
      report.number("budget", q.budget);
      report.number("truncation", q.truncation);
      report.integer("grid_points", q.grid_points);
      report.number("enclosure_lo", e.lo);
      report.number("enclosure_hi", e.hi);
      report.integer("contained", e.contains(q.value, q.budget) ? 1 : 0);
      report.print(out, as_json);
    }
  } catch (const validation_error& e) {
    err << "error: " << e.what() << '\n';
    code = kExitNumeric;
  } catch (const numeric_error& e) {
    err << "error: " << e.what() << '\n';
    code = kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kExitNumeric;
  }

  entry.summary = report.numbers();
  entry.summary["exit_code"] = code;
  entry.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  ledger_append(entry, err);
  return code;
}

}  // namespace fracint::cli
