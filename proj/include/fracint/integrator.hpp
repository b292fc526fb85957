#pragma once

// Closed-form integration of |d - x/(t(t+1))| over floor-constant segments.
//
// On a segment with floor difference d the integrand equals
// |x/(t(t+1)) - d|, whose signed antiderivative is d t + x ln(1 + 1/t). The
// segment length and the argument of log1p are formed from exact integer
// numerators so no cancellation occurs between the two endpoints.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "fracint/error.hpp"
#include "fracint/lattice.hpp"
#include "fracint/numeric.hpp"
#include "fracint/parallel.hpp"

namespace fracint {

/// A(t) = d t + x ln((t+1)/t), so that A'(t) = d - x/(t(t+1)).
inline double antiderivative(std::uint64_t d, double x, double t) {
  if (!(t > 0.0)) throw validation_error("antiderivative requires t > 0");
  return static_cast<double>(d) * t + x * std::log1p(1.0 / t);
}

/// Integral of x/(t(t+1)) over (x, +inf).
inline double analytic_head(double x) { return x * std::log1p(1.0 / x); }

namespace detail {

/// Sign of x - d t(t+1) at a finite breakpoint, exact.
template <class Int>
int excess_sign(const ExactX<Int>& x, std::uint64_t d, const Breakpoint& b) {
  const Int i(b.index);
  const Int di(d);
  Int lhs, rhs;
  if (b.family == Family::reciprocal) {
    // t = x/k:      k^2 vs d (x + k)   ->  q k^2 vs d (p + q k)
    lhs = x.q * i * i;
    rhs = di * (x.p + x.q * i);
  } else {
    // t = x/h - 1:  h^2 vs d (x - h)   ->  q h^2 vs d (p - q h)
    lhs = x.q * i * i;
    rhs = di * (x.p - x.q * i);
  }
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

/// x * ln((1 + 1/a) / (1 + 1/b)) for 0 < a < b, given b - a separately.
inline double reciprocal_log_mass(double x, double a, double b, double gap) {
  return x * std::log1p(gap / (a * (b + 1.0)));
}

}  // namespace detail

/// Integral of |d - x/(t(t+1))| over a finite segment produced for this x.
template <class Int>
double segment_integral(const Segment& seg, const ExactX<Int>& x) {
  if (!seg.hi.is_finite() || !seg.lo.is_finite()) throw validation_error("segment_integral requires a bounded segment");
  const auto [n_lo, m_lo] = breakpoint_fraction(x, seg.lo);
  const auto [n_hi, m_hi] = breakpoint_fraction(x, seg.hi);
  // hi - lo = (n_hi m_lo - n_lo m_hi) / (m_hi m_lo), numerator exact.
  const double gap_num = detail::to_double(n_hi * m_lo - n_lo * m_hi);
  const double m_lo_d = detail::to_double(m_lo);
  const double m_hi_d = detail::to_double(m_hi);
  const double n_lo_d = detail::to_double(n_lo);
  const double n_hi_d = detail::to_double(n_hi);
  const double length = gap_num / (m_hi_d * m_lo_d);
  // (hi - lo) / (lo (hi + 1)) = gap_num / (n_lo (n_hi + m_hi))
  const double mass = x.value * std::log1p(gap_num / (n_lo_d * (n_hi_d + m_hi_d)));

  const std::uint64_t d = seg.d();
  if (d == 0) return mass;
  const double dd = static_cast<double>(d);

  double result = 0.0;
  if (detail::excess_sign(x, d, seg.hi) >= 0) {
    result = mass - dd * length;
  } else if (detail::excess_sign(x, d, seg.lo) <= 0) {
    result = dd * length - mass;
  } else {
    // Sign change inside: split at the root N of t(t+1) = x/d.
    const double lo = n_lo_d / m_lo_d;
    const double hi = n_hi_d / m_hi_d;
    const double root = n_d(x.value, d);
    const double below = detail::reciprocal_log_mass(x.value, lo, root, root - lo) - dd * (root - lo);
    const double above = dd * (hi - root) - detail::reciprocal_log_mass(x.value, root, hi, hi - root);
    result = below + above;
  }
  return std::clamp(result, 0.0, length);
}

inline double segment_integral(const Segment& seg, const PositiveRational& x) {
  const std::uint64_t idx = std::max(std::max(seg.k, seg.h), std::max(seg.lo.index, seg.hi.index)) + 2;
  return with_exact(x, idx, [&](const auto& ex) { return segment_integral(seg, ex); });
}

// ---------------------------------------------------------------------------
// T_0 and T_d

/// T_0(x): the d = 0 region, (x, inf) plus (x/(k+1), x/k - 1] for 1 <= k <= K.
inline double t0_exact(const PositiveRational& x) {
  const std::uint64_t cap = k_cap(x);
  return with_exact(x, cap + 2, [&](const auto& ex) {
    using Int = std::remove_cvref_t<decltype(ex.p)>;
    NeumaierSum acc;
    acc.add(analytic_head(ex.value));
    const double p = detail::to_double(ex.p);
    const double q = detail::to_double(ex.q);
    for (std::uint64_t k = 1; k <= cap; ++k) {
      // Over (x/(k+1), x/k - 1] the mass is x log1p((x - k(k+1)) / x^2).
      const Int excess = ex.p - ex.q * Int(k) * Int(k + 1);
      if (excess <= 0) continue;
      acc.add(ex.value * std::log1p(detail::to_double(excess) * q / (p * p)));
    }
    return acc.value();
  });
}

struct TdResult {
  double value = 0.0;
  std::uint64_t segments = 0;
};

template <class Int>
TdResult td_exact_detail(const ExactX<Int>& x, std::uint64_t d) {
  const std::uint64_t first = k_d(x, d - 1) + 1;
  const std::uint64_t last = k_d(x, d + 1);
  NeumaierSum acc;
  TdResult r;
  for (std::uint64_t k = std::max(first, d); k <= last; ++k) {
    if (k == 0) continue;
    if (const auto seg = interval_for(x, d, k)) {
      acc.add(segment_integral(*seg, x));
      ++r.segments;
    }
  }
  r.value = acc.value();
  return r;
}

inline std::uint64_t td_index_bound(const PositiveRational& x, std::uint64_t d) {
  const double dd = static_cast<double>(d + 1);
  const double bound = (dd + std::sqrt(dd * dd + 4.0 * dd * x.approx())) / 2.0 + 4.0;
  if (!(bound < 1e18)) throw validation_error("x or d too large");
  return static_cast<std::uint64_t>(bound);
}

/// T_d(x) by summing exact segment integrals over k in (K_{d-1}, K_{d+1}].
inline TdResult td_exact_detail(const PositiveRational& x, std::uint64_t d) {
  if (d == 0) throw validation_error("td_exact requires d >= 1");
  return with_exact(x, td_index_bound(x, d), [&](const auto& ex) { return td_exact_detail(ex, d); });
}

inline double td_exact(const PositiveRational& x, std::uint64_t d) { return td_exact_detail(x, d).value; }

/// Raised when the closed-form path cannot be trusted for (x, d); carries
/// both evaluations so the disagreement is visible.
class ClosedFormDiagnostic : public numeric_error {
 public:
  ClosedFormDiagnostic(const std::string& reason, double closed, double exact)
      : numeric_error(describe(reason, closed, exact)), reason_(reason), closed_(closed), exact_(exact) {}

  const std::string& reason() const noexcept { return reason_; }
  double closed_value() const noexcept { return closed_; }
  double exact_value() const noexcept { return exact_; }

 private:
  static std::string describe(const std::string& reason, double closed, double exact) {
    std::ostringstream os;
    os.precision(17);
    os << "closed form disagrees with segment sum: " << reason << " (closed=" << closed << ", exact=" << exact << ")";
    return os.str();
  }

  std::string reason_;
  double closed_;
  double exact_;
};

/// Thresholds that delimit the three k-ranges of T_d.
struct TdRanges {
  std::uint64_t below = 0;  // K_{d-1}
  std::uint64_t at = 0;     // K_d
  std::uint64_t above = 0;  // K_{d+1}
  double root = 0.0;        // N_d
};

/// T_d(x) from the telescoped harmonic and logarithm blocks:
///
///   d [ sum_{C-d-1 < j <= C} x/j - sum_{A-d+1 < j <= A} x/j ]
/// + sum_{A < j <= C} x log(1 + j/x) + sum_{A+1 < j < C} x log(1 - (j-d)/x)
/// + d (C - A - 2 - 2N) - 2x log(1 + 1/N)
///
/// with A = K_{d-1}, B = K_d, C = K_{d+1}, N = N_d. Valid when A < B < C,
/// i.e. when the k-range below K_d and the one above are both well formed.
inline double td_closed_form(const PositiveRational& x, std::uint64_t d) {
  if (d == 0) throw validation_error("td_closed_form requires d >= 1");
  TdRanges r;
  with_exact(x, td_index_bound(x, d), [&](const auto& ex) {
    r.below = k_d(ex, d - 1);
    r.at = k_d(ex, d);
    r.above = k_d(ex, d + 1);
    return 0;
  });
  r.root = n_d(x, d);
  const double xv = x.approx();
  const double dd = static_cast<double>(d);

  if (!(r.below < r.at && r.at < r.above)) {
    throw ClosedFormDiagnostic("empty threshold range K_{d-1} < K_d < K_{d+1}", std::nan(""), td_exact(x, d));
  }
  if (r.root < xv / static_cast<double>(r.at + 1) * (1 - 1e-12) ||
      r.root > xv / static_cast<double>(r.at) * (1 + 1e-12)) {
    throw ClosedFormDiagnostic("N_d outside (x/(K_d+1), x/K_d]", std::nan(""), td_exact(x, d));
  }

  NeumaierSum acc;
  const std::uint64_t a = r.below;
  const std::uint64_t c = r.above;
  // Harmonic windows.
  for (std::uint64_t j = c - d; j <= c; ++j) acc.add(dd * xv / static_cast<double>(j));
  for (std::uint64_t j = a + 2 - d; j <= a; ++j) acc.add(-dd * xv / static_cast<double>(j));
  // Logarithm blocks.
  for (std::uint64_t j = a + 1; j <= c; ++j) acc.add(xv * std::log1p(static_cast<double>(j) / xv));
  for (std::uint64_t j = a + 2; j + 1 <= c; ++j) acc.add(xv * std::log1p(-static_cast<double>(j - d) / xv));
  // Constant and root terms.
  acc.add(dd * static_cast<double>(c - a - 2));
  acc.add(-2.0 * dd * r.root);
  acc.add(-2.0 * xv * std::log1p(1.0 / r.root));
  return acc.value();
}

/// Closed form cross-checked against the segment sum; throws the diagnostic
/// instead of returning a silently different number.
inline double td_closed_form_checked(const PositiveRational& x, std::uint64_t d, double rel_tol = 1e-9) {
  const double closed = td_closed_form(x, d);
  const double exact = td_exact(x, d);
  if (!(std::abs(closed - exact) <= rel_tol * (1.0 + std::abs(exact)))) {
    throw ClosedFormDiagnostic("value mismatch", closed, exact);
  }
  return closed;
}

// ---------------------------------------------------------------------------
// Enclosures for T(x)

enum class EnclosureMode { segments, per_d, direct_sum };

struct Enclosure {
  double lo = 0.0;
  double hi = 0.0;
  double truncation_width = 0.0;
  EnclosureMode mode = EnclosureMode::segments;
  double param = 0.0;  // t_min (segments) or D (per_d)
  std::uint64_t segments = 0;
  double elapsed_ms = 0.0;

  double mid() const noexcept { return 0.5 * (lo + hi); }
  bool contains(double v, double slack = 0.0) const noexcept { return v >= lo - slack && v <= hi + slack; }
};

/// max(1e-3, x^{1/5}) clamped below x/10, rounded to six significant digits.
inline PositiveRational default_t_min(const PositiveRational& x) {
  const double raw = std::min(std::max(1e-3, std::pow(x.approx(), 0.2)), x.approx() / 10.0);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", raw);
  PositiveRational t = parse_positive_real(buf);
  if (!(t < x)) t = PositiveRational::from_rational(x.value() / 10);
  return t;
}

namespace detail {

inline constexpr std::uint64_t kChunkIndices = std::uint64_t{1} << 15;

struct ChunkResult {
  NeumaierSum sum;
  std::uint64_t segments = 0;
  Breakpoint bottom;
  bool reached_t_min = false;
};

}  // namespace detail

/// Segments mode: lo = head + integrals over (t_cut, x], hi = lo + t_cut.
inline Enclosure t_total_segments(const PositiveRational& x, const PositiveRational& t_min,
                                  unsigned threads = thread_count()) {
  const auto start = std::chrono::steady_clock::now();
  const StopIndices stop = stop_indices(x, t_min);
  const std::uint64_t k_end = stop.k;  // chunks cover k in [1, k_end)
  const std::size_t chunks = static_cast<std::size_t>((k_end - 1 + detail::kChunkIndices - 1) / detail::kChunkIndices);

  Enclosure e;
  e.mode = EnclosureMode::segments;
  e.param = t_min.approx();
  with_exact(x, std::max(stop.k, stop.h) + 2, [&](const auto& ex) {
    const auto parts = map_blocks<detail::ChunkResult>(
        chunks,
        [&](std::size_t i) {
          const std::uint64_t first = 1 + i * detail::kChunkIndices;
          const std::uint64_t limit = std::min(first + detail::kChunkIndices, k_end);
          detail::ChunkResult r;
          const WalkResult w =
              walk_segments(ex, first, limit, stop, [&](const Segment& s) { r.sum.add(segment_integral(s, ex)); });
          r.segments = w.segments;
          r.bottom = w.bottom;
          r.reached_t_min = w.reached_t_min;
          return r;
        },
        threads);
    NeumaierSum total;
    total.add(analytic_head(ex.value));
    for (const auto& p : parts) {
      total.merge(p.sum);
      e.segments += p.segments;
    }
    if (parts.empty() || !parts.back().reached_t_min) throw numeric_error("segment walk did not reach t_min");
    const auto [n, m] = breakpoint_fraction(ex, parts.back().bottom);
    e.truncation_width = std::max(0.0, detail::to_double(n) / detail::to_double(m));
    e.lo = total.value();
    return 0;
  });
  e.hi = e.lo + e.truncation_width;
  e.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return e;
}

/// Per-d mode: lo = T_0 + sum_{d <= D} T_d, hi = lo + sqrt(x / (D - 1)).
inline Enclosure t_total_per_d(const PositiveRational& x, std::uint64_t max_d) {
  if (max_d < 2) throw validation_error("per-d mode requires D >= 2");
  const auto start = std::chrono::steady_clock::now();
  Enclosure e;
  e.mode = EnclosureMode::per_d;
  e.param = static_cast<double>(max_d);
  NeumaierSum acc;
  acc.add(t0_exact(x));
  for (std::uint64_t d = 1; d <= max_d; ++d) {
    const TdResult r = td_exact_detail(x, d);
    acc.add(r.value);
    e.segments += r.segments;
  }
  e.lo = acc.value();
  e.truncation_width = std::sqrt(x.approx() / static_cast<double>(max_d - 1));
  e.hi = e.lo + e.truncation_width;
  e.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return e;
}

}  // namespace fracint
