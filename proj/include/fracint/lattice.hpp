#pragma once

// Floor-constant structure of the integrand |{x/t} - {x/(t+1)}|.
//
// On t > 0 the pair (k, h) = (floor(x/t), floor(x/(t+1))) is piecewise
// constant. Its breakpoints form two families: x/k (k >= 1) and x/h - 1
// (h >= 1). Every comparison between breakpoints, and every threshold, is
// decided in exact integer arithmetic on x = p/q. The hot loops are templated
// on the integer type: __int128 when a bit budget proves it cannot overflow,
// boost::multiprecision::cpp_int otherwise.

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fracint/error.hpp"
#include "fracint/numeric.hpp"

namespace fracint {

using wide_int = __int128;

namespace detail {

inline wide_int to_wide(const big_int& v) {
  const big_int mask = (big_int(1) << 64) - 1;
  const auto lo = static_cast<unsigned __int128>((v & mask).convert_to<std::uint64_t>());
  const auto hi = static_cast<unsigned __int128>((v >> 64).convert_to<std::uint64_t>());
  return static_cast<wide_int>((hi << 64) | lo);
}

inline double to_double(wide_int v) { return static_cast<double>(v); }
inline double to_double(const big_int& v) { return v.convert_to<double>(); }

inline unsigned index_bits(std::uint64_t v) {
  unsigned n = 0;
  while (v != 0) {
    ++n;
    v >>= 1;
  }
  return n;
}

}  // namespace detail

/// x = p/q held in the integer type chosen for a computation.
template <class Int>
struct ExactX {
  Int p;
  Int q;
  double value;
};

/// True when every product formed by the lattice and integrator for indices
/// up to `max_index` fits in a signed 128-bit integer.
inline bool fits_wide(const PositiveRational& x, std::uint64_t max_index) {
  const std::size_t bits = detail::bit_length(x.num()) + detail::bit_length(x.den()) +
                           2 * detail::index_bits(max_index) + 4;
  return bits <= 126;
}

/// Calls `fn(ExactX<Int>)` with the narrowest safe integer type.
template <class Fn>
decltype(auto) with_exact(const PositiveRational& x, std::uint64_t max_index, Fn&& fn) {
  if (fits_wide(x, max_index)) {
    return fn(ExactX<wide_int>{detail::to_wide(x.num()), detail::to_wide(x.den()), x.approx()});
  }
  return fn(ExactX<big_int>{x.num(), x.den(), x.approx()});
}

// ---------------------------------------------------------------------------
// Thresholds

template <class Int>
std::uint64_t k_cap(const ExactX<Int>& x) {
  const auto fits = [&](std::uint64_t k) { return x.q * Int(k) * Int(k + 1) <= x.p; };
  const double seed = std::floor(std::sqrt(x.value + 0.25) - 0.5);
  std::uint64_t k = seed > 0.0 ? static_cast<std::uint64_t>(seed) : 0;
  while (fits(k + 1)) ++k;
  while (k > 0 && !fits(k)) --k;
  return k;
}

/// Largest k with k(k+1) <= x.
inline std::uint64_t k_cap(const PositiveRational& x) {
  const double seed = std::sqrt(x.approx() + 0.25) + 2.0;
  if (!(seed < 1e18)) throw validation_error("x too large");
  return with_exact(x, static_cast<std::uint64_t>(seed), [](const auto& ex) { return k_cap(ex); });
}

template <class Int>
std::uint64_t k_d(const ExactX<Int>& x, std::uint64_t d) {
  if (d == 0) return 0;
  const Int dp = Int(d) * x.p;
  const auto fits = [&](std::uint64_t k) { return x.q * Int(k - d) * Int(k) <= dp; };
  const double dd = static_cast<double>(d);
  const double seed = std::floor((dd + std::sqrt(dd * dd + 4.0 * dd * x.value)) / 2.0);
  std::uint64_t k = seed > dd ? static_cast<std::uint64_t>(seed) : d;
  while (fits(k + 1)) ++k;
  while (k > d && !fits(k)) --k;
  return k;
}

/// Largest k with (k - d) k <= d x; K_0 = 0.
inline std::uint64_t k_d(const PositiveRational& x, std::uint64_t d) {
  if (d == 0) return 0;
  const double dd = static_cast<double>(d);
  const double seed = (dd + std::sqrt(dd * dd + 4.0 * dd * x.approx())) / 2.0 + 2.0;
  if (!(seed < 1e18)) throw validation_error("x or d too large");
  return with_exact(x, static_cast<std::uint64_t>(seed), [d](const auto& ex) { return k_d(ex, d); });
}

/// Positive root of t(t+1) = x/d, in the cancellation-free form 2y / (1 + sqrt(1 + 4y)).
inline double n_d(double x, std::uint64_t d) {
  if (d == 0) throw validation_error("n_d requires d >= 1");
  const double y = x / static_cast<double>(d);
  return 2.0 * y / (1.0 + std::sqrt(1.0 + 4.0 * y));
}

inline double n_d(const PositiveRational& x, std::uint64_t d) { return n_d(x.approx(), d); }

// ---------------------------------------------------------------------------
// Breakpoints and segments

enum class Family : std::uint8_t {
  reciprocal,  // x / index
  shifted,     // x / index - 1
  infinity,
};

struct Breakpoint {
  Family family = Family::infinity;
  std::uint64_t index = 0;

  static constexpr Breakpoint reciprocal(std::uint64_t k) { return {Family::reciprocal, k}; }
  static constexpr Breakpoint shifted(std::uint64_t h) { return {Family::shifted, h}; }
  static constexpr Breakpoint infinite() { return {Family::infinity, 0}; }

  bool is_finite() const noexcept { return family != Family::infinity; }

  /// Exact value; throws for +infinity.
  big_rational value(const PositiveRational& x) const {
    switch (family) {
      case Family::reciprocal:
        return x.value() / big_rational(index);
      case Family::shifted:
        return x.value() / big_rational(index) - 1;
      case Family::infinity:
        break;
    }
    throw validation_error("breakpoint at infinity has no finite value");
  }

  double approx(double x) const noexcept {
    switch (family) {
      case Family::reciprocal:
        return x / static_cast<double>(index);
      case Family::shifted:
        return x / static_cast<double>(index) - 1.0;
      case Family::infinity:
        break;
    }
    return HUGE_VAL;
  }

  friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// Numerator and denominator of a finite breakpoint as integers: x/k = p/(qk),
/// x/h - 1 = (p - qh)/(qh).
template <class Int>
std::pair<Int, Int> breakpoint_fraction(const ExactX<Int>& x, const Breakpoint& b) {
  const Int qi = x.q * Int(b.index);
  if (b.family == Family::reciprocal) return {x.p, qi};
  return {x.p - qi, qi};
}

/// Sign of a - b for two breakpoints, decided exactly.
template <class Int>
int compare(const ExactX<Int>& x, const Breakpoint& a, const Breakpoint& b) {
  if (a.family == Family::infinity || b.family == Family::infinity) {
    return static_cast<int>(a.family == Family::infinity) - static_cast<int>(b.family == Family::infinity);
  }
  if (a.family == b.family) {
    // Both families decrease in the index.
    return a.index < b.index ? 1 : (a.index > b.index ? -1 : 0);
  }
  if (a.family == Family::shifted) return -compare(x, b, a);
  // x/k vs x/h - 1  <=>  p h vs (p - q h) k
  const Int lhs = x.p * Int(b.index);
  const Int rhs = (x.p - x.q * Int(b.index)) * Int(a.index);
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

/// Maximal t-interval (lo, hi] on which floor(x/t) = k and floor(x/(t+1)) = h.
struct Segment {
  Breakpoint lo;
  Breakpoint hi;
  std::uint64_t k = 0;
  std::uint64_t h = 0;

  std::uint64_t d() const noexcept { return k - h; }

  PositiveRational t_lo(const PositiveRational& x) const { return PositiveRational::from_rational(lo.value(x)); }
  /// Upper end; std::nullopt for +infinity.
  std::optional<PositiveRational> t_hi(const PositiveRational& x) const {
    if (!hi.is_finite()) return std::nullopt;
    return PositiveRational::from_rational(hi.value(x));
  }

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// (x/(k+1), x/k] intersected with (x/(h+1) - 1, x/h - 1] for h = k - d, where
/// h = 0 makes the second interval (x - 1, +inf). std::nullopt when empty.
template <class Int>
std::optional<Segment> interval_for(const ExactX<Int>& x, std::uint64_t d, std::uint64_t k) {
  if (k < d || k == 0) throw validation_error("interval_for requires k >= max(d, 1)");
  const std::uint64_t h = k - d;
  const Breakpoint lo_k = Breakpoint::reciprocal(k + 1);
  const Breakpoint lo_h = Breakpoint::shifted(h + 1);
  const Breakpoint lo = compare(x, lo_k, lo_h) >= 0 ? lo_k : lo_h;
  Breakpoint hi = Breakpoint::reciprocal(k);
  if (h > 0) {
    const Breakpoint hi_h = Breakpoint::shifted(h);
    if (compare(x, hi_h, hi) < 0) hi = hi_h;
  }
  if (compare(x, lo, hi) >= 0) return std::nullopt;
  return Segment{lo, hi, k, h};
}

inline std::optional<Segment> interval_for(const PositiveRational& x, std::uint64_t d, std::uint64_t k) {
  return with_exact(x, k + 2, [&](const auto& ex) { return interval_for(ex, d, k); });
}

/// Indices at which each breakpoint family first drops to or below t_min.
struct StopIndices {
  std::uint64_t k = 0;  // smallest k with x/k <= t_min
  std::uint64_t h = 0;  // smallest h with x/h - 1 <= t_min
};

inline StopIndices stop_indices(const PositiveRational& x, const PositiveRational& t_min) {
  if (!(t_min < x)) throw validation_error("t_min must be smaller than x");
  const auto ceil_div = [](const big_int& a, const big_int& b) { return big_int((a + b - 1) / b); };
  // k >= x / t_min  and  h >= x / (t_min + 1)
  const big_int k = ceil_div(x.num() * t_min.den(), x.den() * t_min.num());
  const big_int h = ceil_div(x.num() * t_min.den(), x.den() * (t_min.num() + t_min.den()));
  if (k > big_int(std::uint64_t{1} << 62)) throw validation_error("t_min too small for x");
  return {k.convert_to<std::uint64_t>(), h.convert_to<std::uint64_t>()};
}

/// Outcome of a descending breakpoint walk.
struct WalkResult {
  std::uint64_t segments = 0;
  Breakpoint bottom;     // lower end of the last emitted segment
  bool reached_t_min = false;
};

/// Walks segments downward from x/k_first, calling visit(segment) for each.
/// Stops after emitting the segment whose lower end is the first breakpoint
/// <= t_min (given as stop indices), or on reaching the breakpoint x/k_limit.
template <class Int, class Visit>
WalkResult walk_segments(const ExactX<Int>& x, std::uint64_t k_first, std::uint64_t k_limit,
                         const StopIndices& stop, Visit&& visit) {
  std::uint64_t k = k_first;
  // floor(x / (x/k + 1)) = floor(p k / (p + q k))
  std::uint64_t h = static_cast<std::uint64_t>((x.p * Int(k)) / (x.p + x.q * Int(k)));
  Breakpoint top = Breakpoint::reciprocal(k);
  WalkResult result;
  for (;;) {
    const Breakpoint next_k = Breakpoint::reciprocal(k + 1);
    const Breakpoint next_h = Breakpoint::shifted(h + 1);
    const int order = compare(x, next_k, next_h);
    const Breakpoint lo = order >= 0 ? next_k : next_h;
    visit(Segment{lo, top, k, h});
    ++result.segments;
    result.bottom = lo;
    if (k + 1 >= stop.k && h + 1 >= stop.h) {
      result.reached_t_min = true;
      return result;
    }
    if (order >= 0 && k + 1 >= k_limit) return result;
    if (order >= 0) ++k;
    if (order <= 0) ++h;
    top = lo;
  }
}

/// Segments covering (t_cut, x], where t_cut is the largest breakpoint <= t_min.
struct SegmentCover {
  std::vector<Segment> segments;
  Breakpoint t_cut;
};

inline SegmentCover segments(const PositiveRational& x, const PositiveRational& t_min) {
  const StopIndices stop = stop_indices(x, t_min);
  SegmentCover cover;
  with_exact(x, std::max(stop.k, stop.h) + 2, [&](const auto& ex) {
    const WalkResult r = walk_segments(ex, 1, stop.k, stop, [&](const Segment& s) { cover.segments.push_back(s); });
    cover.t_cut = r.bottom;
    return 0;
  });
  return cover;
}

}  // namespace fracint
