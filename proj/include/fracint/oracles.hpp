#pragma once

// Reference computations that share no code with the breakpoint machinery:
// uniform-grid quadrature of the integrand from raw fractional parts, and
// the classical finite sums of fractional parts evaluated exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <vector>

#include "fracint/error.hpp"
#include "fracint/integrator.hpp"
#include "fracint/lattice.hpp"
#include "fracint/numeric.hpp"
#include "fracint/parallel.hpp"

namespace fracint {

struct QuadratureEstimate {
  double value = 0.0;
  std::uint64_t grid_points = 0;
  double budget = 0.0;      // heuristic discretisation error
  double truncation = 0.0;  // width of the unsampled interval (0, t_min]
};

namespace detail {

inline double frac(double v) { return v - std::floor(v); }

inline constexpr std::uint64_t kQuadratureBlock = std::uint64_t{1} << 18;

/// Midpoint sum h * sum_i g(lo + (i + 1/2) h) in fixed blocks.
template <class Integrand>
double midpoint_rule(double lo, double hi, std::uint64_t points, Integrand&& g, unsigned threads) {
  const double step = (hi - lo) / static_cast<double>(points);
  const std::size_t blocks = static_cast<std::size_t>((points + kQuadratureBlock - 1) / kQuadratureBlock);
  const auto parts = map_blocks<NeumaierSum>(
      blocks,
      [&](std::size_t b) {
        NeumaierSum acc;
        const std::uint64_t first = b * kQuadratureBlock;
        const std::uint64_t last = std::min(points, first + kQuadratureBlock);
        for (std::uint64_t i = first; i < last; ++i) acc.add(g(lo + (static_cast<double>(i) + 0.5) * step));
        return acc;
      },
      threads);
  return step * reduce_ordered(parts);
}

}  // namespace detail

/// Error model for the midpoint rule on [t_min, upper] with `points` cells.
///
/// Each jump of the integrand costs at most one cell width of error, with a
/// random sign; below t_s = sqrt(x h) jumps are denser than cells and every
/// cell counts once. Smooth cells add h^2/24 times the integral of |g''|
/// (g'' ~ 6x/t^4). The jump part is taken at three standard deviations of a
/// unit random walk.
inline double quadrature_budget(double x, double t_min, double upper, std::uint64_t points) {
  const double step = (upper - t_min) / static_cast<double>(points);
  const double t_split = std::clamp(std::sqrt(x * step), t_min, upper);
  const double dense_cells = (t_split - t_min) / step;
  const double sparse_jumps = std::max(0.0, x / t_split - x / upper) + std::max(0.0, x / (t_split + 1.0) - x / (upper + 1.0));
  const double smooth = step * step / 24.0 * 2.0 * x / (t_split * t_split * t_split);
  return 3.0 * step * std::sqrt(dense_cells + sparse_jumps + 1.0) + smooth;
}

/// Midpoint quadrature of T(x) over [t_min, x] plus the exact head on (x, inf).
inline QuadratureEstimate quadrature_T(const PositiveRational& x, double t_min, std::uint64_t grid_points,
                                       unsigned threads = thread_count()) {
  const double xv = x.approx();
  if (grid_points < 1000) throw validation_error("quadrature needs at least 1000 grid points");
  if (!(t_min > 0.0) || !(t_min < xv)) throw validation_error("quadrature requires 0 < t_min < x");
  const auto integrand = [xv](double t) { return std::abs(detail::frac(xv / t) - detail::frac(xv / (t + 1.0))); };
  QuadratureEstimate q;
  q.grid_points = grid_points;
  q.value = xv * std::log1p(1.0 / xv) + detail::midpoint_rule(t_min, xv, grid_points, integrand, threads);
  q.budget = quadrature_budget(xv, t_min, xv, grid_points);
  q.truncation = t_min;
  return q;
}

/// Midpoint quadrature of T_d(x): the integrand restricted to
/// floor(x/t) - floor(x/(t+1)) = d, sampled over [x / (2 K_{d+1}), x].
inline QuadratureEstimate quadrature_Td(const PositiveRational& x, std::uint64_t d, std::uint64_t grid_points,
                                        unsigned threads = thread_count()) {
  if (d == 0) throw validation_error("quadrature_Td requires d >= 1");
  if (grid_points < 1000) throw validation_error("quadrature needs at least 1000 grid points");
  const double xv = x.approx();
  const double lower = xv / (2.0 * static_cast<double>(k_d(x, d + 1)));
  const double dd = static_cast<double>(d);
  const auto integrand = [xv, dd](double t) {
    const double a = xv / t;
    const double b = xv / (t + 1.0);
    if (std::floor(a) - std::floor(b) != dd) return 0.0;
    return std::abs(detail::frac(a) - detail::frac(b));
  };
  QuadratureEstimate q;
  q.grid_points = grid_points;
  q.value = detail::midpoint_rule(lower, xv, grid_points, integrand, threads);
  q.budget = quadrature_budget(xv, lower, xv, grid_points);
  return q;
}

namespace detail {

inline std::uint64_t floor_of(const PositiveRational& x, double limit) {
  if (!(x.approx() <= limit)) throw validation_error("x exceeds the supported range for direct sums");
  return static_cast<std::uint64_t>(x.num() / x.den());
}

}  // namespace detail

/// sum_{n <= x} {x/n}, each term from an exact integer remainder.
inline double fractional_part_sum(const PositiveRational& x) {
  const std::uint64_t n_max = detail::floor_of(x, 1e9);
  return with_exact(x, n_max + 2, [&](const auto& ex) {
    using Int = std::remove_cvref_t<decltype(ex.p)>;
    NeumaierSum acc;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
      const Int den = ex.q * Int(n);
      acc.add(detail::to_double(Int(ex.p % den)) / detail::to_double(den));
    }
    return acc.value();
  });
}

/// sum_{n >= 1} |{x/n} - {x/(n+1)}|. Past n = floor(x) both parts equal their
/// arguments and the tail telescopes to x / (floor(x) + 1).
inline double adjacent_difference_sum(const PositiveRational& x) {
  const std::uint64_t n_max = detail::floor_of(x, 1e9);
  return with_exact(x, n_max + 2, [&](const auto& ex) {
    using Int = std::remove_cvref_t<decltype(ex.p)>;
    NeumaierSum acc;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
      // r1/(qn) - r2/(q(n+1)) = (r1 (n+1) - r2 n) / (q n (n+1))
      const Int r1 = ex.p % (ex.q * Int(n));
      const Int r2 = ex.p % (ex.q * Int(n + 1));
      Int num = r1 * Int(n + 1) - r2 * Int(n);
      if (num < 0) num = -num;
      const double den = detail::to_double(ex.q) * static_cast<double>(n) * static_cast<double>(n + 1);
      acc.add(detail::to_double(num) / den);
    }
    const double n_next = static_cast<double>(n_max + 1);
    acc.add(ex.value / n_next);
    return acc.value();
  });
}

/// sum_{n >= 0} |{x/(n+a)} - {x/(n+b)}| for b > a > 0, enclosed with width
/// at most 1e-9 x. Once n + a > x both arguments are below one and the term
/// is x c / ((n+a)(n+b)), c = b - a; the remainder past the cutoff M lies in
/// [x log((M+b)/(M+a)), that + x c / ((M+a)(M+b))].
inline Enclosure shifted_difference_sum(const PositiveRational& x, const PositiveRational& a,
                                        const PositiveRational& b) {
  if (!(a < b)) throw validation_error("shifted_difference_sum requires b > a");
  if (!(x.approx() <= 1e9)) throw validation_error("x exceeds the supported range for direct sums");
  const big_rational c_exact = b.value() - a.value();
  const double c = PositiveRational::from_rational(c_exact).approx();
  const double xv = x.approx();
  const double av = a.approx();
  const double bv = b.approx();

  // First n with n + a > x.
  const big_rational gap = x.value() - a.value();
  std::uint64_t direct_end = 0;
  if (gap >= 0) {
    const big_int fl = boost::multiprecision::numerator(gap) / boost::multiprecision::denominator(gap);
    direct_end = fl.convert_to<std::uint64_t>() + 1;
  }

  NeumaierSum acc;
  {
    // x/(n+a) = p qa / (q (n qa + pa)) with exact remainders.
    const big_int& p = x.num();
    const big_int& q = x.den();
    const std::size_t ratio_bits = std::max({detail::bit_length(a.num()), detail::bit_length(b.num()),
                                             std::size_t{detail::index_bits(direct_end + 1)}});
    const std::size_t bits = detail::bit_length(p) + 2 * detail::bit_length(q) + detail::bit_length(a.den()) +
                             detail::bit_length(b.den()) + 2 * ratio_bits + 6;
    const auto run = [&](auto tag) {
      using Int = decltype(tag);
      const auto conv = [](const big_int& v) {
        if constexpr (std::is_same_v<Int, wide_int>) {
          return detail::to_wide(v);
        } else {
          return v;
        }
      };
      const Int pi = conv(p), qi = conv(q), pa = conv(a.num()), qa = conv(a.den()), pb = conv(b.num()),
                qb = conv(b.den());
      const Int num_a = pi * qa;
      const Int num_b = pi * qb;
      for (std::uint64_t n = 0; n < direct_end; ++n) {
        const Int den_a = qi * (Int(n) * qa + pa);
        const Int den_b = qi * (Int(n) * qb + pb);
        const Int ra = num_a % den_a;
        const Int rb = num_b % den_b;
        // ra/den_a - rb/den_b, numerator exact
        Int diff = ra * den_b - rb * den_a;
        if (diff < 0) diff = -diff;
        acc.add(detail::to_double(diff) / (detail::to_double(den_a) * detail::to_double(den_b)));
      }
    };
    if (bits <= 126) {
      run(wide_int{});
    } else {
      run(big_int{});
    }
  }

  const double cutoff = std::ceil(std::sqrt(c * 1e9));
  const std::uint64_t m = std::max<std::uint64_t>(direct_end, static_cast<std::uint64_t>(cutoff));
  for (std::uint64_t n = direct_end; n < m; ++n) {
    const double nv = static_cast<double>(n);
    acc.add(xv * c / ((nv + av) * (nv + bv)));
  }
  const double mv = static_cast<double>(m);
  acc.add(xv * std::log1p(c / (mv + av)));

  Enclosure e;
  e.mode = EnclosureMode::direct_sum;
  e.param = mv;
  e.lo = acc.value();
  e.truncation_width = xv * c / ((mv + av) * (mv + bv));
  e.hi = e.lo + e.truncation_width;
  return e;
}

}  // namespace fracint
