#pragma once

// Per-difference coefficients f(d), with T_d(x) ~ f(d) sqrt(x), and their sums.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "fracint/error.hpp"
#include "fracint/numeric.hpp"

namespace fracint {

struct SeriesTerm {
  std::uint64_t d = 0;
  double value = 0.0;
};

/// f(d) = ((8d+2) sqrt(d+1) - (8d-2) sqrt(d-1)) / 3 - 4 sqrt(d).
///
/// For d >= 32 the value is computed as
///   4 (4c - s) / (3 s^2 (a + c)(b + c)),  a = sqrt(d+1), b = sqrt(d-1), c = sqrt(d), s = a + b,
/// which has no subtractive cancellation (f(d) ~ d^{-3/2} / 6).
inline double f_value(std::uint64_t d) {
  if (d == 0) throw validation_error("f_value requires d >= 1");
  const double dd = static_cast<double>(d);
  const double a = std::sqrt(dd + 1.0);
  const double b = std::sqrt(dd - 1.0);
  const double c = std::sqrt(dd);
  if (d < 32) return ((8.0 * dd + 2.0) * a - (8.0 * dd - 2.0) * b) / 3.0 - 4.0 * c;
  const double s = a + b;
  return 4.0 * (4.0 * c - s) / (3.0 * s * s * (a + c) * (b + c));
}

/// The coefficient with the last term printed as -4/sqrt(d). Its partial sums
/// grow like (8/3) D^{3/2}; kept only for side-by-side comparison.
inline double f_value_printed(std::uint64_t d) {
  if (d == 0) throw validation_error("f_value_printed requires d >= 1");
  const double dd = static_cast<double>(d);
  return ((8.0 * dd + 2.0) * std::sqrt(dd + 1.0) - (8.0 * dd - 2.0) * std::sqrt(dd - 1.0)) / 3.0 - 4.0 / std::sqrt(dd);
}

inline SeriesTerm series_term(std::uint64_t d) { return {d, f_value(d)}; }

/// sum_{d=1}^{D} f(d), smallest terms first.
inline double f_partial_sum(std::uint64_t max_d) {
  if (max_d == 0) throw validation_error("f_partial_sum requires D >= 1");
  NeumaierSum acc;
  for (std::uint64_t d = max_d; d >= 1; --d) acc.add(f_value(d));
  return acc.value();
}

namespace detail {

/// sum_{d > D} d^{-3/2} / 6 by Euler-Maclaurin with g(t) = t^{-3/2} / 6:
/// integral from D minus g(D)/2 minus g'(D)/12 plus g'''(D)/720.
inline double f_tail_estimate(double big_d) {
  const double integral = 1.0 / (3.0 * std::sqrt(big_d));
  const double g = std::pow(big_d, -1.5) / 6.0;
  const double g1 = -0.25 * std::pow(big_d, -2.5);
  const double g3 = -(1.5 * 2.5 * 3.5 / 6.0) * std::pow(big_d, -4.5);
  return integral - g / 2.0 - g1 / 12.0 + g3 / 720.0;
}

}  // namespace detail

/// sum_{d >= 1} f(d) to within `tolerance`.
///
/// Since |f(d) - d^{-3/2}/6| <= d^{-7/2} for d >= 8, replacing the tail past D
/// by the asymptote costs at most (2/5) D^{-5/2}; D is chosen to keep that
/// below tolerance / 4.
inline double f_total(double tolerance) {
  if (!(tolerance > 0.0) || tolerance > 1e-3) throw validation_error("tolerance must lie in (0, 1e-3]");
  if (tolerance < 1e-10) throw numeric_error("tolerance below 1e-10 is not reachable in binary64");
  const double big_d = std::max(64.0, std::ceil(std::pow(1.6 / tolerance, 0.4)));
  const auto cutoff = static_cast<std::uint64_t>(big_d);
  NeumaierSum acc;
  acc.add(detail::f_tail_estimate(big_d));
  acc.add(f_partial_sum(cutoff));
  return acc.value();
}

/// Upper bound on sum_{d > D} T_d(x): sqrt(x / (D - 1)).
inline double tail_mass_bound(double x, double max_d) {
  if (!(max_d > 1.0)) throw validation_error("tail bound requires D > 1");
  if (!(x > 0.0)) throw validation_error("tail bound requires x > 0");
  return std::sqrt(x / (max_d - 1.0));
}

inline double tail_mass_bound(const PositiveRational& x, double max_d) { return tail_mass_bound(x.approx(), max_d); }

}  // namespace fracint
