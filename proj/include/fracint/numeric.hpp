#pragma once

// Exact input values, accurate accumulation and the two mathematical
// constants everything else is measured against.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

#include "fracint/error.hpp"

namespace fracint {

using big_int = boost::multiprecision::cpp_int;
using big_rational = boost::multiprecision::cpp_rational;

namespace detail {

inline std::size_t bit_length(const big_int& v) {
  return v == 0 ? 0 : boost::multiprecision::msb(v) + 1;
}

/// num/den rounded to nearest binary64 (ties to even); num, den > 0.
inline double nearest_double(const big_int& num, const big_int& den) {
  // Scale so the integer quotient carries exactly 53 significant bits.
  long shift = 52 - (static_cast<long>(bit_length(num)) - static_cast<long>(bit_length(den)));
  big_int q, r;
  for (;;) {
    big_int n = num, d = den;
    if (shift >= 0) {
      n <<= shift;
    } else {
      d <<= -shift;
    }
    boost::multiprecision::divide_qr(n, d, q, r);
    if (bit_length(q) < 53) {
      ++shift;
      continue;
    }
    if (bit_length(q) > 53) {
      --shift;
      continue;
    }
    const big_int twice = r << 1;
    if (twice > d || (twice == d && (q & 1) != 0)) ++q;
    break;
  }
  if (shift > 1074 || shift < -971) throw numeric_error("rational value outside binary64 range");
  return std::ldexp(q.convert_to<double>(), static_cast<int>(-shift));
}

}  // namespace detail

/// A strictly positive rational number in lowest terms, with its nearest
/// binary64 value cached.
class PositiveRational {
 public:
  PositiveRational(big_int num, big_int den) : num_(std::move(num)), den_(std::move(den)) {
    if (num_ <= 0 || den_ <= 0) throw validation_error("value must be positive");
    const big_int g = boost::multiprecision::gcd(num_, den_);
    if (g != 1) {
      num_ /= g;
      den_ /= g;
    }
    approx_ = detail::nearest_double(num_, den_);
  }

  explicit PositiveRational(std::uint64_t value) : PositiveRational(big_int(value), big_int(1)) {}

  static PositiveRational from_rational(const big_rational& r) {
    return {boost::multiprecision::numerator(r), boost::multiprecision::denominator(r)};
  }

  /// Exact value of a finite positive double.
  static PositiveRational from_double(double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw validation_error("value must be positive and finite");
    int exp = 0;
    const double mant = std::frexp(v, &exp);
    big_int num(static_cast<std::int64_t>(std::ldexp(mant, 53)));
    big_int den(1);
    exp -= 53;
    if (exp >= 0) {
      num <<= exp;
    } else {
      den <<= -exp;
    }
    return {num, den};
  }

  const big_int& num() const noexcept { return num_; }
  const big_int& den() const noexcept { return den_; }
  double approx() const noexcept { return approx_; }
  big_rational value() const { return big_rational(num_, den_); }

  bool is_integer() const noexcept { return den_ == 1; }

  friend bool operator==(const PositiveRational& a, const PositiveRational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const PositiveRational& a, const PositiveRational& b) {
    const big_int lhs = a.num_ * b.den_;
    const big_int rhs = b.num_ * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  big_int num_;
  big_int den_;
  double approx_ = 0.0;
};

/// Parses `[0-9]+("."[0-9]+)?([eE][+-]?[0-9]+)?` into the exact rational it denotes.
inline PositiveRational parse_positive_real(std::string_view text) {
  constexpr long kMaxExponent = 4000;
  const auto malformed = [&] {
    return validation_error("malformed number '" + std::string(text) + "'");
  };
  if (text.empty()) throw malformed();
  if (text.front() == '-') throw validation_error("value must be positive: '" + std::string(text) + "'");

  std::size_t pos = 0;
  const auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  big_int digits = 0;
  long frac_digits = 0;
  const std::size_t int_start = pos;
  while (pos < text.size() && is_digit(text[pos])) {
    digits = digits * 10 + (text[pos] - '0');
    ++pos;
  }
  if (pos == int_start) throw malformed();
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t frac_start = pos;
    while (pos < text.size() && is_digit(text[pos])) {
      digits = digits * 10 + (text[pos] - '0');
      ++frac_digits;
      ++pos;
    }
    if (pos == frac_start) throw malformed();
  }
  long exponent = 0;
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    bool negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      negative = text[pos] == '-';
      ++pos;
    }
    const std::size_t exp_start = pos;
    while (pos < text.size() && is_digit(text[pos])) {
      exponent = exponent * 10 + (text[pos] - '0');
      if (exponent > kMaxExponent) throw validation_error("exponent out of range in '" + std::string(text) + "'");
      ++pos;
    }
    if (pos == exp_start) throw malformed();
    if (negative) exponent = -exponent;
  }
  if (pos != text.size()) throw malformed();
  if (digits == 0) throw validation_error("value must be positive: '" + std::string(text) + "'");

  const long scale = exponent - frac_digits;
  big_int num = digits;
  big_int den = 1;
  if (scale >= 0) {
    num *= boost::multiprecision::pow(big_int(10), static_cast<unsigned>(scale));
  } else {
    den = boost::multiprecision::pow(big_int(10), static_cast<unsigned>(-scale));
  }
  return {num, den};
}

/// Exact decimal rendering when the denominator is of the form 2^a 5^b,
/// otherwise "num/den".
inline std::string render(const PositiveRational& r) {
  big_int den = r.den();
  unsigned twos = 0, fives = 0;
  while ((den & 1) == 0) {
    den >>= 1;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return r.num().str() + "/" + r.den().str();
  const unsigned places = std::max(twos, fives);
  const big_int scaled = r.num() * boost::multiprecision::pow(big_int(10), places) / r.den();
  std::string digits = scaled.str();
  if (places == 0) return digits;
  if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
  digits.insert(digits.size() - places, ".");
  return digits;
}

/// Neumaier-compensated running sum. Merging two partial sums in a fixed
/// order gives a result that does not depend on how the work was scheduled.
class NeumaierSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  NeumaierSum& operator+=(double v) noexcept {
    add(v);
    return *this;
  }

  void merge(const NeumaierSum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
  }

  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) {
  NeumaierSum acc;
  for (const double v : values) {
    if (!std::isfinite(v)) throw numeric_error("non-finite summand");
    acc.add(v);
  }
  const double result = acc.value();
  if (!std::isfinite(result)) throw numeric_error("sum overflowed");
  return result;
}

struct Constants {
  double zeta_three_halves = 0.0;
  double euler_gamma = 0.0;
  double limit_constant = 0.0;  // (2/pi) zeta(3/2)
  double series_total = 0.0;    // limit_constant - 2/3
};

namespace detail {

// B_{2j} / (2j)! for j = 1..5.
inline constexpr double kBernoulliOverFactorial[] = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
};

/// Euler-Maclaurin evaluation of zeta(s), s > 1, with four correction terms.
/// The remainder is bounded by the first omitted term, so `cutoff` is raised
/// until that term drops below `tolerance / 2`.
inline double zeta_euler_maclaurin(double s, double tolerance) {
  constexpr int kTerms = 4;
  const auto omitted_term = [&](double n) {
    double rising = 1.0;
    for (int i = 0; i < 2 * kTerms + 1; ++i) rising *= s + i;
    return std::abs(kBernoulliOverFactorial[kTerms]) * rising * std::pow(n, -s - 2 * kTerms - 1);
  };
  long cutoff = 8;
  while (omitted_term(static_cast<double>(cutoff)) > tolerance / 2) cutoff *= 2;

  NeumaierSum acc;
  // Small terms first.
  for (long n = cutoff - 1; n >= 1; --n) acc.add(std::pow(static_cast<double>(n), -s));
  const double big_n = static_cast<double>(cutoff);
  acc.add(std::pow(big_n, 1.0 - s) / (s - 1.0));
  acc.add(0.5 * std::pow(big_n, -s));
  double rising = s;  // s (s+1) ... (s+2j-2)
  for (int j = 1; j <= kTerms; ++j) {
    acc.add(kBernoulliOverFactorial[j - 1] * rising * std::pow(big_n, -s - 2 * j + 1));
    rising *= (s + 2 * j - 1) * (s + 2 * j);
  }
  return acc.value();
}

/// gamma = H_N - ln N - 1/(2N) + sum_j B_{2j} / (2j N^{2j}), remainder below the first omitted term.
inline double euler_gamma_euler_maclaurin(double tolerance) {
  constexpr double kCoeff[] = {1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0};
  constexpr double kOmitted = 1.0 / 132.0;
  long cutoff = 8;
  while (kOmitted * std::pow(static_cast<double>(cutoff), -10) > tolerance / 2) cutoff *= 2;

  NeumaierSum acc;
  for (long n = cutoff; n >= 1; --n) acc.add(1.0 / static_cast<double>(n));
  const double big_n = static_cast<double>(cutoff);
  acc.add(-std::log(big_n));
  acc.add(-0.5 / big_n);
  double power = big_n * big_n;
  for (const double c : kCoeff) {
    acc.add(c / power);
    power *= big_n * big_n;
  }
  return acc.value();
}

}  // namespace detail

/// Computes zeta(3/2) and Euler's gamma to within `tolerance`, and the
/// derived limit constant (2/pi) zeta(3/2) and series total.
inline Constants constants(double tolerance = 1e-12) {
  if (!(tolerance > 0.0) || tolerance > 1e-6) throw validation_error("tolerance must lie in (0, 1e-6]");
  Constants c;
  c.zeta_three_halves = detail::zeta_euler_maclaurin(1.5, tolerance);
  c.euler_gamma = detail::euler_gamma_euler_maclaurin(tolerance);
  c.limit_constant = 2.0 / std::numbers::pi * c.zeta_three_halves;
  c.series_total = c.limit_constant - 2.0 / 3.0;
  return c;
}

}  // namespace fracint
