#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fracint/integrator.hpp"
#include "fracint/series.hpp"

using namespace fracint;

namespace {

PositiveRational rat(long p, long q) { return PositiveRational(big_int(p), big_int(q)); }

/// Midpoint rule for |{x/t} - {x/(t+1)}| over [a, b]; the integrand is smooth
/// inside one segment, so the error is O(h^2).
double midpoint(double x, double a, double b, int n) {
  const auto frac = [](double v) { return v - std::floor(v); };
  const double h = (b - a) / n;
  NeumaierSum acc;
  for (int i = 0; i < n; ++i) {
    const double t = a + (i + 0.5) * h;
    acc.add(std::abs(frac(x / t) - frac(x / (t + 1.0))));
  }
  return h * acc.value();
}

}  // namespace

TEST(Antiderivative, Examples) {
  EXPECT_NEAR(antiderivative(1, 2.0, 1.0), 1.0 + 2.0 * std::log(2.0), 1e-15);
  // d = 0, x = 1: A(t) -> 0 as t -> inf, so the head over (1, inf) is -A(1) negated.
  EXPECT_NEAR(antiderivative(0, 1.0, 1.0) - antiderivative(0, 1.0, 1e12), std::log(2.0), 1e-11);
  EXPECT_NEAR(analytic_head(1.0), std::log(2.0), 1e-15);
  EXPECT_THROW(antiderivative(1, 1.0, 0.0), validation_error);
}

TEST(Antiderivative, FiniteDifferenceMatchesIntegrand) {
  const double eps = 1e-5;
  const auto check = [&](std::uint64_t d, double x, double t) {
    const double fd = (antiderivative(d, x, t + eps) - antiderivative(d, x, t - eps)) / (2 * eps);
    EXPECT_NEAR(fd, static_cast<double>(d) - x / (t * (t + 1.0)), 1e-6);
  };
  check(3, 50.0, 2.0);
  check(1, 2.0, 0.7);
  check(7, 1000.0, 11.5);
}

TEST(SegmentIntegral, HandValuesAtTwo) {
  const PositiveRational x(2);
  const auto cover = segments(x, rat(1, 2));
  ASSERT_EQ(cover.segments.size(), 3u);
  EXPECT_NEAR(segment_integral(cover.segments[0], x), 1.0 - 2.0 * std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(segment_integral(cover.segments[1], x), 2.0 * std::log(5.0 / 4.0) - 1.0 / 3.0, 1e-15);
  const double t_d2 = segment_integral(cover.segments[2], x);
  EXPECT_NEAR(t_d2, td_exact(x, 2), 1e-15);
}

TEST(SegmentIntegral, SplitAtRootMatchesQuadrature) {
  // |1 - 2/(t(t+1))| over (0.9, 1.1], root at t = 1.
  const double split = (antiderivative(1, 2.0, 0.9) - antiderivative(1, 2.0, 1.0)) +
                       (antiderivative(1, 2.0, 1.1) - antiderivative(1, 2.0, 1.0));
  EXPECT_NEAR(split, 0.015094, 1e-5);
  EXPECT_NEAR(split, midpoint(2.0, 0.9, 1.1, 200000), 1e-9);
}

TEST(SegmentIntegral, BoundedAndMatchesQuadratureOnRandomSegments) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<long> num(50, 2000000);
  std::uniform_int_distribution<long> den(1, 300);
  int checked = 0;
  for (int i = 0; i < 30; ++i) {
    const PositiveRational x = rat(num(rng), den(rng));
    const auto cover = segments(x, PositiveRational::from_rational(x.value() / 60));
    for (std::size_t j = 0; j < cover.segments.size(); j += 7) {
      const Segment& s = cover.segments[j];
      const double lo = s.lo.approx(x.approx());
      const double hi = s.hi.approx(x.approx());
      const double v = segment_integral(s, x);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, hi - lo);
      EXPECT_NEAR(v, midpoint(x.approx(), lo, hi, 4000), 1e-7 * (hi - lo) + 1e-12);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(T0, HandValues) {
  EXPECT_NEAR(t0_exact(PositiveRational(1)), std::log(2.0), 1e-12);
  EXPECT_NEAR(t0_exact(PositiveRational(2)), 2.0 * std::log(1.5), 1e-12);
  EXPECT_NEAR(t0_exact(PositiveRational(1000000)), 2000.0 / 3.0, 2.0);
}

TEST(T0, ResidualStaysBounded) {
  double worst = 0.0;
  for (double x = 10.0; x <= 1e6; x *= 10.0) {
    const double dev = std::abs(t0_exact(PositiveRational(static_cast<std::uint64_t>(x))) - 2.0 / 3.0 * std::sqrt(x));
    worst = std::max(worst, dev);
  }
  EXPECT_LE(worst, 2.0);
}

TEST(Td, HandValues) {
  const PositiveRational x(2);
  EXPECT_NEAR(td_exact(x, 1), 2.0 / 3.0 + 2.0 * std::log(15.0 / 16.0), 1e-9);
  EXPECT_NEAR(td_exact(x, 2), 0.041310, 5e-4);
  EXPECT_THROW(td_exact(x, 0), validation_error);
  const double scaled = td_exact(PositiveRational(100000000), 1) / 1e4;
  EXPECT_GE(scaled, 0.704);
  EXPECT_LE(scaled, 0.724);
}

TEST(Td, NonNegativeAndApproachesCoefficient) {
  for (std::uint64_t d = 1; d <= 3; ++d) {
    const double near = std::abs(td_exact(PositiveRational(10000), d) / 100.0 - f_value(d));
    const double far = std::abs(td_exact(PositiveRational(10000000), d) / std::sqrt(1e7) - f_value(d));
    EXPECT_LT(far, near) << d;
  }
  for (std::uint64_t d = 1; d <= 40; ++d) EXPECT_GE(td_exact(rat(31415, 9), d), 0.0);
}

TEST(ClosedForm, HandValues) {
  const PositiveRational x(2);
  EXPECT_NEAR(td_closed_form(x, 1), 0.537590, 1e-6);
  EXPECT_NEAR(td_closed_form(x, 1), td_exact(x, 1), 1e-12);
  EXPECT_NEAR(td_closed_form(x, 2), 0.041310, 5e-4);
  EXPECT_NEAR(td_closed_form(x, 2), td_exact(x, 2), 1e-12);
  EXPECT_THROW(td_closed_form(x, 0), validation_error);
}

TEST(ClosedForm, AgreesWithSegmentSumOnRandomSamples) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> logx(std::log(10.0), std::log(1e5));
  std::uniform_int_distribution<std::uint64_t> dd(1, 20);
  for (int i = 0; i < 200; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", std::exp(logx(rng)));
    const PositiveRational x = parse_positive_real(buf);
    const std::uint64_t d = dd(rng);
    const double exact = td_exact(x, d);
    EXPECT_NEAR(td_closed_form_checked(x, d), exact, 1e-9 * (1.0 + exact)) << buf << " d=" << d;
  }
}

TEST(ClosedForm, DiagnosticCarriesBothValues) {
  const ClosedFormDiagnostic diag("value mismatch", 1.5, 2.5);
  EXPECT_EQ(diag.reason(), "value mismatch");
  EXPECT_EQ(diag.closed_value(), 1.5);
  EXPECT_EQ(diag.exact_value(), 2.5);
  const numeric_error& base = diag;
  EXPECT_NE(std::string(base.what()).find("1.5"), std::string::npos);
}

TEST(Enclosure, SmallTMinWidth) {
  const Enclosure e = t_total_segments(PositiveRational(2), rat(1, 10000));
  EXPECT_LE(e.truncation_width, 1e-4);
  EXPECT_NEAR(e.hi - e.lo, e.truncation_width, 1e-15);
  EXPECT_EQ(e.mode, EnclosureMode::segments);
}

TEST(Enclosure, NestsAsTMinShrinks) {
  for (const auto& x : {PositiveRational(7), rat(12345, 11), PositiveRational(100000)}) {
    Enclosure prev = t_total_segments(x, PositiveRational::from_rational(x.value() / 20));
    for (int div : {50, 200, 1000, 5000}) {
      const Enclosure e = t_total_segments(x, PositiveRational::from_rational(x.value() / div));
      const double slack = 1e-12 * e.hi;
      EXPECT_GE(e.lo, prev.lo - slack);
      EXPECT_LE(e.hi, prev.hi + slack);
      prev = e;
    }
  }
}

TEST(Enclosure, PerDWidthAtHundred) {
  const Enclosure e = t_total_per_d(PositiveRational(100), 5);
  EXPECT_EQ(e.truncation_width, 5.0);
  EXPECT_EQ(e.mode, EnclosureMode::per_d);
  EXPECT_THROW(t_total_per_d(PositiveRational(100), 1), validation_error);
}

TEST(Enclosure, ModesIntersect) {
  for (const std::uint64_t xi : {1000u, 10000u, 100000u}) {
    const PositiveRational x(xi);
    const double xv = static_cast<double>(xi);
    const Enclosure seg = t_total_segments(x, default_t_min(x));
    const Enclosure per = t_total_per_d(x, static_cast<std::uint64_t>(std::ceil(std::pow(xv, 0.6))));
    EXPECT_LE(std::max(seg.lo, per.lo), std::min(seg.hi, per.hi)) << xi;
  }
}

TEST(Enclosure, SegmentGroupsReproducePerDifferenceMass) {
  const PositiveRational x = rat(200003, 7);
  const auto cover = segments(x, rat(1, 10));
  std::map<std::uint64_t, NeumaierSum> by_d;
  std::map<std::uint64_t, std::uint64_t> count;
  for (const auto& s : cover.segments) {
    by_d[s.d()].add(segment_integral(s, x));
    ++count[s.d()];
  }
  EXPECT_NEAR(by_d[0].value() + analytic_head(x.approx()), t0_exact(x), 1e-9);
  int compared = 0;
  for (const auto& [d, sum] : by_d) {
    if (d == 0) continue;
    const TdResult r = td_exact_detail(x, d);
    if (r.segments != count[d]) continue;  // group cut by t_min
    EXPECT_NEAR(sum.value(), r.value, 1e-9 * (1.0 + r.value)) << d;
    ++compared;
  }
  EXPECT_GT(compared, 20);
  const Enclosure e = t_total_segments(x, rat(1, 10));
  NeumaierSum all;
  all.add(analytic_head(x.approx()));
  for (const auto& [d, sum] : by_d) all.merge(sum);
  EXPECT_NEAR(e.lo, all.value(), 1e-9);
}

TEST(Enclosure, ThreadCountDoesNotChangeResult) {
  const PositiveRational x(1000000);
  const Enclosure one = t_total_segments(x, PositiveRational(3), 1);
  const Enclosure four = t_total_segments(x, PositiveRational(3), 4);
  EXPECT_EQ(one.lo, four.lo);
  EXPECT_EQ(one.hi, four.hi);
  EXPECT_EQ(one.segments, four.segments);
}

TEST(Enclosure, RoundingBudgetIsNegligible) {
  // Every segment integral carries a few ulps of its own size; the total is
  // at most count * 2^-52 * (x + 1) relative to the sum, and must stay below 1e-9.
  const PositiveRational x(1000000);
  const Enclosure e = t_total_segments(x, PositiveRational(10));
  const double budget = static_cast<double>(e.segments) * std::ldexp(1.0, -52) * 8.0;
  EXPECT_LE(budget, 1e-9 * e.lo);
}

TEST(Enclosure, DefaultTruncationPoint) {
  EXPECT_EQ(default_t_min(PositiveRational(100000)), PositiveRational(10));
  EXPECT_EQ(default_t_min(rat(1, 100)), rat(1, 1000));
  EXPECT_LT(default_t_min(PositiveRational(2)), PositiveRational(2));
  EXPECT_THROW(t_total_segments(PositiveRational(2), PositiveRational(2)), validation_error);
}
