#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/bessel.hpp>

#include "oracles.hpp"
#include "srs/specfun.hpp"

using namespace srs;

TEST(BesselJ, TrivialValues) {
  EXPECT_EQ(bessel_j(0, 0), 1.0);
  EXPECT_EQ(bessel_j(1, 0), 0.0);
  EXPECT_NEAR(bessel_j(0, 2.404825557695773), 0.0, 1e-10);
  EXPECT_NEAR(bessel_j(-3, 1.7), -bessel_j(3, 1.7), 1e-16);
}

TEST(BesselJ, MatchesExtendedPrecisionSeries) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, 60.0);
  for (int i = 0; i < 200; ++i) {
    int m = i % 11;
    double x = ux(rng);
    double ref = oracle::bessel_j_series(m, x);
    double env = std::max(std::abs(ref), 1e-3 / std::sqrt(1 + x));
    EXPECT_LE(std::abs(bessel_j(m, x) - ref), 1e-12 * env) << "m=" << m << " x=" << x;
  }
}

TEST(BesselJ, LargeArgumentAgainstMultiprecision) {
  for (double x : {150.5, 999.25, 5000.125, 9999.5})
    for (int m : {0, 1, 4}) {
      double ref = static_cast<double>(boost::math::cyl_bessel_j(m, oracle::hp(x)));
      double env = std::sqrt(2 / (std::numbers::pi * x));
      EXPECT_LE(std::abs(bessel_j(m, x) - ref), 1e-12 * env) << m << " " << x;
    }
}

TEST(BesselJ, RecurrenceResidual) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(0.1, 100.0);
  for (int i = 0; i < 500; ++i) {
    int m = 1 + i % 10;
    double x = ux(rng);
    double a = bessel_j(m - 1, x), b = bessel_j(m + 1, x), c = bessel_j(m, x);
    double scale = std::max({std::abs(a), std::abs(b), std::abs(2 * m / x * c)});
    EXPECT_LE(std::abs(a + b - 2 * m / x * c), 1e-10 * scale);
  }
}

TEST(BesselIScaled, TrivialValues) {
  EXPECT_EQ(bessel_i_scaled(0, 0), 1.0);
  EXPECT_EQ(bessel_i_scaled(2, 0), 0.0);
}

TEST(BesselIScaled, MatchesExtendedPrecisionSeries) {
  EXPECT_NEAR(bessel_i_scaled(0, 50) / oracle::bessel_i_scaled_series(0, 50), 1, 1e-12);
  for (int m = 0; m <= 12; ++m)
    for (double x : {1e-3, 0.3, 2.0, 17.0, 50.0, 120.0, 599.0, 601.0, 900.0, 2500.0}) {
      double ref = oracle::bessel_i_scaled_series(m, x);
      EXPECT_NEAR(bessel_i_scaled(m, x) / ref, 1, 1e-12) << "m=" << m << " x=" << x;
    }
}

TEST(BesselIScaled, HugeArgumentsStayFinite) {
  for (double x : {1e4, 1e5, 1e6})
    for (int m : {0, 1, 3, 40, 120}) {
      double v = bessel_i_scaled(m, x);
      ASSERT_TRUE(std::isfinite(v));
      double ref = static_cast<double>(boost::math::cyl_bessel_i(m, oracle::hp(x)) *
                                       exp(-oracle::hp(x)));
      EXPECT_NEAR(v / ref, 1, 1e-12) << "m=" << m << " x=" << x;
    }
}

TEST(BesselIScaled, RecurrenceResidual) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ux(0.1, 2000.0);
  for (int i = 0; i < 500; ++i) {
    int m = 1 + i % 10;
    double x = ux(rng);
    double a = bessel_i_scaled(m - 1, x), b = bessel_i_scaled(m + 1, x), c = bessel_i_scaled(m, x);
    EXPECT_LE(std::abs(a - b - 2 * m / x * c), 1e-10 * a);
  }
}

namespace {
double bisect_zero(int m, double lo, double hi) {
  double flo = oracle::bessel_j_series(m, lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    double mid = 0.5 * (lo + hi), fm = oracle::bessel_j_series(m, mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}
} // namespace

TEST(BesselZero, FirstZerosAgainstBracketedRootFind) {
  EXPECT_NEAR(bessel_zero(0, 1), bisect_zero(0, 2.0, 3.0), 1e-13);
  EXPECT_NEAR(bessel_zero(1, 1), bisect_zero(1, 3.5, 4.0), 1e-13);
  EXPECT_NEAR(bessel_zero(0, 1), 2.40482555769577, 1e-13);
  EXPECT_NEAR(bessel_zero(1, 1), 3.83170597020751, 1e-13);
  EXPECT_THROW(bessel_zero(0, 0), InvalidParameter);
}

TEST(BesselZero, ResidualAndSpacing) {
  for (int m = 0; m <= 8; ++m) {
    double prev = 0;
    for (int n = 1; n <= 50; ++n) {
      double z = bessel_zero(m, n);
      double deriv = 0.5 * (bessel_j(m - 1, z) - bessel_j(m + 1, z));
      EXPECT_LE(std::abs(bessel_j(m, z)), 1e-12 * std::max(1.0, std::abs(deriv)));
      if (n > 1) EXPECT_GT(z, prev + 2) << m << " " << n;
      prev = z;
    }
  }
}

TEST(GaussLegendre, TwoPointRule) {
  auto r = gauss_legendre(2);
  EXPECT_NEAR(r.nodes[0], -1 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.nodes[1], 1 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.weights[0], 1, 1e-15);
  EXPECT_NEAR(r.weights[1], 1, 1e-15);
  EXPECT_THROW(gauss_legendre(1), InvalidParameter);
}

TEST(GaussLegendre, ExactnessAndInvariants) {
  auto r3 = gauss_legendre(3);
  EXPECT_NEAR(r3.integrate(-1, 1, [](double x) { return x * x * x * x; }), 0.4, 1e-14);
  for (int n : {2, 5, 16, 33, 100, 257}) {
    auto r = gauss_legendre(n);
    double wsum = 0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0);
      wsum += w;
    }
    EXPECT_NEAR(wsum, 2, 1e-13);
    for (int i = 1; i < n; ++i) EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
    for (int deg = 0; deg <= 2 * n - 1; deg += std::max(1, n / 4)) {
      double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      double got = r.integrate(-1, 1, [&](double x) { return std::pow(x, deg); });
      EXPECT_NEAR(got, exact, 1e-13) << "n=" << n << " deg=" << deg;
    }
  }
}

TEST(GaussLegendre, ScaledBesselIntegralConvergesUnderDoubling) {
  const double F = 4;
  double prev = 0, err_prev = 1;
  for (int n : {4, 8, 16, 32}) {
    double v = gauss_legendre(n).integrate(0, 2 * F, [](double y) { return bessel_i_scaled(0, y); });
    if (n > 4) {
      double err = std::abs(v - prev);
      if (n > 8) EXPECT_LT(err, err_prev);
      err_prev = err;
    }
    prev = v;
  }
  double ref = oracle::integrate([](double y) { return bessel_i_scaled(0, y); }, 0, 2 * F);
  EXPECT_NEAR(prev, ref, 1e-13);
}

TEST(GaussBesselIdentity, TrivialAndSymmetric) {
  EXPECT_NEAR(gauss_bessel_identity(1, 0, 0, 0), 0.5, 1e-16);
  EXPECT_DOUBLE_EQ(gauss_bessel_identity(1.3, 0.7, 2.1, 2), gauss_bessel_identity(1.3, 2.1, 0.7, 2));
  EXPECT_THROW(gauss_bessel_identity(0, 1, 1, 0), InvalidParameter);
}

TEST(GaussBesselIdentity, MatchesAdaptiveQuadratureSweep) {
  auto lhs = [](double a, double b, double c, int m) {
    return oracle::integrate_pieces(
        [&](double r) { return r * std::exp(-a * a * r * r) * bessel_j(m, b * r) * bessel_j(m, c * r); },
        0, 40, 1.0, 1e-13);
  };
  EXPECT_NEAR(gauss_bessel_identity(1, 1, 2, 1), lhs(1, 1, 2, 1), 1e-10);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(0.5, 3.0), ub(0.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    double a = ua(rng), b = ub(rng), c = ub(rng);
    int m = i % 5;
    EXPECT_NEAR(gauss_bessel_identity(a, b, c, m), lhs(a, b, c, m), 1e-10)
        << a << " " << b << " " << c << " " << m;
  }
}

TEST(Sommerfeld, AxisValueAndMagnitude) {
  auto [num, closed] = sommerfeld_check(0, 10);
  std::complex<double> expect = std::exp(std::complex<double>(0, 10)) / 10.0;
  EXPECT_NEAR(std::abs(closed - expect), 0, 1e-15);
  EXPECT_NEAR(std::abs(num - closed), 0, 1e-10);
  auto pr = sommerfeld_check(3, 7);
  EXPECT_NEAR(std::abs(pr.second), 1 / std::hypot(3.0, 7.0), 1e-15);
}

TEST(Sommerfeld, NumericMatchesClosedForm) {
  for (auto [R, dz] : {std::pair{3.0, 20.0}, {0.5, 1.0}, {10.0, 2.0}, {25.0, 40.0}}) {
    auto [num, closed] = sommerfeld_check(R, dz);
    EXPECT_LT(std::abs(num - closed) / std::abs(closed), 1e-6) << R << " " << dz;
  }
  EXPECT_THROW(sommerfeld_check(1, 0), InvalidParameter);
}
