#pragma once

// Independent reference evaluations used only by the tests.

#include <cmath>
#include <complex>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using hp = boost::multiprecision::cpp_bin_float_100;

/// J_m(x) by its power series in 100-digit arithmetic (x <= ~150).
inline double bessel_j_series(int m, double xd) {
  hp x = xd, half = x / 2, term = 1, sum = 0;
  for (int j = 1; j <= m; ++j) term *= half / j;
  for (int k = 0; k < 2000; ++k) {
    sum += term;
    term *= -half * half / ((k + 1) * hp(k + 1 + m));
    if (k > xd && abs(term) < hp(1e-60) * abs(sum)) break;
  }
  return static_cast<double>(sum);
}

/// e^{-x} I_m(x) by its power series in 100-digit arithmetic.
inline double bessel_i_scaled_series(int m, double xd) {
  hp x = xd, half = x / 2, term = 1, sum = 0;
  for (int j = 1; j <= m; ++j) term *= half / j;
  for (int k = 0; k < 200000; ++k) {
    sum += term;
    term *= half * half / ((k + 1) * hp(k + 1 + m));
    if (k > xd && term < hp(1e-60) * sum) break;
  }
  return static_cast<double>(sum * exp(-x));
}

/// Adaptive Gauss-Kronrod integral of a real function.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13, unsigned depth = 12) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol);
}

/// Nested adaptive integral over [a, b] subdivided in pieces of length `piece`.
inline double integrate_pieces(const std::function<double(double)>& f, double a, double b,
                               double piece, double tol = 1e-13) {
  double acc = 0;
  for (double x = a; x < b; x += piece) acc += integrate(f, x, std::min(b, x + piece), tol);
  return acc;
}

} // namespace oracle
