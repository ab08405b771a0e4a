#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "srs/error.hpp"

namespace srs {

/// Bessel function of the first kind, J_m(x). Negative m uses J_{-m} = (-1)^m J_m.
inline double bessel_j(int m, double x) {
  if (m < 0) return (m % 2 ? -1.0 : 1.0) * bessel_j(-m, x);
  if (x == 0) return m == 0 ? 1.0 : 0.0;
  return boost::math::cyl_bessel_j(m, x);
}

namespace detail {

// e^{-x} I_m(x) from the large-argument Hankel series; needs m^2 << x.
inline double ive_hankel(int m, double x) {
  double mu = 4.0 * m * m;
  double term = 1, sum = 1;
  for (int k = 1; k < 60; ++k) {
    double next = -term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k * x);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2 * std::numbers::pi * x);
}

// I_m / I_0 by Miller's backward recurrence.
inline double i_ratio_backward(int m, double x) {
  int top = static_cast<int>(std::ceil(std::sqrt(double(m) * m + 100.0 * x))) + 20;
  double above = 0, cur = 1e-300, at_m = 0;
  for (int k = top; k > 0; --k) {
    double below = (2.0 * k / x) * cur + above;
    above = cur;
    cur = below;
    if (k - 1 == m) at_m = cur;
    if (std::abs(cur) > 1e200) {
      cur *= 1e-200;
      above *= 1e-200;
      at_m *= 1e-200;
    }
  }
  if (m == 0) return 1.0;
  return at_m / cur;
}

} // namespace detail

/// Exponentially scaled modified Bessel function e^{-x} I_m(x), x >= 0.
inline double bessel_i_scaled(int m, double x) {
  if (m < 0) m = -m;
  if (x == 0) return m == 0 ? 1.0 : 0.0;
  if (x <= 600.0) return boost::math::cyl_bessel_i(m, x) * std::exp(-x);
  if (4.0 * m * m <= x) return detail::ive_hankel(m, x);
  return detail::ive_hankel(0, x) * detail::i_ratio_backward(m, x);
}

/// n-th positive zero of J_m (n >= 1).
inline double bessel_zero(int m, int n) {
  if (m < 0 || n < 1) throw InvalidParameter("bessel_zero needs m >= 0 and n >= 1");
  return boost::math::cyl_bessel_j_zero(static_cast<double>(m), n);
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Sum of w_i f(x_i) after mapping [-1, 1] onto [a, b].
  template <class F>
  auto integrate(double a, double b, F&& f) const {
    double half = 0.5 * (b - a), mid = 0.5 * (b + a);
    using R = decltype(f(0.0));
    R acc{};
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(mid + half * nodes[i]);
    return acc * half;
  }

  /// Nodes and weights mapped onto [a, b].
  std::pair<std::vector<double>, std::vector<double>> mapped(double a, double b) const {
    double half = 0.5 * (b - a), mid = 0.5 * (b + a);
    std::vector<double> x(nodes.size()), w(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      x[i] = mid + half * nodes[i];
      w[i] = half * weights[i];
    }
    return {x, w};
  }
};

/// Gauss-Legendre rule of the given order on [-1, 1], nodes increasing.
inline QuadratureRule gauss_legendre(int order) {
  if (order < 2) throw InvalidParameter("gauss_legendre needs order >= 2");
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= order; ++k) {
        double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= order; ++k) {
        double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1);
    }
    double w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2) rule.nodes[order / 2] = 0.0;
  return rule;
}

/// Closed form of the Gaussian-weighted product integral
/// int_0^inf r e^{-a^2 r^2} J_m(b r) J_m(c r) dr = e^{-(b^2+c^2)/4a^2} I_m(bc/2a^2) / 2a^2.
inline double gauss_bessel_identity(double alpha, double beta, double gamma_, int m) {
  if (!(alpha > 0)) throw InvalidParameter("gauss_bessel_identity needs alpha > 0");
  double a2 = alpha * alpha;
  double d = beta - gamma_;
  return std::exp(-d * d / (4 * a2)) * bessel_i_scaled(m, beta * gamma_ / (2 * a2)) / (2 * a2);
}

namespace detail {

// Composite Gauss-Legendre over [a, b] with panels sized to the oscillation
// scale, doubling the panel count until two successive values agree.
template <class F>
std::complex<double> composite(F&& f, double a, double b, double scale, double tol,
                               const char* what) {
  static thread_local const QuadratureRule rule = gauss_legendre(20);
  int panels = std::max(1, static_cast<int>(std::ceil((b - a) / scale)));
  std::complex<double> prev{};
  for (int level = 0; level < 12; ++level) {
    std::complex<double> acc{};
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) acc += rule.integrate(a + p * h, a + (p + 1) * h, f);
    if (level > 0 && std::abs(acc - prev) <= tol * std::max(1e-300, std::abs(acc))) return acc;
    prev = acc;
    panels *= 2;
  }
  throw QuadratureFailure(std::string(what) + ": panel refinement did not converge");
}

} // namespace detail

/// Both sides of the transverse-momentum representation of a spherical wave,
/// int_0^inf x dx i e^{i sqrt(1-x^2) dz} J_0(xR) / sqrt(1-x^2) = e^{i sqrt(R^2+dz^2)} / sqrt(R^2+dz^2),
/// with the decaying branch for x > 1. Returns {numeric, closed form}.
inline std::pair<std::complex<double>, std::complex<double>> sommerfeld_check(double R,
                                                                              double dz) {
  if (!(dz > 0)) throw InvalidParameter("sommerfeld_check needs dz > 0");
  if (R < 0) throw InvalidParameter("sommerfeld_check needs R >= 0");
  const std::complex<double> I(0, 1);
  // Propagating part, w = sqrt(1 - x^2).
  auto prop = [&](double w) {
    return I * std::exp(I * (w * dz)) * bessel_j(0, R * std::sqrt(std::max(0.0, 1 - w * w)));
  };
  // Evanescent part, v = sqrt(x^2 - 1).
  auto evan = [&](double v) {
    return std::complex<double>(std::exp(-v * dz) * bessel_j(0, R * std::sqrt(1 + v * v)));
  };
  double scale = std::numbers::pi / std::max({1.0, R, dz});
  double v_cut = 36.0 / dz;
  auto numeric = detail::composite(prop, 0.0, 1.0, scale, 1e-13, "sommerfeld propagating part") +
                 detail::composite(evan, 0.0, v_cut, std::numbers::pi / std::max(1.0, R + dz),
                                   1e-13, "sommerfeld evanescent part");
  double rho = std::hypot(R, dz);
  return {numeric, std::exp(I * rho) / rho};
}

} // namespace srs
