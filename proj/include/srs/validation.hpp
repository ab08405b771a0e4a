#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint.hpp>

#include "srs/analytic.hpp"
#include "srs/modes.hpp"
#include "srs/pointsim.hpp"
#include "srs/specfun.hpp"

namespace srs::validation {

/// One oracle comparison. `measured` is compared against `threshold` in the
/// direction given by `at_least` (a mutation must be detected, so its error has
/// to exceed the threshold).
struct Check {
  std::string name;
  double measured = 0;
  double threshold = 0;
  bool passed = false;
  std::string note;
  bool at_least = false;
};

inline Check below(std::string name, double measured, double threshold, std::string note = {}) {
  return {std::move(name), measured, threshold, measured <= threshold, std::move(note), false};
}

inline Check above(std::string name, double measured, double threshold, std::string note = {}) {
  return {std::move(name), measured, threshold, measured > threshold, std::move(note), true};
}

namespace detail {

inline double gk(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  double acc = 0;
  for (double x = a; x < b; x += 1.0)
    acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, x, std::min(b, x + 1.0), 12, tol);
  return acc;
}

} // namespace detail

// specfun ---------------------------------------------------------------

inline Check bessel_recurrence() {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(0.1, 100);
  double worst = 0;
  for (int i = 0; i < 400; ++i) {
    double x = ux(rng);
    int m = 1 + i % 10;
    double a = bessel_j(m - 1, x), b = bessel_j(m, x), c = bessel_j(m + 1, x);
    double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
    worst = std::max(worst, std::abs(a + c - 2 * m / x * b) / scale);
  }
  return below("specfun.bessel_j_recurrence", worst, 1e-10);
}

inline Check gauss_bessel_sweep() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(0.5, 3.0), ub(0.0, 5.0);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    double a = ua(rng), b = ub(rng), c = ub(rng);
    int m = i % 5;
    double lhs = detail::gk(
        [&](double r) {
          return r * std::exp(-a * a * r * r) * boost::math::cyl_bessel_j(m, b * r) *
                 boost::math::cyl_bessel_j(m, c * r);
        },
        0, 40);
    worst = std::max(worst, std::abs(lhs - gauss_bessel_identity(a, b, c, m)));
  }
  return below("specfun.gauss_bessel_identity", worst, 1e-10, "50 random cases, absolute error");
}

inline Check sommerfeld() {
  auto [num, closed] = sommerfeld_check(3, 20);
  return below("specfun.sommerfeld", std::abs(num - closed) / std::abs(closed), 1e-6, "R=3, dz=20");
}

// modes -----------------------------------------------------------------

inline std::vector<Check> lambda_product() {
  double comm = 0, prod = 0;
  for (int m : {0, 1, 2}) {
    auto b = build_basis(m, 400, 200);
    double sigma = 10;
    auto p = lambda_matrices(b, sigma);
    int w = interior_window(b, sigma, 3.0);
    Eigen::MatrixXd dense = (p.lambda * p.lambda1).topLeftCorner(w, w);
    Eigen::MatrixXd closed = lambda_product_closed_form(b, sigma).topLeftCorner(w, w);
    prod = std::max(prod, (dense - closed).norm() / closed.norm());
    comm = std::max(comm, commutator_residual(p, w));
  }
  return {below("modes.commutator", comm, 1e-10, "interior window gamma sigma < 3"),
          below("modes.product_closed_form", prod, 1e-2)};
}

inline std::vector<Check> radial_orthogonality() {
  double worst = 0;
  for (double R : {200.0, 500.0, 2000.0})
    worst = std::max(worst, std::abs(radial_orthogonality_check(0, 1, 2, R)) / radial_orthogonality_bound(1, 2));
  double diag = 0;
  for (double R : {200.0, 800.0, 3200.0})
    diag = std::max(diag, std::abs(radial_orthogonality_check(0, 1, 1, R) / R - 1 / std::numbers::pi));
  return {below("modes.orthogonality_offdiagonal", worst, 1.05, "ratio to the Lommel envelope"),
          below("modes.orthogonality_diagonal", diag, 2e-3, "|I(R)/R - 1/pi|")};
}

/// Appendix-A gap |lhs/rhs - 1| at gamma = gamma', as a function of x = sigma^2 gamma^2.
struct GapRow {
  double x, gap, printed_ratio, exact_ratio;
};

inline std::vector<GapRow> appendix_a_gaps(double sigma = 50, int m = 1) {
  std::vector<GapRow> rows;
  for (double x : {1.0, 4.0, 16.0, 64.0, 100.0, 400.0}) {
    double g = std::sqrt(x) / sigma;
    auto c = first_order_integral_check(sigma, g, g, m);
    rows.push_back({x, std::abs(c.lhs / c.rhs - 1), c.printed / c.rhs, c.exact / c.rhs});
  }
  return rows;
}

// analytic --------------------------------------------------------------

inline Check time_zero_reduction() {
  double worst = 0;
  for (double F : {1.0, 4.0, 8.0}) {
    auto p = geometry_from_length(F, 160, 300);
    auto pt = total_power(p, Truncation{}, 0, {0, 1, 2});
    for (int m : {0, 1, 2}) {
      double ref = p.depth() / 8 *
                   boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                       [m](double y) { return boost::math::cyl_bessel_i(m, y) * std::exp(-y); }, 0,
                       2 * F, 12, 1e-14);
      worst = std::max(worst, std::abs(pt.per_m[m] / ref - 1));
    }
  }
  return below("analytic.time_zero_reduction", worst, 1e-10);
}

inline Check power_realness() {
  auto p = geometry_from_length(4, 160, 300);
  auto pt = total_power(p, Truncation{}, 0.25, {0, 1, 2});
  return below("analytic.imaginary_part", pt.imag / pt.total, 1e-10, "F=4, d=160, Gamma t=0.25");
}

inline Check contraction(double t, ChiMutation mut = {}) {
  auto p = geometry_from_length(4, 160, 300);
  auto c = radial_contraction(p, Truncation{}, t, {0, 1, 2}, mut);
  char buf[64];
  std::snprintf(buf, sizeof buf, "t=%g", t);
  if (mut.drop_q_sign) return above("analytic.chi_mutation_detected", c.max_rel, 1e-2, buf);
  return below(std::string("analytic.radial_contraction_") + buf, c.max_rel, 1e-2);
}

inline Check p0_identity() {
  double worst = 0;
  for (double F : {0.5, 1.0, 4.0})
    for (double t : {0.0, 0.05, 0.2, 1.0, 3.0}) {
      auto p = geometry_from_length(F, 90, 300);
      worst = std::max(worst, std::abs(power_P0(p, t) / rm_mode_power(p.depth(), t) /
                                           p0_geometry_factor(F) - 1));
    }
  return below("analytic.p0_identity", worst, 1e-14);
}

inline Check p1_small_fresnel() {
  auto p = geometry_from_length(0.25, 200, 300);
  double t = 20 / p.depth();
  double a = power_P1(p, Truncation{}, t), b = power_P1_smallF(p, t);
  return below("analytic.p1_small_fresnel", std::abs(a - b) / a, 0.05, "F=0.25, d Gamma t=20");
}

inline Check depletion() {
  auto p = solve_geometry(4, 90, 6000);
  return below("analytic.depletion_time", std::abs(depletion_time(p, 6000) - 0.54), 0.05,
               "F=4, d=90, N=6000");
}

// pointsim --------------------------------------------------------------

inline Check initial_power(int atoms = 200) {
  auto cloud = sample_cloud(solve_geometry(2, 20, atoms), atoms, 3);
  auto m = interaction_matrix(cloud, 0.5);
  double v = total_power_numeric(m, 0.0);
  return below("pointsim.initial_power", std::abs(v / (atoms / 2.0) - 1), 1e-12);
}

inline Check conservation(int atoms = 200) {
  auto cloud = sample_cloud(solve_geometry(2, 20, atoms), atoms, 21);
  auto m = interaction_matrix(cloud, 0.5);
  Evolution ev(m, 0.5);
  double worst = 0;
  for (double t : {0.1, 0.3}) {
    double h = 1e-3;
    double dtr = (-ev.trace(t + 2 * h) + 8 * ev.trace(t + h) - 8 * ev.trace(t - h) + ev.trace(t - 2 * h)) /
                 (12 * h);
    double want = m.gamma * ev.trace(t) + 0.5 * dtr;
    worst = std::max(worst, std::abs(ev.power(t) / want - 1));
  }
  return below("pointsim.conservation", worst, 1e-6, "N=200, Gamma t in {0.1, 0.3}");
}

inline Check ode_oracle(int atoms = 50) {
  auto cloud = sample_cloud(make_params(4, 12, 0.05), atoms, 9);
  auto m = interaction_matrix(cloud, 0.5);
  using state = std::vector<cplx>;
  const int n = atoms;
  const Eigen::MatrixXcd& A = m.entries;
  auto rhs = [&](const state& x, state& dx, double) {
    Eigen::Map<const Eigen::MatrixXcd> B(x.data(), n, n);
    Eigen::Map<Eigen::MatrixXcd> D(dx.data(), n, n);
    D.noalias() = A * B;
  };
  state x(n * n, cplx(0));
  for (int i = 0; i < n; ++i) x[i * n + i] = 1;
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<state>());
  std::vector<double> times = {0.3, 0.8};
  auto C = evolve(m, times);
  double t = 0, worst = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    ode::integrate_adaptive(stepper, rhs, x, t, times[k], 1e-3);
    t = times[k];
    Eigen::Map<Eigen::MatrixXcd> B(x.data(), n, n);
    Eigen::MatrixXcd ref = B * B.adjoint();
    worst = std::max(worst, (C[k] - ref).norm() / ref.norm());
  }
  return below("pointsim.ode_oracle", worst, 1e-8, "N=50, dopri5");
}

namespace detail {

inline cplx spherical(const Eigen::Vector3d& r) {
  double u = r.norm();
  return std::exp(cplx(0, u)) / u;
}

inline cplx second_derivative(const Eigen::Vector3d& r, int a, double h) {
  Eigen::Vector3d e = Eigen::Vector3d::Zero();
  e(a) = h;
  return (-spherical(r + 2 * e) + 16.0 * spherical(r + e) - 30.0 * spherical(r) + 16.0 * spherical(r - e) -
          spherical(r - 2 * e)) /
         (12 * h * h);
}

} // namespace detail

inline std::vector<Check> propagator() {
  double fd = 0;
  for (Eigen::Vector3d r : {Eigen::Vector3d(12, 5, 14), Eigen::Vector3d(3, -2, 19.6),
                            Eigen::Vector3d(20, 0, 0.5)}) {
    double h = 0.02;
    cplx lap = detail::second_derivative(r, 0, h) + detail::second_derivative(r, 1, h) +
               detail::second_derivative(r, 2, h);
    cplx ref = -1 / (8 * std::numbers::pi) * (lap + detail::second_derivative(r, 2, h));
    cplx v = scalar_propagator(r, {0, 0, 0});
    fd = std::max(fd, std::abs(ref - v) / std::abs(v));
  }
  double far = 0;
  for (double u : {1e3, 1e4}) {
    Eigen::Vector3d r(0.3 * u, 0.4 * u, std::sqrt(0.75) * u);
    double dz = r.z(), rho2 = u * u - dz * dz;
    cplx ff = std::exp(cplx(0, u)) * (dz * dz + 0.5 * rho2) / (4 * std::numbers::pi * u * u * u);
    far = std::max(far, std::abs(scalar_propagator(r, {0, 0, 0}) - ff) / std::abs(ff) * u);
  }
  return {below("pointsim.propagator_finite_difference", fd, 1e-6),
          below("pointsim.propagator_far_field", far, 3.0, "u * relative deviation, O(1/u)")};
}

/// Every check, in a fixed order. `filter` keeps names containing it.
inline std::vector<Check> run_all(const std::string& filter = {}) {
  using Fn = std::function<std::vector<Check>()>;
  auto one = [](std::function<Check()> f) { return Fn([f] { return std::vector<Check>{f()}; }); };
  std::vector<std::pair<std::string, Fn>> groups = {
      {"specfun.bessel_j_recurrence", one(bessel_recurrence)},
      {"specfun.gauss_bessel_identity", one(gauss_bessel_sweep)},
      {"specfun.sommerfeld", one(sommerfeld)},
      {"modes.commutator modes.product_closed_form", lambda_product},
      {"modes.orthogonality_offdiagonal modes.orthogonality_diagonal", radial_orthogonality},
      {"analytic.time_zero_reduction", one(time_zero_reduction)},
      {"analytic.imaginary_part", one(power_realness)},
      {"analytic.radial_contraction_t=0", one([] { return contraction(0); })},
      {"analytic.radial_contraction_t=0.25", one([] { return contraction(0.25); })},
      {"analytic.chi_mutation_detected", one([] { return contraction(0.25, ChiMutation{true}); })},
      {"analytic.p0_identity", one(p0_identity)},
      {"analytic.p1_small_fresnel", one(p1_small_fresnel)},
      {"analytic.depletion_time", one(depletion)},
      {"pointsim.initial_power", one([] { return initial_power(); })},
      {"pointsim.conservation", one([] { return conservation(); })},
      {"pointsim.ode_oracle", one([] { return ode_oracle(); })},
      {"pointsim.propagator_finite_difference pointsim.propagator_far_field", propagator},
  };
  std::vector<Check> out;
  for (auto& [names, fn] : groups) {
    if (!filter.empty() && names.find(filter) == std::string::npos) continue;
    try {
      for (auto& c : fn()) out.push_back(std::move(c));
    } catch (const std::exception& e) {
      Check c;
      c.name = names.substr(0, names.find(' '));
      c.passed = false;
      c.measured = std::nan("");
      c.note = std::string("error: ") + e.what();
      out.push_back(std::move(c));
    }
  }
  return out;
}

} // namespace srs::validation
