#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "srs/error.hpp"

namespace srs {

/// Cloud geometry, density and scattering rate, all in units k_S = 1.
struct EnsembleParams {
  double sigma_perp = 0;
  double sigma_par = 0;
  double rho0 = 0;
  double gamma = 1;

  double length() const { return std::sqrt(2 * std::numbers::pi) * sigma_par; }
  double fresnel() const { return sigma_perp * sigma_perp / length(); }
  double depth() const { return 6 * std::numbers::pi * rho0 * length(); }
  double lambda0() const { return 1.5 * std::numbers::pi * rho0 * gamma; }
  double atoms() const {
    return rho0 * std::pow(2 * std::numbers::pi, 1.5) * sigma_perp * sigma_perp * sigma_par;
  }

  /// Messages for every validity condition that holds by less than a factor 3.
  std::vector<std::string> regime_warnings() const {
    std::vector<std::string> w;
    if (sigma_perp < 3.0)
      w.push_back("sigma_perp = " + std::to_string(sigma_perp) + " is not >> 1");
    if (sigma_par < 3.0 * sigma_perp)
      w.push_back("sigma_par / sigma_perp = " + std::to_string(sigma_par / sigma_perp) +
                  " is not >> 1");
    if (sigma_perp * sigma_perp < 3.0 * sigma_par)
      w.push_back("sigma_perp^2 / sigma_par = " +
                  std::to_string(sigma_perp * sigma_perp / sigma_par) + " is not > 1 by 3x");
    return w;
  }
};

inline EnsembleParams make_params(double sigma_perp, double sigma_par, double rho0,
                                  double gamma = 1.0) {
  auto check = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v))
      throw InvalidParameter(std::string(name) + " must be positive and finite, got " +
                             std::to_string(v));
  };
  check(sigma_perp, "sigma_perp");
  check(sigma_par, "sigma_par");
  check(rho0, "rho0");
  check(gamma, "gamma");
  return EnsembleParams{sigma_perp, sigma_par, rho0, gamma};
}

/// Cloud with Fresnel number F, optical depth d and length L (Gamma = 1).
inline EnsembleParams geometry_from_length(double fresnel, double depth, double length) {
  if (!(fresnel > 0) || !(depth > 0) || !(length > 0))
    throw InvalidParameter("F, d and L must be positive");
  double sigma_par = length / std::sqrt(2 * std::numbers::pi);
  double sigma_perp = std::sqrt(fresnel * length);
  double rho0 = depth / (6 * std::numbers::pi * length);
  return make_params(sigma_perp, sigma_par, rho0, 1.0);
}

/// Cloud with Fresnel number F, optical depth d and N atoms (Gamma = 1).
inline EnsembleParams solve_geometry(double fresnel, double depth, double atoms) {
  if (!(fresnel > 0) || !(depth > 0) || !(atoms > 0))
    throw InvalidParameter("F, d and N must be positive");
  return geometry_from_length(fresnel, depth, 3 * atoms / (depth * fresnel));
}

/// Series cutoffs and quadrature settings for the analytic mode sums.
struct Truncation {
  int m_max = 4;
  int l_max = 12;
  int q_max = 6;
  int k_max = 12;
  int quad_nodes = 32;
  double rel_tol = 1e-6;
  int max_levels = 8;

  void validate() const {
    if (m_max < 0 || l_max < 0 || q_max < 0 || k_max < 0)
      throw InvalidParameter("truncation cutoffs must be non-negative");
    if (quad_nodes < 2) throw InvalidParameter("quad_nodes must be at least 2");
    if (!(rel_tol > 0)) throw InvalidParameter("rel_tol must be positive");
    if (max_levels < 1) throw InvalidParameter("max_levels must be at least 1");
  }

  /// Next level of the adaptive refinement.
  Truncation grown() const {
    Truncation t = *this;
    t.l_max += 4;
    t.q_max += 2;
    t.k_max += std::max(4, k_max / 2);
    t.quad_nodes = quad_nodes + quad_nodes / 2;
    return t;
  }
};

} // namespace srs
