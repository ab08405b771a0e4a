#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "srs/error.hpp"
#include "srs/specfun.hpp"

namespace srs {

/// Radial Dini/Fourier-Bessel basis J_m(X_mn r / a_c) on [0, a_c].
struct DiniBasis {
  int m = 0;
  double a_c = 1;
  int size = 0;
  std::vector<double> zeros;
  std::vector<double> gammas;
};

inline DiniBasis build_basis(int m, double a_c, int size) {
  if (size < 1) throw InvalidParameter("basis size must be at least 1");
  if (!(a_c > 0)) throw InvalidParameter("a_c must be positive");
  DiniBasis b{m, a_c, size, {}, {}};
  b.zeros.reserve(size);
  b.gammas.reserve(size);
  for (int n = 1; n <= size; ++n) {
    b.zeros.push_back(bessel_zero(std::abs(m), n));
    b.gammas.push_back(b.zeros.back() / a_c);
  }
  return b;
}

struct LambdaPair {
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd lambda1;
  std::vector<std::string> warnings;
};

namespace detail {

// c*sigma^2 e^{-(a sigma^2)(g^2+g'^2)} I_m(b sigma^2 g g') / (a_c^2 J_{m+1}(X) J_{m+1}(X'))
// with the exponent folded into the scaled Bessel (b = 2a for every kernel used here).
inline Eigen::MatrixXd gaussian_kernel(const DiniBasis& basis, double sigma, double c, double a) {
  int S = basis.size;
  std::vector<double> norm(S);
  for (int n = 0; n < S; ++n)
    norm[n] = 1.0 / (basis.a_c * bessel_j(std::abs(basis.m) + 1, basis.zeros[n]));
  Eigen::MatrixXd K(S, S);
  double s2 = sigma * sigma;
  for (int i = 0; i < S; ++i)
    for (int j = 0; j <= i; ++j) {
      double gi = basis.gammas[i], gj = basis.gammas[j];
      double v = c * s2 * std::exp(-a * s2 * (gi - gj) * (gi - gj)) *
                 bessel_i_scaled(basis.m, 2 * a * s2 * gi * gj) * norm[i] * norm[j];
      K(i, j) = v;
      K(j, i) = v;
    }
  return K;
}

} // namespace detail

/// The Gaussian-weighted Bessel Gram matrices Lambda^m (width sigma^2/2) and
/// Lambda1^m (width sigma^2).
inline LambdaPair lambda_matrices(const DiniBasis& basis, double sigma_perp) {
  if (sigma_perp < 0) throw InvalidParameter("sigma_perp must be non-negative");
  LambdaPair p;
  if (sigma_perp == 0) {
    p.lambda = Eigen::MatrixXd::Zero(basis.size, basis.size);
    p.lambda1 = Eigen::MatrixXd::Zero(basis.size, basis.size);
    p.warnings.push_back("sigma_perp = 0: both matrices vanish identically");
    return p;
  }
  p.lambda = detail::gaussian_kernel(basis, sigma_perp, 2.0, 0.5);
  p.lambda1 = detail::gaussian_kernel(basis, sigma_perp, 4.0, 1.0);
  return p;
}

/// Continuum value of sum_p Lambda_np Lambda1_pn'.
inline Eigen::MatrixXd lambda_product_closed_form(const DiniBasis& basis, double sigma_perp) {
  return detail::gaussian_kernel(basis, sigma_perp, 4.0 / 3.0, 1.0 / 3.0);
}

/// Weights gamma_p (pi/a_c)/2 that turn sum_p into the integral over gamma; the
/// discrete basis carries the exact weight 1/(a_c J_{m+1}(X_p))^2.
inline std::vector<double> continuum_weights(const DiniBasis& basis) {
  std::vector<double> w(basis.size);
  for (int p = 0; p < basis.size; ++p)
    w[p] = 0.5 * basis.gammas[p] * std::numbers::pi / basis.a_c;
  return w;
}

/// Number of leading basis functions with gamma * sigma below `reach`.
inline int interior_window(const DiniBasis& basis, double sigma_perp, double reach) {
  int w = 0;
  while (w < basis.size && basis.gammas[w] * sigma_perp < reach) ++w;
  return w;
}

/// ||[Lambda, Lambda1]||_F / (||Lambda||_F ||Lambda1||_F) on the leading
/// window x window block (window = 0 means the full matrices).
inline double commutator_residual(const LambdaPair& pair, int window = 0) {
  int S = static_cast<int>(pair.lambda.rows());
  if (window <= 0 || window > S) window = S;
  Eigen::MatrixXd rows_a = pair.lambda.topRows(window), rows_b = pair.lambda1.topRows(window);
  Eigen::MatrixXd c = rows_a * pair.lambda1.leftCols(window) - rows_b * pair.lambda.leftCols(window);
  double na = pair.lambda.topLeftCorner(window, window).norm();
  double nb = pair.lambda1.topLeftCorner(window, window).norm();
  if (na == 0 || nb == 0) return 0;
  return c.norm() / (na * nb);
}

struct EigenData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd U;
  Eigen::VectorXd eigenvalues1;
  double commutator = 0;
  double offdiag1 = 0;
};

/// Common eigenbasis of Lambda and Lambda1. Lambda is diagonalized first and
/// Lambda1 is then diagonalized inside every (near-)degenerate eigenspace.
inline EigenData simultaneous_eigendecomposition(const LambdaPair& pair,
                                                 double max_commutator = 0.05,
                                                 double degeneracy_tol = 1e-12) {
  EigenData out;
  out.commutator = commutator_residual(pair);
  if (out.commutator > max_commutator)
    throw NonCommuting("Lambda and Lambda1 do not commute: residual " +
                           std::to_string(out.commutator),
                       out.commutator);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pair.lambda);
  Eigen::VectorXd lam = es.eigenvalues();
  Eigen::MatrixXd U = es.eigenvectors();
  int S = static_cast<int>(lam.size());
  double scale = std::max(1e-300, lam.cwiseAbs().maxCoeff());
  for (int i = 0; i < S;) {
    int j = i + 1;
    while (j < S && lam(j) - lam(j - 1) <= degeneracy_tol * scale) ++j;
    if (j - i > 1) {
      Eigen::MatrixXd Ub = U.middleCols(i, j - i);
      Eigen::MatrixXd sub = Ub.transpose() * pair.lambda1 * Ub;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> inner(0.5 * (sub + sub.transpose()));
      U.middleCols(i, j - i) = Ub * inner.eigenvectors();
    }
    i = j;
  }
  Eigen::MatrixXd d1 = U.transpose() * pair.lambda1 * U;
  out.eigenvalues = lam;
  out.eigenvalues1 = d1.diagonal();
  d1.diagonal().setZero();
  double n1 = pair.lambda1.norm();
  out.offdiag1 = n1 > 0 ? d1.norm() / n1 : 0.0;
  out.U = U;
  return out;
}

/// Row concentration of Lambda: sum of |off-diagonal| entries over the diagonal entry.
inline std::vector<double> delta_limit_profile(const DiniBasis& basis, double sigma_perp) {
  if (!(sigma_perp > 0)) throw InvalidParameter("sigma_perp must be positive");
  Eigen::MatrixXd L = detail::gaussian_kernel(basis, sigma_perp, 2.0, 0.5);
  std::vector<double> r(basis.size);
  for (int i = 0; i < basis.size; ++i) {
    double off = L.row(i).cwiseAbs().sum() - std::abs(L(i, i));
    r[i] = off / std::abs(L(i, i));
  }
  return r;
}

/// First-order term of the 1/sigma^2 expansion of the x-integral, in four readings.
struct FirstOrderCheck {
  double lhs;      // Bessel orders m+-1 replaced by m: I_m(s g g')[1 - s(g-g')^2/2]
  double rhs;      // sqrt(2) e^{-s(g^2+g'^2)} I_m(2 s g g'), the Gaussian large-size form
  double printed;  // bracket with exact I_{m+-1} and the sign as printed
  double exact;    // true -d/d(alpha) of the closed form, times the outer Gaussian
};

inline FirstOrderCheck first_order_integral_check(double sigma_perp, double g, double gp, int m) {
  double s = sigma_perp * sigma_perp;
  double pre = 1.0 / (8 * s * s);
  double x = s * g * gp;
  double gauss = std::exp(-0.5 * s * (g - gp) * (g - gp));
  double im = bessel_i_scaled(m, x), imm = bessel_i_scaled(m - 1, x), imp = bessel_i_scaled(m + 1, x);
  FirstOrderCheck c;
  c.lhs = pre * gauss * im * (1 - 0.5 * s * (g - gp) * (g - gp));
  c.rhs = pre * std::numbers::sqrt2 * std::exp(-s * (g - gp) * (g - gp)) *
          bessel_i_scaled(m, 2 * x);
  c.printed = pre * gauss * (im - 0.5 * s * (g * g + gp * gp) * im + 0.5 * x * (imm + imp));
  c.exact = pre * gauss * (im + 0.5 * s * (g * g + gp * gp) * im + 0.5 * x * (imm + imp));
  return c;
}

/// int_0^{r_max} r J_m(x r) J_m(x' r) dr by composite Gauss-Legendre.
inline double radial_orthogonality_check(int m, double x, double xp, double r_max) {
  if (!(x > 0) || !(xp > 0)) throw InvalidParameter("x and x' must be positive");
  if (!(r_max > 0)) throw InvalidParameter("r_max must be positive");
  auto f = [&](double r) { return r * bessel_j(m, x * r) * bessel_j(m, xp * r); };
  return detail::composite(f, 0.0, r_max, std::numbers::pi / (2 * std::max(x, xp)), 1e-12,
                           "radial orthogonality")
      .real();
}

/// Large-r_max envelope of |radial_orthogonality_check| for x != x':
/// (2/pi)(x + x') / (sqrt(x x') |x^2 - x'^2|), independent of r_max.
inline double radial_orthogonality_bound(double x, double xp) {
  return 2 / std::numbers::pi * (x + xp) / (std::sqrt(x * xp) * std::abs(x * x - xp * xp));
}

} // namespace srs
