#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <lapacke.h>

#include "srs/error.hpp"
#include "srs/params.hpp"

namespace srs {

using cplx = std::complex<double>;

/// A sampled set of atom positions (units of 1/k_S).
struct AtomCloud {
  std::vector<Eigen::Vector3d> positions;
  std::uint64_t seed = 0;
  EnsembleParams params;
  long resampled = 0;

  std::size_t size() const { return positions.size(); }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Gaussian cloud with widths (sigma_perp, sigma_perp, sigma_par). Atoms closer
/// than r_min to an earlier atom are redrawn.
inline AtomCloud sample_cloud(const EnsembleParams& p, int atoms, std::uint64_t seed,
                              double r_min = 0.5, long budget = -1) {
  if (atoms < 1) throw InvalidParameter("atom number must be at least 1");
  if (r_min < 0) throw InvalidParameter("minimum separation must be non-negative");
  if (budget < 0) budget = 100L * atoms + 1000;
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> gauss;
  AtomCloud c;
  c.seed = seed;
  c.params = p;
  c.positions.reserve(atoms);
  double r2 = r_min * r_min;
  while (static_cast<int>(c.positions.size()) < atoms) {
    Eigen::Vector3d x(p.sigma_perp * gauss(rng), p.sigma_perp * gauss(rng), p.sigma_par * gauss(rng));
    bool ok = true;
    for (const auto& y : c.positions)
      if ((x - y).squaredNorm() < r2) {
        ok = false;
        break;
      }
    if (ok) {
      c.positions.push_back(x);
    } else if (++c.resampled > budget) {
      throw SamplingError("resampling budget exhausted after " + std::to_string(c.resampled) +
                          " redraws with " + std::to_string(c.positions.size()) + " atoms placed");
    }
  }
  return c;
}

/// e_+ projection of the dipole propagator between two atoms:
/// (-1/8 pi) (grad^2 + d_z^2) e^{iu}/u with u = |r_j - r_j'|.
inline cplx scalar_propagator(const Eigen::Vector3d& rj, const Eigen::Vector3d& rjp,
                              double r_min = 0) {
  Eigen::Vector3d d = rj - rjp;
  double u = d.norm();
  if (!(u > 0) || u < r_min)
    throw CoincidentAtoms("atom separation " + std::to_string(u) + " below the minimum");
  double dz2 = d.z() * d.z(), u2 = u * u;
  const cplx I(0, 1);
  cplx e = std::exp(I * u);
  cplx f1 = e * (I / u - 1 / u2);
  cplx f2 = e * (-1 / u - 2.0 * I / u2 + 2 / (u2 * u));
  return -1 / (8 * std::numbers::pi) * (-e / u + f2 * dz2 / u2 + f1 * (1 / u - dz2 / (u2 * u)));
}

/// Complex symmetric matrix of the point-particle equations of motion.
struct InteractionMatrix {
  Eigen::MatrixXcd entries;
  double gamma = 1;

  Eigen::Index size() const { return entries.rows(); }
};

inline InteractionMatrix interaction_matrix(const AtomCloud& cloud, double r_min = 0) {
  const double gamma = cloud.params.gamma;
  const auto n = static_cast<Eigen::Index>(cloud.size());
  InteractionMatrix m;
  m.gamma = gamma;
  m.entries.resize(n, n);
  const cplx c(0, -3 * std::numbers::pi * gamma);
  for (Eigen::Index j = 0; j < n; ++j) {
    m.entries(j, j) = -gamma / 2;
    for (Eigen::Index k = 0; k < j; ++k) {
      cplx v = c * scalar_propagator(cloud.positions[j], cloud.positions[k], r_min);
      m.entries(j, k) = v;
      m.entries(k, j) = v;
    }
  }
  return m;
}

namespace detail {

// e^{A t} x by a Taylor series on sub-steps of norm at most 1.
inline Eigen::VectorXcd expmv(const Eigen::MatrixXcd& A, double t, Eigen::VectorXcd x) {
  double norm = A.cwiseAbs().colwise().sum().maxCoeff() * t;
  int steps = std::max(1, static_cast<int>(std::ceil(norm)));
  double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXcd term = x, acc = x;
    for (int k = 1; k < 60; ++k) {
      term = (A * term) * (h / k);
      acc += term;
      if (term.norm() <= 1e-17 * acc.norm()) break;
    }
    x = acc;
  }
  return x;
}

} // namespace detail

/// How e^{M t} is formed.
enum class EvolutionMethod { eigen, scaling_squaring };

/// Time evolution of the covariance C(t) = e^{M t} (e^{M t})^dagger.
/// One eigendecomposition M = V diag(lambda) V^{-1} serves every t; it is
/// certified against a Taylor probe at t_max, with scaling and squaring as the
/// fallback.
class Evolution {
public:
  Evolution(const InteractionMatrix& m, double t_max, double tol = 1e-8,
            double max_condition = 1e4)
      : m_(m.entries), gamma_(m.gamma) {
    const Eigen::Index n = m_.rows();
    Eigen::VectorXcd probe(n);
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < n; ++i) probe(i) = cplx(g(rng), g(rng));
    Eigen::VectorXcd ref = detail::expmv(m_, t_max, probe);

    if (decompose()) {
      condition_ = V_.norm() * W_.norm() / static_cast<double>(n);
      Eigen::VectorXcd e = (lambda_ * t_max).array().exp();
      Eigen::VectorXcd got = V_ * (e.asDiagonal() * (W_ * probe));
      error_ = (got - ref).norm() / ref.norm();
      if (error_ <= tol && condition_ <= max_condition) {
        method_ = EvolutionMethod::eigen;
        S_ = V_.adjoint() * V_;
        G_ = W_ * W_.adjoint();
        if (std::abs(weighted(0, false) - static_cast<double>(n)) <= tol * static_cast<double>(n))
          return;
      }
    }
    Eigen::MatrixXcd E = (m_ * t_max).exp();
    double err = (E * probe - ref).norm() / ref.norm();
    if (err > tol)
      throw EvolutionError("matrix exponential failed both checks: eigen " + std::to_string(error_) +
                           ", scaling and squaring " + std::to_string(err));
    error_ = err;
    method_ = EvolutionMethod::scaling_squaring;
  }

  EvolutionMethod method() const { return method_; }
  double certified_error() const { return error_; }
  /// ||V||_F ||V^{-1}||_F / N of the eigenvector matrix (0 if never formed).
  double condition() const { return condition_; }

  Eigen::MatrixXcd propagator(double t) const {
    if (method_ == EvolutionMethod::eigen) {
      Eigen::VectorXcd e = (lambda_ * t).array().exp();
      return V_ * e.asDiagonal() * W_;
    }
    return (m_ * t).exp();
  }

  Eigen::MatrixXcd covariance(double t) const {
    Eigen::MatrixXcd E = propagator(t);
    return E * E.adjoint();
  }

  /// trace C(t).
  double trace(double t) const {
    if (method_ == EvolutionMethod::eigen) return weighted(t, false);
    return covariance(t).trace().real();
  }

  /// Radiated power Re trace[(Gamma + M) C(t)].
  double power(double t) const {
    if (method_ == EvolutionMethod::eigen) return weighted(t, true);
    Eigen::MatrixXcd C = covariance(t);
    return (gamma_ * C.trace() + (m_ * C).trace()).real();
  }

private:
  bool decompose() {
    const Eigen::Index n = m_.rows();
    Eigen::MatrixXcd a = m_;
    lambda_.resize(n);
    V_.resize(n, n);
    lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(n),
        reinterpret_cast<lapack_complex_double*>(a.data()), static_cast<lapack_int>(n),
        reinterpret_cast<lapack_complex_double*>(lambda_.data()), nullptr, 1,
        reinterpret_cast<lapack_complex_double*>(V_.data()), static_cast<lapack_int>(n));
    if (info != 0) return false;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V_);
    W_ = lu.inverse();
    return W_.allFinite();
  }

  // sum_ij S_ji G_ij w_i e^{(lambda_i + conj lambda_j) t}
  double weighted(double t, bool with_rate) const {
    Eigen::VectorXcd e = (lambda_ * t).array().exp();
    Eigen::VectorXcd wi = e;
    if (with_rate) wi = ((lambda_.array() + gamma_) * e.array()).matrix();
    // sum_ij wi_i G_ij conj(e_j) S_ji = sum_i wi_i (G diag(conj e) S)_ii
    Eigen::VectorXcd ec = e.conjugate();
    cplx acc = 0;
    for (Eigen::Index i = 0; i < G_.rows(); ++i)
      acc += wi(i) * (G_.row(i).transpose().array() * ec.array() * S_.col(i).array()).sum();
    return acc.real();
  }

  Eigen::MatrixXcd m_;
  double gamma_;
  EvolutionMethod method_ = EvolutionMethod::eigen;
  double error_ = 0;
  double condition_ = 0;
  Eigen::VectorXcd lambda_;
  Eigen::MatrixXcd V_, W_, S_, G_;
};

/// C(t) at each requested time.
inline std::vector<Eigen::MatrixXcd> evolve(const InteractionMatrix& m, const std::vector<double>& t_grid) {
  for (double t : t_grid)
    if (t < 0) throw InvalidParameter("times must be non-negative");
  double t_max = t_grid.empty() ? 0 : *std::max_element(t_grid.begin(), t_grid.end());
  Evolution ev(m, t_max);
  std::vector<Eigen::MatrixXcd> out;
  for (double t : t_grid) out.push_back(ev.covariance(t));
  return out;
}

/// Radiated power of the point-particle model, in photons per unit Gamma t.
inline std::vector<double> total_power_numeric(const InteractionMatrix& m,
                                               const std::vector<double>& t_grid) {
  for (double t : t_grid)
    if (t < 0) throw InvalidParameter("times must be non-negative");
  double t_max = t_grid.empty() ? 0 : *std::max_element(t_grid.begin(), t_grid.end());
  Evolution ev(m, t_max);
  std::vector<double> out;
  for (double t : t_grid) out.push_back(ev.power(t));
  return out;
}

inline double total_power_numeric(const InteractionMatrix& m, double t) {
  return total_power_numeric(m, std::vector<double>{t}).front();
}

/// Worker threads: SRS_THREADS if set, else the hardware concurrency.
inline int thread_count() {
  if (const char* s = std::getenv("SRS_THREADS")) {
    int n = std::atoi(s);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct Realization {
  std::uint64_t seed = 0;
  std::vector<double> power;
  long resampled = 0;
  EvolutionMethod method = EvolutionMethod::eigen;
  double certified_error = 0;
  bool failed = false;
  std::string error;
};

struct MonteCarloResult {
  EnsembleParams params;
  int atoms = 0;
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::vector<Realization> runs;
  int succeeded = 0;
};

struct MonteCarloOptions {
  double r_min = 0.5;
  int threads = 0;
};

inline Realization run_realization(const EnsembleParams& p, int atoms, std::uint64_t seed,
                                   const std::vector<double>& t_grid, double r_min) {
  Realization r;
  r.seed = seed;
  try {
    auto cloud = sample_cloud(p, atoms, seed, r_min);
    r.resampled = cloud.resampled;
    auto m = interaction_matrix(cloud, r_min);
    double t_max = t_grid.empty() ? 0 : *std::max_element(t_grid.begin(), t_grid.end());
    Evolution ev(m, t_max);
    r.method = ev.method();
    r.certified_error = ev.certified_error();
    for (double t : t_grid) r.power.push_back(ev.power(t));
  } catch (const Error& e) {
    r.failed = true;
    r.error = e.what();
  }
  return r;
}

/// Mean and standard error of the point-particle power over n_real clouds.
/// Realization i uses seed splitmix64(base_seed + i); failed realizations are
/// flagged and left out of the statistics.
inline MonteCarloResult monte_carlo(double fresnel, double depth, int atoms, int n_real,
                                    std::uint64_t base_seed, const std::vector<double>& t_grid,
                                    MonteCarloOptions opt = {}) {
  if (n_real < 2) throw InvalidParameter("need at least two realizations");
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (t_grid[i] < 0 || (i && t_grid[i] < t_grid[i - 1]))
      throw InvalidParameter("time grid must be non-negative and increasing");
  MonteCarloResult res;
  res.params = solve_geometry(fresnel, depth, atoms);
  res.atoms = atoms;
  res.times = t_grid;
  res.runs.resize(n_real);
  int threads = std::min(opt.threads > 0 ? opt.threads : thread_count(), n_real);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n_real; i = next++)
      res.runs[i] = run_realization(res.params, atoms, splitmix64(base_seed + i), t_grid, opt.r_min);
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  res.mean.assign(t_grid.size(), 0);
  res.stderr_.assign(t_grid.size(), 0);
  for (const auto& r : res.runs)
    if (!r.failed) ++res.succeeded;
  if (res.succeeded < 2) throw SamplingError("fewer than two realizations succeeded");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    double s = 0, s2 = 0;
    for (const auto& r : res.runs)
      if (!r.failed) s += r.power[k];
    double mean = s / res.succeeded;
    for (const auto& r : res.runs)
      if (!r.failed) s2 += (r.power[k] - mean) * (r.power[k] - mean);
    res.mean[k] = mean;
    res.stderr_[k] = std::sqrt(s2 / (res.succeeded - 1) / res.succeeded);
  }
  return res;
}

} // namespace srs
