#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>

#include "srs/error.hpp"
#include "srs/params.hpp"
#include "srs/specfun.hpp"

namespace srs {

using cplx = std::complex<double>;

/// One term of the double series: (l, q, k, n) and the primed counterparts.
struct TermIndex {
  int m = 0;
  int l = 0, q = 0, k = 0, n = 0;
  int lp = 0, qp = 0, kp = 0, np = 0;
};

namespace detail {

inline double factorial(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> f(171, 1.0);
    for (int i = 1; i <= 170; ++i) f[i] = f[i - 1] * i;
    return f;
  }();
  if (n < 0 || n > 170) throw InvalidIndex("factorial argument out of range");
  return table[n];
}

} // namespace detail

/// Combinatorial coefficient of the (l,q,k,n | l',q',k',n') term, summed over s, s', Q, Q'.
inline double chi_coeff(const TermIndex& t) {
  if (t.l < 0 || t.q < 0 || t.k < 0 || t.n < 0 || t.lp < 0 || t.qp < 0 || t.kp < 0 || t.np < 0)
    throw InvalidIndex("term indices must be non-negative");
  if (t.n > t.q || t.np > t.qp) throw InvalidIndex("term index needs n <= q and n' <= q'");
  using detail::factorial;
  double D = 2.0 + 2 * (t.k + t.kp) + t.q + t.qp + t.n + t.np;
  double sum = 0;
  for (int s = 0; 2 * s <= t.n; ++s)
    for (int sp = 0; 2 * sp <= t.np; ++sp)
      for (int Q = 0; Q <= t.n - 2 * s; ++Q)
        for (int Qp = 0; Qp <= t.np - 2 * sp; ++Qp) {
          double sign = ((Q + Qp + s + sp) % 2) ? -1.0 : 1.0;
          double den = factorial(t.q - t.n) * factorial(t.qp - t.np) *
                       factorial(t.n - 2 * s - Q) * factorial(t.np - 2 * sp - Qp) * factorial(s) *
                       factorial(sp) * factorial(Q) * factorial(Qp) *
                       (1.0 + Q + Qp + t.k + t.kp + t.l + t.lp + 2.0 * (t.q + t.qp)) * D;
          sum += 2 * sign * std::pow(2 * std::numbers::pi, -(s + sp)) / den;
        }
  return sum;
}

/// Test hook: replaces (-1)^Q by +1 inside the coefficient.
struct ChiMutation {
  bool drop_q_sign = false;
};

namespace detail {

// Per-half factor of the series. The Q and Q' sums of the coefficient factorize
// once 1/(1+Q+Q'+...) is written as int_0^1 v^{Q+Q'+...} dv, so every term is the
// product of h_b(y, v) and conj(h_b'(y', v)) with b = 2k+q+n, integrated over v.
class HalfSeries {
public:
  HalfSeries(double fresnel, double tau, const Truncation& tr, ChiMutation mut = {})
      : lmax_(tr.l_max), qmax_(tr.q_max), kmax_(tr.k_max), mut_(mut) {
    if (tau == 0) {
      qmax_ = 0;
      kmax_ = 0;
    }
    const cplx I(0, 1);
    int jmax = 2 * qmax_ + kmax_;
    invfact_.resize(lmax_ + jmax + 1);
    for (std::size_t i = 0; i < invfact_.size(); ++i) invfact_[i] = 1 / factorial(static_cast<int>(i));
    coef_.assign((qmax_ + 1) * (qmax_ + 1) * (qmax_ / 2 + 1), cplx(0));
    cplx a = -I / std::sqrt(8 * fresnel), c = 8.0 * I * std::numbers::pi * fresnel;
    for (int q = 0; q <= qmax_; ++q)
      for (int n = 0; n <= q; ++n)
        for (int s = 0; 2 * s <= n; ++s) {
          double sgn = s % 2 ? -1.0 : 1.0;
          coef_[index(q, n, s)] = std::pow(a, q) * std::pow(c, n) * sgn *
                                  std::pow(2 * std::numbers::pi, -s) /
                                  (factorial(q - n) * factorial(s) * factorial(n - 2 * s));
        }
    tk_.resize(kmax_ + 1);
    for (int k = 0; k <= kmax_; ++k) tk_[k] = invfact_[k];
    taupow_.resize(kmax_ + qmax_ + 1);
    for (int i = 0; i <= kmax_ + qmax_; ++i) taupow_[i] = std::pow(tau, i);
  }

  int max_b() const { return 2 * kmax_ + 2 * qmax_; }
  int v_degree() const { return lmax_ + kmax_ + 3 * qmax_; }

  /// h_b(u, v) for b = 0..max_b(), with u = y / 2F.
  void eval(double u, double v, cplx* out) const {
    const cplx I(0, 1);
    int jmax = 2 * qmax_ + kmax_;
    std::vector<cplx> pw(lmax_ + 1), L(jmax + 1);
    cplx z = -I * (u * v);
    pw[0] = 1;
    for (int l = 1; l <= lmax_; ++l) pw[l] = pw[l - 1] * z;
    for (int j = 0; j <= jmax; ++j) {
      cplx acc = 0;
      for (int l = lmax_; l >= 0; --l) acc += pw[l] * invfact_[l + j];
      L[j] = acc;
    }
    std::vector<double> vp(kmax_ + 2 * qmax_ + 1), om(qmax_ + 1);
    vp[0] = 1;
    for (std::size_t i = 1; i < vp.size(); ++i) vp[i] = vp[i - 1] * v;
    double base = mut_.drop_q_sign ? 1 + v : 1 - v;
    om[0] = 1;
    for (int i = 1; i <= qmax_; ++i) om[i] = om[i - 1] * base;
    std::fill(out, out + max_b() + 1, cplx(0));
    for (int q = 0; q <= qmax_; ++q)
      for (int n = 0; n <= q; ++n)
        for (int s = 0; 2 * s <= n; ++s) {
          cplx c = coef_[index(q, n, s)] * om[n - 2 * s];
          for (int k = 0; k <= kmax_; ++k)
            out[2 * k + q + n] += c * (taupow_[k + q] * tk_[k] * vp[k + 2 * q]) * L[2 * q + k];
        }
  }

private:
  int index(int q, int n, int s) const { return (q * (qmax_ + 1) + n) * (qmax_ / 2 + 1) + s; }

  int lmax_, qmax_, kmax_;
  ChiMutation mut_;
  std::vector<double> invfact_, tk_, taupow_;
  std::vector<cplx> coef_;
};

// v-integrated autocorrelation of the half series at a set of y nodes:
// G[i][c] = sum_v w_v sum_b h_b(y_i, v) conj(h_{c-b}(y_i, v)), c = D - 2.
inline std::vector<std::vector<cplx>> power_moments(const HalfSeries& hs, double fresnel,
                                                   const std::vector<double>& y) {
  int B = hs.max_b();
  auto [v, wv] = gauss_legendre(std::max(2, hs.v_degree() + 1)).mapped(0, 1);
  std::vector<std::vector<cplx>> G(y.size(), std::vector<cplx>(2 * B + 1, cplx(0)));
  std::vector<cplx> h(B + 1);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t a = 0; a < v.size(); ++a) {
      hs.eval(y[i] / (2 * fresnel), v[a], h.data());
      for (int b = 0; b <= B; ++b) {
        if (h[b] == cplx(0)) continue;
        cplx hb = wv[a] * h[b];
        for (int bp = 0; bp <= B; ++bp) G[i][b + bp] += hb * std::conj(h[bp]);
      }
    }
  return G;
}

inline double power_prefactor(const EnsembleParams& p, double t) {
  return p.depth() * p.gamma * std::exp(-t) / 8;
}

struct PowerLevel {
  std::map<int, double> per_m;
  double imag = 0;
};

inline PowerLevel power_at_level(const EnsembleParams& p, const Truncation& tr, double t,
                                 const std::vector<int>& m_list) {
  double F = p.fresnel(), tau = p.depth() * t / 4;
  HalfSeries hs(F, tau, tr);
  auto [y, wy] = gauss_legendre(tr.quad_nodes).mapped(0, 2 * F);
  auto G = power_moments(hs, F, y);
  PowerLevel out;
  double pre = power_prefactor(p, t);
  std::map<int, double> cache;
  for (int m : m_list) {
    int am = std::abs(m);
    if (!cache.count(am)) {
      cplx acc = 0;
      for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t c = 0; c < G[i].size(); ++c) {
          double D = 2.0 + c;
          acc += wy[i] * (2 / D) * bessel_i_scaled(am, 2 * y[i] / D) * G[i][c];
        }
      cache[am] = pre * acc.real();
      out.imag = std::max(out.imag, std::abs(pre * acc.imag()));
    }
    out.per_m[m] = cache[am];
  }
  return out;
}

} // namespace detail

/// Radiated power summed over the given azimuthal orders at one time.
struct PowerPoint {
  double t = 0;
  std::map<int, double> per_m;
  double total = 0;
  double residual = 0;
  double imag = 0;
  Truncation used;
};

/// All azimuthal orders -m_max..m_max.
inline std::vector<int> all_orders(int m_max) {
  std::vector<int> m;
  for (int i = -m_max; i <= m_max; ++i) m.push_back(i);
  return m;
}

/// Per-mode total radiated power at time t (in units of 1/Gamma), refining the
/// truncation until successive levels agree to rel_tol.
inline PowerPoint total_power(const EnsembleParams& p, const Truncation& trunc, double t,
                              const std::vector<int>& m_list) {
  trunc.validate();
  if (t < 0) throw InvalidParameter("time must be non-negative");
  Truncation cur = trunc;
  auto prev = detail::power_at_level(p, cur, t, m_list);
  double residual = 0;
  for (int level = 1; level <= trunc.max_levels; ++level) {
    Truncation next = cur.grown();
    auto now = detail::power_at_level(p, next, t, m_list);
    double tot = 0, diff = 0;
    for (auto& [m, v] : now.per_m) {
      tot += v;
      diff += std::abs(v - prev.per_m[m]);
    }
    residual = diff;
    cur = next;
    prev = now;
    if (diff <= trunc.rel_tol * std::abs(tot)) {
      PowerPoint pt;
      pt.t = t;
      pt.per_m = now.per_m;
      pt.total = tot;
      pt.residual = residual;
      pt.imag = now.imag;
      pt.used = cur;
      return pt;
    }
  }
  throw TruncationFailure("total power did not converge at t = " + std::to_string(t), residual);
}

struct PowerCurve {
  std::vector<double> times;
  std::map<int, std::vector<double>> per_m;
  std::vector<double> total;
  std::vector<double> residual;
  std::vector<Truncation> used;
};

inline PowerCurve power_curve(const EnsembleParams& p, const Truncation& trunc,
                              const std::vector<double>& times, const std::vector<int>& m_list) {
  PowerCurve c;
  c.times = times;
  for (int m : m_list) c.per_m[m];
  for (double t : times) {
    auto pt = total_power(p, trunc, t, m_list);
    for (auto& [m, v] : pt.per_m) c.per_m[m].push_back(v);
    c.total.push_back(pt.total);
    c.residual.push_back(pt.residual);
    c.used.push_back(pt.used);
  }
  return c;
}

/// Total power over all azimuthal orders: orders are added until the next
/// pair +-m contributes less than rel_tol / 10 of the running total.
inline PowerPoint total_power_all_orders(const EnsembleParams& p, const Truncation& trunc,
                                         double t) {
  int m_max = std::max(trunc.m_max, 1);
  for (;;) {
    auto pt = total_power(p, trunc, t, all_orders(m_max));
    double edge = pt.per_m[m_max] + pt.per_m[-m_max];
    if (std::abs(edge) <= 0.1 * trunc.rel_tol * std::abs(pt.total) || m_max >= 64) return pt;
    m_max *= 2;
  }
}

namespace detail {

// Correlation kernel on Gauss-Legendre nodes in x = sqrt(y) in [0, sqrt(2F)]:
// C_m(r, r') = sum_ij a_i(r) a_j(r') W_ij with a_i(r) = 2 x_i w_i J_m(x_i r / sigma).
struct CorrelationKernel {
  std::vector<double> x, w;
  std::map<int, Eigen::MatrixXcd> W;
  double prefactor = 0;
  double sigma_perp = 1;

  cplx value(int m, double r, double rp) const {
    const auto& K = W.at(std::abs(m));
    Eigen::VectorXd a(x.size()), b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      a(i) = 2 * x[i] * w[i] * bessel_j(m, x[i] * r / sigma_perp);
      b(i) = 2 * x[i] * w[i] * bessel_j(m, x[i] * rp / sigma_perp);
    }
    return prefactor * a.cast<cplx>().dot(K * b.cast<cplx>());
  }
};

inline CorrelationKernel correlation_kernel(const EnsembleParams& p, const Truncation& tr, double t,
                                            const std::vector<int>& m_list, int nx,
                                            ChiMutation mut = {}) {
  double F = p.fresnel(), tau = p.depth() * t / 4;
  HalfSeries hs(F, tau, tr, mut);
  CorrelationKernel ck;
  ck.sigma_perp = p.sigma_perp;
  ck.prefactor = p.lambda0() * std::exp(-t) / (4 * F);
  std::tie(ck.x, ck.w) = gauss_legendre(nx).mapped(0, std::sqrt(2 * F));
  auto [v, wv] = gauss_legendre(std::max(2, hs.v_degree() + 1)).mapped(0, 1);
  int B = hs.max_b(), nv = static_cast<int>(v.size());
  // H.block(i, b * nv, 1, nv) = sqrt(w_v) h_b(x_i, v)
  Eigen::MatrixXcd H(nx, (B + 1) * nv);
  std::vector<cplx> h(B + 1);
  for (int i = 0; i < nx; ++i)
    for (int a = 0; a < nv; ++a) {
      hs.eval(ck.x[i] * ck.x[i] / (2 * F), v[a], h.data());
      double sw = std::sqrt(wv[a]);
      for (int b = 0; b <= B; ++b) H(i, b * nv + a) = sw * h[b];
    }
  // Reversed block order, so that T_c = H[:, 0..c] * Hrev[:, (B-c)..B]^H.
  Eigen::MatrixXcd Hrev(nx, (B + 1) * nv);
  for (int b = 0; b <= B; ++b) Hrev.middleCols((B - b) * nv, nv) = H.middleCols(b * nv, nv);
  std::vector<int> orders;
  for (int m : m_list)
    if (std::find(orders.begin(), orders.end(), std::abs(m)) == orders.end())
      orders.push_back(std::abs(m));
  for (int m : orders) ck.W[m] = Eigen::MatrixXcd::Zero(nx, nx);
  Eigen::MatrixXcd T(nx, nx);
  Eigen::MatrixXd K(nx, nx);
  for (int c = 0; c <= 2 * B; ++c) {
    int lo = std::max(0, c - B), hi = std::min(c, B);
    int cols = (hi - lo + 1) * nv;
    // sum_{b=lo..hi} H_b H_{c-b}^H
    T.noalias() = H.middleCols(lo * nv, cols) * Hrev.middleCols((B - c + lo) * nv, cols).adjoint();
    double D = 2.0 + c;
    for (int m : orders) {
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j <= i; ++j) {
          double d = ck.x[i] - ck.x[j];
          double kv = (2 / D) * std::exp(-d * d / D) * bessel_i_scaled(m, 2 * ck.x[i] * ck.x[j] / D);
          K(i, j) = kv;
          K(j, i) = kv;
        }
      ck.W[m].array() += K.cast<cplx>().array() * T.array();
    }
  }
  return ck;
}

// Nodes needed to resolve J_m(x r / sigma) for r up to r_max on [0, sqrt(2F)].
inline int nodes_for_radius(const EnsembleParams& p, const Truncation& tr, double r_max) {
  double phase = std::sqrt(2 * p.fresnel()) * r_max / p.sigma_perp;
  return std::max(tr.quad_nodes, static_cast<int>(std::ceil(0.6 * phase)) + 24);
}

} // namespace detail

/// Intensity and power density of one azimuthal order across a radial grid.
struct RadialProfile {
  double t = 0;
  int m = 0;
  std::vector<double> r_over_sigma;
  std::vector<double> intensity;
  std::vector<double> power_density;
  std::vector<double> imag;
  double residual = 0;
};

/// Correlation at radial points for several orders, refined until the largest
/// change between successive levels is below rel_tol of the largest |value|.
inline std::vector<RadialProfile> radial_profile(const EnsembleParams& p, const Truncation& trunc,
                                                 double t, const std::vector<int>& m_list,
                                                 const std::vector<double>& r_grid,
                                                 ChiMutation mut = {}) {
  trunc.validate();
  if (t < 0) throw InvalidParameter("time must be non-negative");
  for (std::size_t i = 0; i < r_grid.size(); ++i)
    if (r_grid[i] < 0 || (i && r_grid[i] < r_grid[i - 1]))
      throw InvalidParameter("radial grid must be non-negative and increasing");
  double r_max = r_grid.empty() ? 0 : r_grid.back();
  auto evaluate = [&](const Truncation& tr) {
    auto ck = detail::correlation_kernel(p, tr, t, m_list, detail::nodes_for_radius(p, tr, r_max), mut);
    std::vector<RadialProfile> out;
    for (int m : m_list) {
      RadialProfile rp;
      rp.t = t;
      rp.m = m;
      for (double r : r_grid) {
        cplx c = ck.value(m, r, r);
        rp.r_over_sigma.push_back(r / p.sigma_perp);
        rp.intensity.push_back(c.real());
        rp.power_density.push_back(r * c.real());
        rp.imag.push_back(c.imag());
      }
      out.push_back(std::move(rp));
    }
    return out;
  };
  Truncation cur = trunc;
  auto prev = evaluate(cur);
  double residual = 0;
  for (int level = 1; level <= trunc.max_levels; ++level) {
    Truncation next = cur.grown();
    auto now = evaluate(next);
    double scale = 0, diff = 0;
    for (std::size_t a = 0; a < now.size(); ++a)
      for (std::size_t i = 0; i < now[a].intensity.size(); ++i) {
        scale = std::max(scale, std::abs(now[a].intensity[i]));
        diff = std::max(diff, std::abs(now[a].intensity[i] - prev[a].intensity[i]));
      }
    residual = diff;
    cur = next;
    prev = std::move(now);
    if (diff <= trunc.rel_tol * scale) {
      for (auto& rp : prev) rp.residual = residual;
      return prev;
    }
  }
  throw TruncationFailure("radial profile did not converge at t = " + std::to_string(t), residual);
}

/// Correlation C_m(r, r', t) of the Stokes field.
inline cplx correlation(const EnsembleParams& p, const Truncation& trunc, double r, double rp,
                        double t, int m, double* residual = nullptr, Truncation* used = nullptr) {
  trunc.validate();
  if (r < 0 || rp < 0) throw InvalidParameter("radii must be non-negative");
  if (t < 0) throw InvalidParameter("time must be non-negative");
  double r_max = std::max(r, rp);
  auto eval = [&](const Truncation& tr) {
    return detail::correlation_kernel(p, tr, t, {m}, detail::nodes_for_radius(p, tr, r_max))
        .value(m, r, rp);
  };
  Truncation cur = trunc;
  cplx prev = eval(cur);
  double diff = 0;
  for (int level = 1; level <= trunc.max_levels; ++level) {
    cur = cur.grown();
    cplx now = eval(cur);
    diff = std::abs(now - prev);
    prev = now;
    if (diff <= trunc.rel_tol * std::abs(now)) {
      if (residual) *residual = diff;
      if (used) *used = cur;
      return now;
    }
  }
  throw TruncationFailure("correlation did not converge", diff);
}

/// Radial integral of C_m(r, r, t) against the total power of the same order.
struct ContractionCheck {
  std::map<int, double> contracted;
  std::map<int, double> power;
  double max_rel = 0;
};

/// The r-integral is cut at 20 and 40 sigma_perp and Richardson-extrapolated,
/// since the missing tail falls off as 1/R.
inline ContractionCheck radial_contraction(const EnsembleParams& p, const Truncation& trunc,
                                           double t, const std::vector<int>& m_list,
                                           ChiMutation mut = {}) {
  auto pw = total_power(p, trunc, t, m_list);
  double R = 40 * p.sigma_perp;
  auto ck = detail::correlation_kernel(p, pw.used, t, m_list,
                                       detail::nodes_for_radius(p, pw.used, R), mut);
  auto rule = gauss_legendre(40);
  ContractionCheck out;
  for (int m : m_list) {
    auto radial = [&](double r_max) {
      int panels = 80 * static_cast<int>(r_max / R * 2 + 0.5);
      double acc = 0;
      for (int j = 0; j < panels; ++j) {
        auto [x, w] = rule.mapped(j * r_max / panels, (j + 1) * r_max / panels);
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i] * ck.value(m, x[i], x[i]).real();
      }
      return acc;
    };
    double value = 2 * radial(R) - radial(R / 2);
    out.contracted[m] = value;
    out.power[m] = pw.per_m[m];
    out.max_rel = std::max(out.max_rel, std::abs(value / pw.per_m[m] - 1));
  }
  return out;
}

/// On-axis intensity C(0, 0, t); only m = 0 survives at r = 0.
inline double on_axis_srs(const EnsembleParams& p, const Truncation& trunc, double t,
                          double* residual = nullptr) {
  return correlation(p, trunc, 0, 0, t, 0, residual).real();
}

/// On-axis spontaneous-emission baseline (time independent).
inline double spontaneous_on_axis(const EnsembleParams& p) {
  double L = p.length();
  double a = L * L / (2 * p.sigma_perp * p.sigma_perp);
  auto f = [a](double r) {
    double r2 = r * r;
    double g = r * (-13 - 11 * r2) / ((1 + r2) * (1 + r2)) +
               19 * (0.5 * std::numbers::pi - std::atan(r));
    return std::exp(-a * r2) * g / 32;
  };
  double r_cut = std::sqrt(50.0 / a);
  double v = detail::composite(f, 0.0, r_cut, std::min(0.25, r_cut / 4), 1e-14,
                               "spontaneous baseline")
                 .real();
  return p.lambda0() * L * v;
}

/// Gamma t at which the on-axis stimulated intensity first exceeds the
/// spontaneous baseline. Searches t in (0, t_budget]. The truncation converged at
/// the upper end of the bracket is reused inside it, since every term grows with t.
inline double crossover_time(const EnsembleParams& p, const Truncation& trunc,
                             double t_budget = -1) {
  double base = spontaneous_on_axis(p);
  if (t_budget <= 0) t_budget = 200.0 / p.depth();
  Truncation used = trunc;
  auto adaptive = [&](double t) {
    return correlation(p, trunc, 0, 0, t, 0, nullptr, &used).real() - base;
  };
  double lo = 0, flo = adaptive(0);
  if (flo >= 0) throw NoCrossover("stimulated intensity already exceeds the baseline at t = 0");
  double hi = std::min(t_budget, 1.0 / p.depth());
  double fhi = adaptive(hi);
  while (fhi < 0) {
    if (hi >= t_budget)
      throw NoCrossover("no crossover before Gamma t = " + std::to_string(t_budget));
    lo = hi;
    flo = fhi;
    hi = std::min(t_budget, 2 * hi);
    fhi = adaptive(hi);
  }
  Truncation fixed = used;
  auto f = [&](double t) {
    if (t == lo) return flo;
    if (t == hi) return fhi;
    return detail::correlation_kernel(p, fixed, t, {0}, fixed.quad_nodes).value(0, 0, 0).real() -
           base;
  };
  std::uintmax_t iters = 100;
  auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(40), iters);
  return 0.5 * (a + b);
}

namespace detail {

// e^{-2 sqrt(s)} [I_0^2 - I_1^2](sqrt(s)) and e^{-2 sqrt(s)} [I_0^2 - 2 I_1^2 + I_0 I_2](sqrt(s)).
inline double scaled_rm(double s) {
  double x = std::sqrt(s), i0 = bessel_i_scaled(0, x), i1 = bessel_i_scaled(1, x);
  return i0 * i0 - i1 * i1;
}
inline double scaled_p1(double s) {
  double x = std::sqrt(s), i0 = bessel_i_scaled(0, x), i1 = bessel_i_scaled(1, x),
         i2 = bessel_i_scaled(2, x);
  return i0 * i0 - 2 * i1 * i1 + i0 * i2;
}

} // namespace detail

/// Single transverse mode power (d Gamma e^{-Gamma t}/4)(I_0^2 - I_1^2)(sqrt(d Gamma t)).
inline double rm_mode_power(double depth, double t, double gamma = 1.0) {
  if (t < 0) throw InvalidParameter("time must be non-negative");
  double s = depth * t;
  return depth * gamma / 4 * std::exp(-t + 2 * std::sqrt(s)) * detail::scaled_rm(s);
}

inline double p0_geometry_factor(double fresnel) {
  return 1.5 - 2 * std::exp(-fresnel) + 0.5 * std::exp(-2 * fresnel);
}

inline double power_P0(const EnsembleParams& p, double t) {
  return rm_mode_power(p.depth(), t, p.gamma) * p0_geometry_factor(p.fresnel());
}

/// Lowest-order finite-size power: only k, k' kept, summed over |m| <= m_max.
inline double power_P1(const EnsembleParams& p, const Truncation& trunc, double t,
                       double* residual = nullptr) {
  trunc.validate();
  if (t < 0) throw InvalidParameter("time must be non-negative");
  double F = p.fresnel(), tau = p.depth() * t / 4;
  auto eval = [&](int kmax, int nodes) {
    auto [y, wy] = gauss_legendre(nodes).mapped(0, 2 * F);
    // c_j = sum_{k+k'=j} tau^j / (k!^2 k'!^2)
    std::vector<double> cj(2 * kmax + 1, 0.0);
    for (int k = 0; k <= kmax; ++k)
      for (int kp = 0; kp <= kmax; ++kp) {
        double fk = detail::factorial(k), fkp = detail::factorial(kp);
        cj[k + kp] += std::pow(tau, k + kp) / (fk * fk * fkp * fkp);
      }
    double acc = 0;
    for (int m = -trunc.m_max; m <= trunc.m_max; ++m)
      for (std::size_t i = 0; i < y.size(); ++i)
        for (int j = 0; j <= 2 * kmax; ++j) {
          double D = 1.0 + j;
          acc += wy[i] * cj[j] * bessel_i_scaled(m, y[i] / D) / (D * D);
        }
    return detail::power_prefactor(p, t) * acc;
  };
  int kmax = trunc.k_max, nodes = trunc.quad_nodes;
  double prev = eval(kmax, nodes), diff = 0;
  for (int level = 1; level <= trunc.max_levels; ++level) {
    kmax += std::max(4, kmax / 2);
    nodes += nodes / 2;
    double now = eval(kmax, nodes);
    diff = std::abs(now - prev);
    prev = now;
    if (diff <= trunc.rel_tol * std::abs(now)) {
      if (residual) *residual = diff;
      return now;
    }
  }
  throw TruncationFailure("P1 did not converge", diff);
}

/// Small-Fresnel-number form (F d Gamma e^{-Gamma t}/4)(I_0^2 - 2 I_1^2 + I_0 I_2)(sqrt(d Gamma t)).
inline double power_P1_smallF(const EnsembleParams& p, double t) {
  if (t < 0) throw InvalidParameter("time must be non-negative");
  double s = p.depth() * t;
  return p.fresnel() * p.depth() * p.gamma / 4 * std::exp(-t + 2 * std::sqrt(s)) *
         detail::scaled_p1(s);
}

enum class PowerModel { full, p1 };

/// Photons emitted up to time t: Gauss-Legendre in time with doubling.
inline double photon_count(const EnsembleParams& p, const Truncation& trunc, double t,
                           PowerModel model = PowerModel::full) {
  if (t < 0) throw InvalidParameter("time must be non-negative");
  if (t == 0) return 0;
  auto power = [&](double s) {
    return model == PowerModel::p1 ? power_P1(p, trunc, s)
                                   : total_power_all_orders(p, trunc, s).total;
  };
  double prev = 0;
  for (int n = 8; n <= 256; n *= 2) {
    auto [ts, ws] = gauss_legendre(n).mapped(0, t);
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += ws[i] * power(ts[i]);
    if (n > 8 && std::abs(acc - prev) <= trunc.rel_tol * std::abs(acc)) return acc;
    prev = acc;
  }
  throw TruncationFailure("photon count time quadrature did not converge", 0);
}

/// Large-d asymptotic photon count: 2 N_P / F = s [I_0^2 - 2 I_1^2 + I_0 I_2] - I_0^2, s = d Gamma t.
inline double photon_count_asymptotic(const EnsembleParams& p, double t) {
  if (t < 0) throw InvalidParameter("time must be non-negative");
  double s = p.depth() * t;
  double x = std::sqrt(s), i0 = bessel_i_scaled(0, x);
  return 0.5 * p.fresnel() * std::exp(2 * x) * (s * detail::scaled_p1(s) - i0 * i0);
}

/// Gamma t at which the asymptotic photon count reaches the number of atoms.
inline double depletion_time(const EnsembleParams& p, double atoms) {
  if (!(atoms > 0)) throw InvalidParameter("atom number must be positive");
  double lo = 0, hi = 1.0 / p.depth();
  while (photon_count_asymptotic(p, hi) < atoms) {
    lo = hi;
    hi *= 2;
    if (hi > 1e6) throw NoCrossover("photon count never reaches the atom number");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (photon_count_asymptotic(p, mid) < atoms ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace srs
