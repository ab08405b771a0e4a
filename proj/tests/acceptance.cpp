// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "srs/analytic.hpp"
#include "srs/cli.hpp"
#include "srs/pointsim.hpp"
#include "srs/validation.hpp"

using namespace srs;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome from_checks(const std::vector<validation::Check>& cs) {
  Outcome o{true, ""};
  for (const auto& c : cs) {
    o.passed &= c.passed;
    o.detail += fmt("%s%s=%.2e(%s%.0e)", o.detail.empty() ? "" : " ", c.name.c_str(), c.measured,
                    c.at_least ? ">" : "<=", c.threshold);
  }
  return o;
}

std::map<int, double> ratios(double F, double t) {
  auto p = geometry_from_length(F, 160, 300);
  auto pt = total_power(p, Truncation{}, t, {0, 1, 2});
  return {{1, pt.per_m[1] / pt.per_m[0]}, {2, pt.per_m[2] / pt.per_m[0]}};
}

Outcome mode_ratios(double t, double want[2][2], double tol1, double tol2) {
  Outcome o{true, ""};
  double Fs[2] = {4, 8};
  for (int i = 0; i < 2; ++i) {
    auto r = ratios(Fs[i], t);
    bool a = std::abs(r[1] - want[i][0]) <= tol1, b = std::abs(r[2] - want[i][1]) <= tol2;
    o.passed &= a && b;
    o.detail += fmt("%sF=%g: m1/m0=%.4f (want %.3f+-%.3f)%s m2/m0=%.4f (want %.3f+-%.3f)%s", i ? "; " : "", Fs[i],
                    r[1], want[i][0], tol1, a ? "" : " X", r[2], want[i][1], tol2, b ? "" : " X");
  }
  return o;
}

Outcome c1() {
  double want[2][2] = {{0.62, 0.35}, {0.72, 0.49}};
  return mode_ratios(0, want, 0.05, 0.05);
}

Outcome c2() {
  double want[2][2] = {{0.23, 0.048}, {0.38, 0.12}};
  return mode_ratios(0.25, want, 0.05, 0.02);
}

Outcome c3() {
  double tc = depletion_time(solve_geometry(4, 90, 6000), 6000);
  return {std::abs(tc - 0.54) <= 0.05, fmt("Gamma t_c=%.4f (want 0.54+-0.05)", tc)};
}

Outcome c4() {
  std::vector<double> v;
  std::string d = "m=0:";
  std::string all = " all orders:";
  for (double F : {1.0, 2.0, 3.0, 4.0}) {
    auto p = geometry_from_length(F, 160, 300);
    double t = 30 / p.depth();
    v.push_back(total_power(p, Truncation{}, t, {0}).total / F);
    d += fmt(" %.5g", v.back());
    all += fmt(" %.5g", total_power_all_orders(p, Truncation{}, t).total / F);
  }
  double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
  return {hi / lo - 1 <= 0.10, "P/F for F=1..4 " + d + all + fmt("; m=0 spread=%.3f (want <=0.10)", hi / lo - 1)};
}

Outcome c5() {
  std::vector<double> v;
  std::string d;
  for (double F : {1.0, 2.0, 4.0, 8.0}) {
    auto p = geometry_from_length(F, 2000, 300);
    v.push_back(crossover_time(p, Truncation{}) * 2000);
    d += fmt("tau_c*d(F=%g)=%.4f ", F, v.back());
  }
  double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
  double at4000 = crossover_time(geometry_from_length(4, 4000, 300), Truncation{}) * 4000;
  double rel = std::abs(at4000 / v[2] - 1);
  bool a = hi / lo < 2, b = rel <= 1e-3;
  return {a && b, d + fmt("max/min=%.3f (want <2)%s; F=4 d 2000->4000 rel=%.2e (want <=1e-3)%s", hi / lo,
                          a ? "" : " X", rel, b ? "" : " X")};
}

Outcome c6() {
  std::vector<double> ts = {0.45, 0.5, 0.55, 0.6, 0.65, 0.7};
  auto mc = monte_carlo(4, 90, 1500, 8, 2024, ts);
  Outcome o{true, fmt("N=1500, %d/8 realizations:", mc.succeeded)};
  for (std::size_t k = 0; k < ts.size(); ++k) {
    double a = total_power_all_orders(mc.params, Truncation{}, ts[k]).total;
    double band = std::max(2 * mc.stderr_[k], 0.25 * mc.mean[k]);
    bool ok = std::abs(a - mc.mean[k]) <= band;
    o.passed &= ok;
    o.detail += fmt(" t=%.2f P/P_N=%.3f%s", ts[k], a / mc.mean[k], ok ? "" : " X");
  }
  return o;
}

Outcome c7() { return from_checks({validation::contraction(0), validation::contraction(0.25)}); }

Outcome c8() { return from_checks({validation::p0_identity(), validation::p1_small_fresnel()}); }

Outcome c9() {
  return from_checks({validation::initial_power(), validation::conservation(), validation::ode_oracle()});
}

Outcome c10() { return from_checks(validation::propagator()); }

Outcome c11() {
  std::vector<validation::Check> cs = {validation::gauss_bessel_sweep()};
  for (auto& c : validation::lambda_product()) cs.push_back(c);
  cs.push_back(validation::sommerfeld());
  for (auto& c : validation::radial_orthogonality()) cs.push_back(c);
  return from_checks(cs);
}

Outcome c12() {
  std::vector<double> ts = {0.5};
  auto a = monte_carlo(4, 90, 1000, 8, 2024, ts);
  auto b = monte_carlo(4, 90, 2000, 8, 4048, ts);
  double se = std::hypot(a.stderr_[0], b.stderr_[0]);
  double diff = std::abs(a.mean[0] - b.mean[0]);
  return {diff <= 2 * se, fmt("P_N(0.5): N=1000 %.5g+-%.3g, N=2000 %.5g+-%.3g, |diff|/se=%.2f (want <=2)",
                              a.mean[0], a.stderr_[0], b.mean[0], b.stderr_[0], diff / se)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c13() {
  auto base = std::filesystem::temp_directory_path() / ("srs_acceptance_" + std::to_string(::getpid()));
  std::vector<cli::Scenario> scenarios = {
      cli::parse_scenario(std::string(SRS_SCENARIO_DIR) + "/pointsim_small.yaml"),
      cli::parse_scenario_text("engine: analytic\nparameters: {fresnel: 4, depth: 160, length: 300}\n"
                               "times: [0, 0.05]\nr_grid: [0, 0.5, 1, 2]\n",
                               "inline-analytic")};
  Outcome o{true, ""};
  int files = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    auto r1 = cli::run(scenarios[i], base / std::to_string(i) / "a");
    auto r2 = cli::run(scenarios[i], base / std::to_string(i) / "b");
    for (std::size_t k = 0; k < r1.files.size(); ++k) {
      bool same = slurp(r1.files[k]) == slurp(r2.files[k]);
      o.passed &= same;
      ++files;
      if (!same) o.detail += r1.files[k].filename().string() + " differs; ";
    }
  }
  std::filesystem::remove_all(base);
  o.detail += fmt("%d output files compared byte for byte", files);
  return o;
}

} // namespace

int main() {
  std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"mode-power ratios at t=0, d=160", c1},
      {"mode-power ratios at Gamma t=0.25, d=160", c2},
      {"depletion time F=4 d=90 N=6000", c3},
      {"F-linearity of P/F at d Gamma t=30", c4},
      {"crossover F-dependence and d-invariance", c5},
      {"analytic vs point-particle, N=1500", c6},
      {"radial-contraction oracle", c7},
      {"closed-form P0 identity and small-F P1", c8},
      {"point-particle exactness", c9},
      {"propagator oracle", c10},
      {"appendix suite", c11},
      {"Monte Carlo convergence in N", c12},
      {"determinism", c13},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s [%.0fs] %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.passed;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
