#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "srs/cli.hpp"
#include "srs/validation.hpp"

using namespace srs;
using namespace srs::cli;

namespace {

struct ParamFlags {
  double fresnel = 4, depth = 160;
  double length = 0, atoms = 0;

  void add(CLI::App* app) {
    app->add_option("--fresnel,-F", fresnel, "Fresnel number")->capture_default_str();
    app->add_option("--depth,-d", depth, "optical depth")->capture_default_str();
    app->add_option("--length,-L", length, "ensemble length (default 300 unless --atoms)");
    app->add_option("--atoms,-N", atoms, "number of atoms");
  }

  EnsembleParams resolve() const {
    if (length > 0 && atoms > 0) throw CLI::ValidationError("give --length or --atoms, not both");
    if (atoms > 0) return solve_geometry(fresnel, depth, atoms);
    return geometry_from_length(fresnel, depth, length > 0 ? length : 300);
  }
};

struct TimeFlags {
  std::vector<double> times, dgt;

  void add(CLI::App* app) {
    auto a = app->add_option("--times,-t", times, "Gamma t values");
    auto b = app->add_option("--d-gamma-t", dgt, "d Gamma t values");
    a->excludes(b);
  }

  std::vector<double> resolve(const EnsembleParams& p) const {
    std::vector<double> out = times;
    for (double s : dgt) out.push_back(s / p.depth());
    if (out.empty()) throw CLI::ValidationError("a time grid is required (--times or --d-gamma-t)");
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i] < 0 || (i && out[i] <= out[i - 1]))
        throw CLI::ValidationError("time grid must be non-negative and strictly increasing");
    return out;
  }
};

void emit(const Table& t, const std::string& out) {
  if (out.empty()) write_csv(t, std::cout);
  else write_csv(t, std::filesystem::path(out));
}

int run_validate(const std::string& filter, const std::string& report) {
  auto checks = validation::run_all(filter);
  json j = json::array();
  int failed = 0;
  for (const auto& c : checks) {
    std::printf("%-4s %-42s measured %.3e %s %.1e%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured,
                c.at_least ? ">" : "<=", c.threshold, c.note.empty() ? "" : "  ", c.note.c_str());
    failed += !c.passed;
    j.push_back({{"name", c.name},
                 {"passed", c.passed},
                 {"measured", c.measured},
                 {"threshold", c.threshold},
                 {"direction", c.at_least ? "above" : "below"},
                 {"note", c.note}});
  }
  json gaps = json::array();
  if (filter.empty() || std::string("modes.appendix_a_gap").find(filter) != std::string::npos) {
    std::printf("appendix-A gap at gamma = gamma' (report only)\n");
    std::printf("  %10s %12s %14s %14s\n", "s g^2", "|lhs/rhs-1|", "printed/rhs", "exact/rhs");
    for (const auto& r : validation::appendix_a_gaps()) {
      std::printf("  %10g %12.4e %14.6f %14.6f\n", r.x, r.gap, r.printed_ratio, r.exact_ratio);
      gaps.push_back({{"sigma2_gamma2", r.x}, {"gap", r.gap}, {"printed_ratio", r.printed_ratio},
                      {"exact_ratio", r.exact_ratio}});
    }
  }
  if (checks.empty() && gaps.empty()) {
    std::fprintf(stderr, "no check matches '%s'\n", filter.c_str());
    return 2;
  }
  std::printf("%zu checks, %d failed\n", checks.size(), failed);
  if (!report.empty()) {
    json r;
    r["checks"] = j;
    r["appendix_a_gap"] = gaps;
    r["failed"] = failed;
    r["versions"] = versions();
    write_json(r, report);
  }
  return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superradiant Raman scattering laboratory: analytic mode sums and point-particle simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version));

  auto run_cmd = app.add_subcommand("run", "run a scenario file");
  std::string scenario_path, run_out;
  run_cmd->add_option("--scenario,-s", scenario_path, "scenario YAML file")->required();
  run_cmd->add_option("--out,-o", run_out, "output directory (overrides the scenario)");

  auto fig_cmd = app.add_subcommand("figures", "write figure datasets fig4..fig13");
  std::string fig_out;
  FigureOptions fig_opt;
  std::vector<std::string> only;
  fig_cmd->add_option("--out,-o", fig_out, "output directory")->required();
  fig_cmd->add_flag("--full-scale", fig_opt.full_scale, "paper-scale atom numbers and denser crossover sweep");
  fig_cmd->add_flag("--svg", fig_opt.svg, "also write a plain SVG line plot per figure");
  fig_cmd->add_option("--only", only, "subset of figures, e.g. --only fig5 fig13")->delimiter(',');

  auto val_cmd = app.add_subcommand("validate", "run the oracle and invariant checks");
  std::string filter, report;
  val_cmd->add_option("--filter", filter, "only checks whose name contains this text");
  val_cmd->add_option("--report", report, "write a JSON report to this file");

  auto pow_cmd = app.add_subcommand("power", "analytic radiated power per azimuthal order");
  ParamFlags pw_p;
  TimeFlags pw_t;
  std::vector<int> pw_modes = {0, 1, 2};
  std::string pw_out;
  bool pw_all = false;
  pw_p.add(pow_cmd);
  pw_t.add(pow_cmd);
  pow_cmd->add_option("--modes,-m", pw_modes, "azimuthal orders")->delimiter(',');
  pow_cmd->add_flag("--all-orders", pw_all, "sum over every order until converged");
  pow_cmd->add_option("--out,-o", pw_out, "CSV file (default stdout)");

  auto prof_cmd = app.add_subcommand("profile", "analytic radial power density r C_m(r, r, t)");
  ParamFlags pr_p;
  double pr_t = 0, pr_rmax = 3;
  int pr_count = 61;
  std::vector<int> pr_modes = {0, 1, 2};
  std::string pr_out;
  pr_p.add(prof_cmd);
  prof_cmd->add_option("--time,-t", pr_t, "Gamma t")->capture_default_str();
  prof_cmd->add_option("--r-max", pr_rmax, "largest r / sigma_perp")->capture_default_str();
  prof_cmd->add_option("--r-count", pr_count, "number of radial points")->capture_default_str();
  prof_cmd->add_option("--modes,-m", pr_modes, "azimuthal orders")->delimiter(',');
  prof_cmd->add_option("--out,-o", pr_out, "CSV file (default stdout)");

  auto cross_cmd = app.add_subcommand("crossover", "time where on-axis SRS overtakes spontaneous emission");
  ParamFlags cr_p;
  double cr_budget = -1;
  cr_p.add(cross_cmd);
  cross_cmd->add_option("--budget", cr_budget, "largest Gamma t searched (default 200 / d)");

  auto ps_cmd = app.add_subcommand("pointsim", "point-particle Monte Carlo of the radiated power");
  double ps_F = 4, ps_d = 90, ps_rmin = 0.5;
  int ps_N = 1500, ps_real = 8;
  std::uint64_t ps_seed = 2024;
  TimeFlags ps_t;
  bool ps_compare = false;
  std::string ps_out;
  ps_cmd->add_option("--fresnel,-F", ps_F, "Fresnel number")->capture_default_str();
  ps_cmd->add_option("--depth,-d", ps_d, "optical depth")->capture_default_str();
  ps_cmd->add_option("--atoms,-N", ps_N, "number of atoms")->capture_default_str();
  ps_cmd->add_option("--realizations,-r", ps_real, "realizations")->capture_default_str();
  ps_cmd->add_option("--seed", ps_seed, "base seed")->capture_default_str();
  ps_cmd->add_option("--r-min", ps_rmin, "minimum atom separation")->capture_default_str();
  ps_t.add(ps_cmd);
  ps_cmd->add_flag("--compare", ps_compare, "add the analytic all-order power column");
  ps_cmd->add_option("--out,-o", ps_out, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      auto s = parse_scenario(scenario_path);
      auto res = run(s, run_out.empty() ? std::filesystem::path(s.output) : std::filesystem::path(run_out));
      for (const auto& f : res.files) std::cout << f.string() << "\n";
      return 0;
    }
    if (*fig_cmd) {
      auto rep = make_figures(fig_out, fig_opt, only, &std::cerr);
      return rep.failed.empty() ? 0 : 1;
    }
    if (*val_cmd) return run_validate(filter, report);
    if (*pow_cmd) {
      auto p = pw_p.resolve();
      auto times = pw_t.resolve(p);
      if (pw_all) {
        Table t;
        t.notes = {"total power over all azimuthal orders"};
        t.columns = {"gamma_t", "d_gamma_t", "total", "residual", "m_max"};
        for (double x : times) {
          auto pt = total_power_all_orders(p, Truncation{}, x);
          t.rows.push_back({x, p.depth() * x, pt.total, pt.residual, double(pt.per_m.rbegin()->first)});
        }
        emit(t, pw_out);
      } else {
        emit(analytic_power(p, Truncation{}, times, pw_modes).table, pw_out);
      }
      return 0;
    }
    if (*prof_cmd) {
      if (pr_count < 2) throw CLI::ValidationError("--r-count must be at least 2");
      auto p = pr_p.resolve();
      std::vector<double> r;
      for (int i = 0; i < pr_count; ++i) r.push_back(pr_rmax * i / (pr_count - 1));
      emit(analytic_profile(p, Truncation{}, pr_t, r, pr_modes).table, pr_out);
      return 0;
    }
    if (*cross_cmd) {
      auto p = cr_p.resolve();
      double tc = crossover_time(p, Truncation{}, cr_budget);
      std::printf("tau_c = %.10g\ntau_c_d_gamma = %.10g\n", tc, tc * p.depth());
      return 0;
    }
    if (*ps_cmd) {
      auto p = solve_geometry(ps_F, ps_d, ps_N);
      auto times = ps_t.resolve(p);
      emit(pointsim_power(ps_F, ps_d, ps_N, ps_real, ps_seed, ps_rmin, times, ps_compare, Truncation{}).table, ps_out);
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const srs::Error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
