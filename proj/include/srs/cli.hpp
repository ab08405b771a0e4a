#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "srs/analytic.hpp"
#include "srs/params.hpp"
#include "srs/pointsim.hpp"

namespace srs::cli {

#ifndef SRS_VERSION
#define SRS_VERSION "1.0.0"
#endif

inline constexpr const char* version = SRS_VERSION;

using json = nlohmann::ordered_json;

/// Parse or validation problem in a scenario, carrying file:line:column.
class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Engine { analytic, pointsim, both };

inline std::string to_string(Engine e) {
  return e == Engine::analytic ? "analytic" : e == Engine::pointsim ? "pointsim" : "both";
}

enum class ParamForm { raw, fresnel_depth_atoms, fresnel_depth_length };

struct Scenario {
  std::string source;
  Engine engine = Engine::analytic;
  ParamForm form = ParamForm::fresnel_depth_length;
  std::map<std::string, double> given;  // parameter block as written
  EnsembleParams params;
  Truncation truncation;
  std::vector<double> times;            // Gamma t
  std::vector<double> r_grid;           // r / sigma_perp
  std::vector<int> modes = {0, 1, 2};
  int realizations = 8;
  std::uint64_t seed = 2024;
  double r_min = 0.5;
  std::string output = "out";

  int atoms() const { return static_cast<int>(std::lround(params.atoms())); }
};

namespace detail {

inline std::string where(const std::string& src, const YAML::Node& n) {
  auto m = n.Mark();
  if (m.is_null()) return src;
  return src + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

[[noreturn]] inline void fail(const std::string& src, const YAML::Node& n, const std::string& msg) {
  throw ScenarioError(where(src, n) + ": " + msg);
}

template <class T>
T scalar(const std::string& src, const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(src, n, "'" + key + "' must be a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(src, n, "'" + key + "' has an invalid value '" + n.Scalar() + "'");
  }
}

inline void only_keys(const std::string& src, const YAML::Node& map, const std::set<std::string>& keys,
                      const std::string& block) {
  if (!map.IsMap()) fail(src, map, "'" + block + "' must be a mapping");
  for (auto it = map.begin(); it != map.end(); ++it) {
    auto k = it->first.as<std::string>();
    if (!keys.count(k)) fail(src, it->first, "unknown key '" + k + "' in " + block);
  }
}

inline std::vector<double> grid(const std::string& src, const YAML::Node& n, const std::string& key) {
  std::vector<double> v;
  if (n.IsSequence()) {
    for (const auto& e : n) v.push_back(scalar<double>(src, e, key));
  } else if (n.IsMap()) {
    only_keys(src, n, {"start", "stop", "count"}, key);
    for (const char* k : {"start", "stop", "count"})
      if (!n[k]) fail(src, n, "'" + key + "' range needs start, stop and count");
    double a = scalar<double>(src, n["start"], "start"), b = scalar<double>(src, n["stop"], "stop");
    int c = scalar<int>(src, n["count"], "count");
    if (c < 1) fail(src, n["count"], "'count' must be at least 1");
    for (int i = 0; i < c; ++i) v.push_back(c == 1 ? a : a + (b - a) * i / (c - 1));
  } else {
    fail(src, n, "'" + key + "' must be a list or a {start, stop, count} range");
  }
  if (v.empty()) fail(src, n, "'" + key + "' must not be empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0) fail(src, n, "'" + key + "' values must be finite and >= 0");
    if (i && v[i] <= v[i - 1]) fail(src, n, "'" + key + "' must be strictly increasing");
  }
  return v;
}

} // namespace detail

/// Parse a scenario from YAML text. `source` names the file in diagnostics.
inline Scenario parse_scenario_text(const std::string& text, const std::string& source = "<scenario>") {
  using namespace detail;
  const std::string& src = source;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(src + ":" + std::to_string(e.mark.line + 1) + ":" +
                        std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ScenarioError(src + ": scenario must be a mapping");
  only_keys(src, root,
            {"engine", "parameters", "truncation", "times", "d_gamma_t", "r_grid", "modes", "pointsim",
             "output"},
            "scenario");
  Scenario s;
  s.source = source;

  if (!root["engine"]) fail(src, root, "missing required key 'engine'");
  auto eng = scalar<std::string>(src, root["engine"], "engine");
  if (eng == "analytic") s.engine = Engine::analytic;
  else if (eng == "pointsim") s.engine = Engine::pointsim;
  else if (eng == "both") s.engine = Engine::both;
  else fail(src, root["engine"], "engine must be analytic, pointsim or both, got '" + eng + "'");

  auto pb = root["parameters"];
  if (!pb) fail(src, root, "missing required key 'parameters'");
  only_keys(src, pb, {"sigma_perp", "sigma_par", "rho0", "fresnel", "depth", "atoms", "length"}, "parameters");
  for (auto it = pb.begin(); it != pb.end(); ++it)
    s.given[it->first.as<std::string>()] = scalar<double>(src, it->second, it->first.as<std::string>());
  auto has = [&](const char* k) { return s.given.count(k) > 0; };
  bool raw = has("sigma_perp") || has("sigma_par") || has("rho0");
  int forms = (raw ? 1 : 0) + (has("atoms") ? 1 : 0) + (has("length") ? 1 : 0);
  if (forms != 1)
    fail(src, pb, "give exactly one parameter form: {sigma_perp, sigma_par, rho0}, {fresnel, depth, atoms} "
                  "or {fresnel, depth, length}");
  try {
    if (raw) {
      if (!has("sigma_perp") || !has("sigma_par") || !has("rho0") || has("fresnel") || has("depth"))
        fail(src, pb, "raw form needs exactly sigma_perp, sigma_par and rho0");
      s.form = ParamForm::raw;
      s.params = make_params(s.given["sigma_perp"], s.given["sigma_par"], s.given["rho0"]);
    } else {
      if (!has("fresnel") || !has("depth")) fail(src, pb, "parameter form needs fresnel and depth");
      if (has("atoms")) {
        s.form = ParamForm::fresnel_depth_atoms;
        s.params = solve_geometry(s.given["fresnel"], s.given["depth"], s.given["atoms"]);
      } else {
        s.form = ParamForm::fresnel_depth_length;
        s.params = geometry_from_length(s.given["fresnel"], s.given["depth"], s.given["length"]);
      }
    }
  } catch (const InvalidParameter& e) {
    fail(src, pb, e.what());
  }

  if (auto tb = root["truncation"]) {
    only_keys(src, tb, {"m_max", "l_max", "q_max", "k_max", "quad_nodes", "rel_tol", "max_levels"}, "truncation");
    auto& t = s.truncation;
    if (tb["m_max"]) t.m_max = scalar<int>(src, tb["m_max"], "m_max");
    if (tb["l_max"]) t.l_max = scalar<int>(src, tb["l_max"], "l_max");
    if (tb["q_max"]) t.q_max = scalar<int>(src, tb["q_max"], "q_max");
    if (tb["k_max"]) t.k_max = scalar<int>(src, tb["k_max"], "k_max");
    if (tb["quad_nodes"]) t.quad_nodes = scalar<int>(src, tb["quad_nodes"], "quad_nodes");
    if (tb["rel_tol"]) t.rel_tol = scalar<double>(src, tb["rel_tol"], "rel_tol");
    if (tb["max_levels"]) t.max_levels = scalar<int>(src, tb["max_levels"], "max_levels");
    try {
      t.validate();
    } catch (const InvalidParameter& e) {
      fail(src, tb, e.what());
    }
  }

  if (root["times"] && root["d_gamma_t"]) fail(src, root["d_gamma_t"], "give either 'times' or 'd_gamma_t', not both");
  if (root["times"]) {
    s.times = grid(src, root["times"], "times");
  } else if (root["d_gamma_t"]) {
    for (double v : grid(src, root["d_gamma_t"], "d_gamma_t")) s.times.push_back(v / s.params.depth());
  } else {
    fail(src, root, "missing time grid: give 'times' (Gamma t) or 'd_gamma_t'");
  }

  if (root["r_grid"]) s.r_grid = grid(src, root["r_grid"], "r_grid");

  if (auto mb = root["modes"]) {
    if (!mb.IsSequence() || mb.size() == 0) fail(src, mb, "'modes' must be a non-empty list");
    s.modes.clear();
    for (const auto& e : mb) s.modes.push_back(scalar<int>(src, e, "modes"));
    for (std::size_t i = 1; i < s.modes.size(); ++i)
      if (s.modes[i] <= s.modes[i - 1]) fail(src, mb, "'modes' must be strictly increasing");
  }

  if (auto ps = root["pointsim"]) {
    only_keys(src, ps, {"realizations", "seed", "r_min"}, "pointsim");
    if (ps["realizations"]) s.realizations = scalar<int>(src, ps["realizations"], "realizations");
    if (ps["seed"]) s.seed = scalar<std::uint64_t>(src, ps["seed"], "seed");
    if (ps["r_min"]) s.r_min = scalar<double>(src, ps["r_min"], "r_min");
    if (s.realizations < 2) fail(src, ps["realizations"], "need at least 2 realizations");
    if (s.r_min < 0) fail(src, ps["r_min"], "r_min must be >= 0");
  }
  if (s.engine != Engine::analytic && s.atoms() < 1) fail(src, pb, "parameters give fewer than one atom");

  if (root["output"]) s.output = scalar<std::string>(src, root["output"], "output");
  return s;
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path);
}

// Tables ---------------------------------------------------------------

/// A CSV dataset: '#' comment lines, a header row and numeric rows.
struct Table {
  std::vector<std::string> notes;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const Table& t, std::ostream& out) {
  for (const auto& n : t.notes) out << "# " << n << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
    out << '\n';
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline void write_csv(const Table& t, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_csv(t, ss);
  write_file(path, ss.str());
}

inline void write_json(const json& j, const std::filesystem::path& path) { write_file(path, j.dump(2) + "\n"); }

/// Bare polyline plot of every column against the first.
inline std::string render_svg(const Table& t, const std::string& title) {
  const double W = 640, H = 400, pad = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& r : t.rows) {
    x0 = std::min(x0, r[0]);
    x1 = std::max(x1, r[0]);
    for (std::size_t c = 1; c < r.size(); ++c)
      if (std::isfinite(r[c])) y0 = std::min(y0, r[c]), y1 = std::max(y1, r[c]);
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect x=\"" << pad << "\" y=\"" << pad / 2 << "\" width=\"" << W - 1.5 * pad << "\" height=\""
    << H - 1.5 * pad << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << pad << "\" y=\"" << pad / 2 - 6 << "\" font-size=\"12\">" << title << "</text>\n";
  auto X = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 1.5 * pad); };
  auto Y = [&](double y) { return H - pad + (y0 - y) / (y1 - y0) * (H - 1.5 * pad); };
  for (std::size_t c = 1; c < t.columns.size(); ++c) {
    s << "<polyline fill=\"none\" stroke=\"" << colors[(c - 1) % 7] << "\" points=\"";
    for (const auto& r : t.rows)
      if (std::isfinite(r[c])) s << X(r[0]) << "," << Y(r[c]) << " ";
    s << "\"/>\n";
    s << "<text x=\"" << W - pad / 2 - 40 << "\" y=\"" << pad / 2 + 14 * c << "\" font-size=\"11\" fill=\""
      << colors[(c - 1) % 7] << "\">" << t.columns[c] << "</text>\n";
  }
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" font-size=\"11\">" << t.columns[0] << "</text>\n";
  s << "<text x=\"4\" y=\"" << H - pad << "\" font-size=\"10\">" << format_number(y0).substr(0, 8) << "</text>\n";
  s << "<text x=\"4\" y=\"" << pad / 2 + 10 << "\" font-size=\"10\">" << format_number(y1).substr(0, 8)
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

// Metadata -------------------------------------------------------------

inline json versions() {
  json v;
  v["srs"] = version;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  v["boost"] = std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
               std::to_string(BOOST_VERSION % 100);
  return v;
}

inline json to_json(const EnsembleParams& p) {
  json j;
  j["sigma_perp"] = p.sigma_perp;
  j["sigma_par"] = p.sigma_par;
  j["rho0"] = p.rho0;
  j["gamma"] = p.gamma;
  j["length"] = p.length();
  j["fresnel"] = p.fresnel();
  j["depth"] = p.depth();
  j["atoms"] = p.atoms();
  return j;
}

inline json to_json(const Truncation& t) {
  json j;
  j["m_max"] = t.m_max;
  j["l_max"] = t.l_max;
  j["q_max"] = t.q_max;
  j["k_max"] = t.k_max;
  j["quad_nodes"] = t.quad_nodes;
  j["rel_tol"] = t.rel_tol;
  j["max_levels"] = t.max_levels;
  return j;
}

/// Column label for azimuthal order m: m0, m1, m_1 for -1.
inline std::string mode_label(int m) { return m < 0 ? "m_" + std::to_string(-m) : "m" + std::to_string(m); }

inline std::string time_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

// Engines ---------------------------------------------------------------

struct PowerTable {
  Table table;
  json meta;
};

inline PowerTable analytic_power(const EnsembleParams& p, const Truncation& tr, const std::vector<double>& times,
                                 const std::vector<int>& modes) {
  PowerTable out;
  out.table.notes = {"radiated power per azimuthal order, in photons per unit Gamma t",
                     "gamma_t: Gamma t; d_gamma_t: d Gamma t; total: sum over listed orders; residual: "
                     "change between the last two truncation levels"};
  out.table.columns = {"gamma_t", "d_gamma_t"};
  for (int m : modes) out.table.columns.push_back(mode_label(m));
  out.table.columns.push_back("total");
  out.table.columns.push_back("residual");
  json used = json::array();
  for (double t : times) {
    auto pt = total_power(p, tr, t, modes);
    std::vector<double> row = {t, p.depth() * t};
    for (int m : modes) row.push_back(pt.per_m[m]);
    row.push_back(pt.total);
    row.push_back(pt.residual);
    out.table.rows.push_back(row);
    json u = to_json(pt.used);
    u["gamma_t"] = t;
    u["residual"] = pt.residual;
    u["imag"] = pt.imag;
    used.push_back(u);
  }
  out.meta["truncation_used"] = used;
  return out;
}

inline PowerTable analytic_profile(const EnsembleParams& p, const Truncation& tr, double t,
                                   const std::vector<double>& r_over_sigma, const std::vector<int>& modes) {
  std::vector<double> r;
  for (double x : r_over_sigma) r.push_back(x * p.sigma_perp);
  auto prof = radial_profile(p, tr, t, modes, r);
  PowerTable out;
  out.table.notes = {"radial power density r C_m(r, r, t) at Gamma t = " + time_label(t),
                     "r_over_sigma: r / sigma_perp; one column per azimuthal order"};
  out.table.columns = {"r_over_sigma"};
  for (int m : modes) out.table.columns.push_back(mode_label(m));
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::vector<double> row = {r_over_sigma[i]};
    for (const auto& pr : prof) row.push_back(pr.power_density[i]);
    out.table.rows.push_back(row);
  }
  double res = 0;
  for (const auto& pr : prof) res = std::max(res, pr.residual);
  out.meta["gamma_t"] = t;
  out.meta["residual"] = res;
  return out;
}

struct PointTable {
  Table table;
  Table runs;
  json meta;
};

inline PointTable pointsim_power(double fresnel, double depth, int atoms, int realizations, std::uint64_t seed,
                                 double r_min, const std::vector<double>& times, bool with_analytic,
                                 const Truncation& tr) {
  MonteCarloOptions opt;
  opt.r_min = r_min;
  auto mc = monte_carlo(fresnel, depth, atoms, realizations, seed, times, opt);
  PointTable out;
  out.table.notes = {"point-particle power P_N: mean and standard error over realizations",
                     "N = " + std::to_string(atoms) + ", realizations = " + std::to_string(realizations)};
  out.table.columns = {"gamma_t", "d_gamma_t", "mean", "stderr"};
  if (with_analytic) {
    out.table.columns.push_back("analytic");
    out.table.notes.push_back("analytic: total power summed over all azimuthal orders");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row = {times[k], mc.params.depth() * times[k], mc.mean[k], mc.stderr_[k]};
    if (with_analytic) row.push_back(total_power_all_orders(mc.params, tr, times[k]).total);
    out.table.rows.push_back(row);
  }
  out.runs.notes = {"per-realization P_N curves; column r<i> is realization i, seeds in the sidecar",
                    "failed realizations are NaN"};
  out.runs.columns = {"gamma_t"};
  for (int i = 0; i < realizations; ++i) out.runs.columns.push_back("r" + std::to_string(i));
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row = {times[k]};
    for (const auto& r : mc.runs) row.push_back(r.failed ? std::nan("") : r.power[k]);
    out.runs.rows.push_back(row);
  }
  json runs = json::array();
  for (const auto& r : mc.runs) {
    json j;
    j["seed"] = r.seed;
    j["resampled"] = r.resampled;
    j["method"] = r.method == EvolutionMethod::eigen ? "eigen" : "scaling_squaring";
    j["certified_error"] = r.certified_error;
    j["failed"] = r.failed;
    if (r.failed) j["error"] = r.error;
    runs.push_back(j);
  }
  out.meta["params"] = to_json(mc.params);
  out.meta["atoms"] = atoms;
  out.meta["base_seed"] = seed;
  out.meta["r_min"] = r_min;
  out.meta["succeeded"] = mc.succeeded;
  out.meta["realizations"] = runs;
  return out;
}

// Scenario execution ----------------------------------------------------

struct RunResult {
  std::vector<std::filesystem::path> files;
};

/// Runs a scenario and writes its CSVs plus `scenario.json` into `out_dir`.
inline RunResult run(const Scenario& s, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunResult res;
  json meta;
  meta["scenario"] = s.source;
  meta["engine"] = to_string(s.engine);
  json given;
  for (auto& [k, v] : s.given) given[k] = v;
  meta["parameters_given"] = given;
  meta["parameters"] = to_json(s.params);
  meta["regime_warnings"] = s.params.regime_warnings();
  meta["truncation"] = to_json(s.truncation);
  meta["times"] = s.times;
  meta["r_grid"] = s.r_grid;
  meta["modes"] = s.modes;
  meta["versions"] = versions();
  json outputs = json::object();

  if (s.engine == Engine::analytic) {
    auto pw = analytic_power(s.params, s.truncation, s.times, s.modes);
    write_csv(pw.table, out_dir / "power.csv");
    res.files.push_back(out_dir / "power.csv");
    outputs["power.csv"] = pw.meta;
    if (!s.r_grid.empty()) {
      for (double t : s.times) {
        auto pr = analytic_profile(s.params, s.truncation, t, s.r_grid, s.modes);
        auto name = "profile_t" + time_label(t) + ".csv";
        write_csv(pr.table, out_dir / name);
        res.files.push_back(out_dir / name);
        outputs[name] = pr.meta;
      }
    }
  } else {
    auto ps = pointsim_power(s.params.fresnel(), s.params.depth(), s.atoms(), s.realizations, s.seed, s.r_min,
                             s.times, s.engine == Engine::both, s.truncation);
    write_csv(ps.table, out_dir / "pointsim.csv");
    write_csv(ps.runs, out_dir / "realizations.csv");
    res.files.push_back(out_dir / "pointsim.csv");
    res.files.push_back(out_dir / "realizations.csv");
    outputs["pointsim.csv"] = ps.meta;
  }
  meta["outputs"] = outputs;
  write_json(meta, out_dir / "scenario.json");
  res.files.push_back(out_dir / "scenario.json");
  return res;
}

// Figures ---------------------------------------------------------------

struct FigureOptions {
  bool full_scale = false;
  bool svg = false;
};

struct Figure {
  Table table;
  json meta;
};

namespace figures {

inline std::vector<double> range(double a, double b, double step) {
  std::vector<double> v;
  int n = static_cast<int>(std::lround((b - a) / step));
  for (int i = 0; i <= n; ++i) v.push_back(a + i * step);
  return v;
}

/// tau_c d Gamma against F at fixed length.
inline Figure fig4(const FigureOptions& o) {
  const double L = 300, d = 2000;
  std::vector<double> fs = o.full_scale ? std::vector<double>{1, 1.5, 2, 3, 4, 6, 8} : std::vector<double>{1, 2, 4, 8};
  Figure f;
  f.table.notes = {"crossover time from spontaneous emission to SRS on the axis, L = 300, d = 2000",
                   "tau_c_d_gamma: tau_c d Gamma"};
  f.table.columns = {"fresnel", "tau_c_d_gamma"};
  for (double F : fs) {
    auto p = geometry_from_length(F, d, L);
    f.table.rows.push_back({F, crossover_time(p, Truncation{}) * d});
  }
  f.meta["length"] = L;
  f.meta["depth"] = d;
  return f;
}

/// Radial power density for m = 0, 1, 2 at d = 160.
inline Figure profile_figure(double F, double t) {
  const double d = 160, L = 300;
  auto p = geometry_from_length(F, d, L);
  auto pr = analytic_profile(p, Truncation{}, t, range(0, 3, 0.05), {0, 1, 2});
  Figure f;
  f.table = pr.table;
  f.table.notes.insert(f.table.notes.begin(), "F = " + time_label(F) + ", d = 160, L = 300");
  auto pw = total_power(p, Truncation{}, t, {0, 1, 2});
  f.meta = pr.meta;
  f.meta["fresnel"] = F;
  f.meta["depth"] = d;
  f.meta["length"] = L;
  f.meta["power"] = {{"m0", pw.per_m[0]}, {"m1", pw.per_m[1]}, {"m2", pw.per_m[2]}};
  f.meta["ratio_m1_m0"] = pw.per_m[1] / pw.per_m[0];
  f.meta["ratio_m2_m0"] = pw.per_m[2] / pw.per_m[0];
  return f;
}

/// P_m / (d Gamma) with e^{-Gamma t} removed.
inline double scaled(const EnsembleParams& p, double t, double v) { return v * std::exp(t) / p.depth(); }

inline Figure fig9(const FigureOptions&) {
  auto p = geometry_from_length(4, 160, 300);
  Figure f;
  f.table.notes = {"per-order power at F = 4, d = 160, scaled as P_m e^{Gamma t} / d",
                   "m1 and m2 are single orders (+1 and +2); -m gives the same value"};
  f.table.columns = {"d_gamma_t", "m0", "m1", "m2"};
  for (double s : range(0, 30, 1.5)) {
    double t = s / p.depth();
    auto pt = total_power(p, Truncation{}, t, {0, 1, 2});
    f.table.rows.push_back({s, scaled(p, t, pt.per_m[0]), scaled(p, t, pt.per_m[1]), scaled(p, t, pt.per_m[2])});
  }
  f.meta["fresnel"] = 4;
  f.meta["depth"] = 160;
  return f;
}

inline Figure fig10(const FigureOptions&) {
  Figure f;
  f.table.notes = {"m = 0 power for F = 1..4 at d = 160, scaled as P_0 e^{Gamma t} / d"};
  f.table.columns = {"d_gamma_t", "F1", "F2", "F3", "F4"};
  for (double s : range(0, 30, 1.5)) {
    std::vector<double> row = {s};
    for (double F : {1.0, 2.0, 3.0, 4.0}) {
      auto p = geometry_from_length(F, 160, 300);
      double t = s / p.depth();
      row.push_back(scaled(p, t, total_power(p, Truncation{}, t, {0}).per_m[0]));
    }
    f.table.rows.push_back(row);
  }
  f.meta["depth"] = 160;
  return f;
}

inline Figure fig11(const FigureOptions&) {
  auto p = geometry_from_length(1, 160, 300);
  Truncation wide;
  wide.m_max = 12;
  Figure f;
  f.table.notes = {"F = 1, d = 160: full power P, zeroth-order P1 and geometry-free P0, scaled as P e^{Gamma t} / d"};
  f.table.columns = {"d_gamma_t", "P", "P1", "P0"};
  for (double s : range(0, 30, 1.5)) {
    double t = s / p.depth();
    f.table.rows.push_back({s, scaled(p, t, total_power_all_orders(p, Truncation{}, t).total),
                            scaled(p, t, power_P1(p, wide, t)), scaled(p, t, power_P0(p, t))});
  }
  f.meta["fresnel"] = 1;
  f.meta["depth"] = 160;
  return f;
}

/// Point-particle power against the analytic total at F = 4, d = 90.
inline Figure fig12(const FigureOptions& o) {
  std::vector<int> ns = o.full_scale ? std::vector<int>{3000, 4000, 5000, 6000} : std::vector<int>{1500};
  auto times = range(0, 0.7, 0.05);
  Figure f;
  f.table.notes = {"point-particle power P_N (mean, stderr over 8 realizations) and analytic P, F = 4, d = 90",
                   "P in photons per unit Gamma t; N is reduced from the paper's 3000-6000 unless --full-scale"};
  f.table.columns = {"gamma_t", "d_gamma_t"};
  for (int n : ns) {
    f.table.columns.push_back("mean_N" + std::to_string(n));
    f.table.columns.push_back("stderr_N" + std::to_string(n));
  }
  f.table.columns.push_back("analytic");
  std::vector<PointTable> runs;
  for (int n : ns) runs.push_back(pointsim_power(4, 90, n, 8, 2024, 0.5, times, false, Truncation{}));
  auto p = solve_geometry(4, 90, ns.front());
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row = {times[k], 90 * times[k]};
    for (const auto& r : runs) {
      row.push_back(r.table.rows[k][2]);
      row.push_back(r.table.rows[k][3]);
    }
    row.push_back(total_power_all_orders(p, Truncation{}, times[k]).total);
    f.table.rows.push_back(row);
  }
  json pm = json::array();
  for (const auto& r : runs) pm.push_back(r.meta);
  f.meta["pointsim"] = pm;
  return f;
}

inline Figure fig13(const FigureOptions&) {
  auto p = geometry_from_length(4, 90, 300);
  Figure f;
  f.table.notes = {"asymptotic photon count 2 N_p / F against d Gamma t (independent of F and d)"};
  f.table.columns = {"d_gamma_t", "two_np_over_f"};
  for (double s : range(0, 60, 1)) f.table.rows.push_back({s, 2 * photon_count_asymptotic(p, s / p.depth()) / 4});
  return f;
}

} // namespace figures

using FigureFn = std::function<Figure(const FigureOptions&)>;

inline std::vector<std::pair<std::string, FigureFn>> figure_list() {
  using namespace figures;
  return {
      {"fig4", fig4},
      {"fig5", [](const FigureOptions&) { return profile_figure(4, 0); }},
      {"fig6", [](const FigureOptions&) { return profile_figure(8, 0); }},
      {"fig7", [](const FigureOptions&) { return profile_figure(4, 0.25); }},
      {"fig8", [](const FigureOptions&) { return profile_figure(8, 0.25); }},
      {"fig9", fig9},
      {"fig10", fig10},
      {"fig11", fig11},
      {"fig12", fig12},
      {"fig13", fig13},
  };
}

struct FigureReport {
  std::vector<std::string> written;
  std::map<std::string, std::string> failed;
};

/// Writes figN.csv and figN.json for every selected figure; a failing figure
/// is reported and the rest are still produced.
inline FigureReport make_figures(const std::filesystem::path& out_dir, const FigureOptions& o,
                                 const std::vector<std::string>& only = {}, std::ostream* log = nullptr) {
  std::filesystem::create_directories(out_dir);
  FigureReport rep;
  for (const auto& name : only) {
    bool known = false;
    for (auto& [n, fn] : figure_list()) known |= n == name;
    if (!known) throw ScenarioError("unknown figure '" + name + "'");
  }
  for (auto& [name, fn] : figure_list()) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    try {
      auto fig = fn(o);
      write_csv(fig.table, out_dir / (name + ".csv"));
      fig.meta["figure"] = name;
      fig.meta["full_scale"] = o.full_scale;
      fig.meta["versions"] = versions();
      write_json(fig.meta, out_dir / (name + ".json"));
      if (o.svg) write_file(out_dir / (name + ".svg"), render_svg(fig.table, name));
      rep.written.push_back(name);
      if (log) *log << name << ": ok\n";
    } catch (const std::exception& e) {
      rep.failed[name] = e.what();
      if (log) *log << name << ": FAILED: " << e.what() << "\n";
    }
  }
  return rep;
}

} // namespace srs::cli
