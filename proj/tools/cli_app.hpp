#pragma once

// nhproj command line: simulate | check | poisson.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nhproj/nhproj.hpp"

namespace nhproj::cli {

enum ExitCode : int {
  kOk = 0,
  kInvariantFailure = 1,
  kConfigError = 2,
  kIntegrationFailure = 3,
  kDegenerateGeometry = 4,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string scenario;
  std::vector<std::string> params;
  std::string init;
  double t_end = std::numeric_limits<double>::quiet_NaN();
  double h = std::numeric_limits<double>::quiet_NaN();
  std::string out;
  std::string format = "csv";
  bool project_init = false;
  unsigned seed = 1;
};

using ParamMap = std::map<std::string, double>;

inline double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) throw ConfigError("cannot parse " + what + " '" + text + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline ParamMap parse_params(const std::vector<std::string>& raw) {
  ParamMap out;
  for (const auto& item : raw) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects k=v, got '" + item + "'");
    const auto key = trim(item.substr(0, eq));
    out[key] = parse_number(trim(item.substr(eq + 1)), "param " + key);
  }
  return out;
}

/// "a=1,b=(1,2,3)" -> {a: "1", b: "(1,2,3)"}; commas inside parentheses are kept.
inline std::map<std::string, std::string> split_assignments(const std::string& text) {
  std::map<std::string, std::string> out;
  std::vector<std::string> parts;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth < 0) throw ConfigError("unbalanced parentheses in --init");
    if (c == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (depth != 0) throw ConfigError("unbalanced parentheses in --init");
  if (!trim(cur).empty() || !parts.empty()) parts.push_back(cur);
  for (const auto& p : parts) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ConfigError("--init expects key=value, got '" + trim(p) + "'");
    const auto key = trim(p.substr(0, eq));
    if (out.count(key)) throw ConfigError("--init repeats key '" + key + "'");
    out[key] = trim(p.substr(eq + 1));
  }
  return out;
}

inline Vector parse_tuple(const std::string& text, const std::string& what) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')') {
    throw ConfigError(what + " must look like (a,b,...)");
  }
  std::vector<double> vals;
  std::stringstream ss(text.substr(1, text.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(parse_number(trim(item), what));
  Vector v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
  return v;
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

inline std::string short_fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.0e", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Scenarios

struct Built {
  LagrangianSystem sys;
  std::optional<scenarios::SleighParams> sleigh;
};

inline double require(const ParamMap& p, const std::string& key, const std::string& scenario) {
  const auto it = p.find(key);
  if (it == p.end()) throw ConfigError("scenario '" + scenario + "' requires --param " + key + "=...");
  return it->second;
}

inline void reject_unknown(const ParamMap& p, const std::vector<std::string>& allowed, const std::string& scenario) {
  for (const auto& [k, v] : p) {
    if (k == "samples") continue;
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError("scenario '" + scenario + "' has no parameter '" + k + "'");
    }
  }
}

inline std::size_t count_param(const ParamMap& p, const std::string& key, double fallback, double lo) {
  const auto it = p.find(key);
  const double v = it == p.end() ? fallback : it->second;
  if (v != std::floor(v) || v < lo) throw ConfigError("parameter " + key + " must be an integer >= " + fmt(lo));
  return static_cast<std::size_t>(v);
}

/// Inline system: n, diagonal metric g_i, constant rows A_a_i, constant offsets B_a.
inline LagrangianSystem inline_system(const ParamMap& p) {
  const std::size_t n = count_param(p, "n", std::nan(""), 1);
  const auto nn = static_cast<Eigen::Index>(n);
  Vector diag = Vector::Ones(nn);
  std::map<std::pair<std::size_t, std::size_t>, double> a_entries;
  std::map<std::size_t, double> b_entries;
  std::size_t m = 0;
  auto index = [](const std::string& s, const std::string& key) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("bad index in parameter '" + key + "'");
    }
    return static_cast<std::size_t>(std::stoul(s));
  };
  for (const auto& [k, v] : p) {
    if (k == "n" || k == "samples") continue;
    if (k.rfind("g_", 0) == 0) {
      const auto i = index(k.substr(2), k);
      if (i >= n) throw ConfigError("parameter '" + k + "' out of range");
      diag(static_cast<Eigen::Index>(i)) = v;
    } else if (k.rfind("A_", 0) == 0) {
      const auto us = k.find('_', 2);
      if (us == std::string::npos) throw ConfigError("parameter '" + k + "' must be A_<row>_<col>");
      const auto a = index(k.substr(2, us - 2), k), i = index(k.substr(us + 1), k);
      if (i >= n) throw ConfigError("parameter '" + k + "' out of range");
      a_entries[{a, i}] = v;
      m = std::max(m, a + 1);
    } else if (k.rfind("B_", 0) == 0) {
      const auto a = index(k.substr(2), k);
      b_entries[a] = v;
    } else {
      throw ConfigError("scenario 'inline' has no parameter '" + k + "'");
    }
  }
  for (const auto& [a, v] : b_entries) {
    if (a >= m) throw ConfigError("B_" + std::to_string(a) + " has no constraint row");
  }
  Matrix a_mat = Matrix::Zero(static_cast<Eigen::Index>(m), nn);
  for (const auto& [ij, v] : a_entries) a_mat(static_cast<Eigen::Index>(ij.first), static_cast<Eigen::Index>(ij.second)) = v;
  Vector b = Vector::Zero(static_cast<Eigen::Index>(m));
  for (const auto& [a, v] : b_entries) b(static_cast<Eigen::Index>(a)) = v;

  LagrangianSystem sys;
  sys.name = "inline";
  sys.n = n;
  sys.m = m;
  sys.g = MetricField::constant(diag.asDiagonal().toDenseMatrix());
  sys.pfaffian.n = n;
  sys.pfaffian.m = m;
  sys.pfaffian.A.eval = [a_mat](const ChartPoint&) { return a_mat; };
  sys.pfaffian.A.exact_partials = [a_mat, n](const ChartPoint&) {
    return std::vector<Matrix>(n, Matrix::Zero(a_mat.rows(), a_mat.cols()));
  };
  if (b.size() > 0 && b.cwiseAbs().maxCoeff() > 0.0) {
    sys.pfaffian.B = [b](double) { return b; };
    sys.pfaffian.B_dot = [b](double) { return Vector(Vector::Zero(b.size())); };
  }
  return sys;
}

inline Built build_system(const std::string& scenario, const ParamMap& p) {
  if (scenario == "sleigh") {
    reject_unknown(p, {"r", "J"}, scenario);
    const scenarios::SleighParams prm{require(p, "r", scenario), require(p, "J", scenario)};
    try {
      prm.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return {scenarios::chaplygin_sleigh(prm), prm};
  }
  if (scenario == "heisenberg") {
    reject_unknown(p, {}, scenario);
    return {scenarios::heisenberg_particle(), std::nullopt};
  }
  if (scenario == "inline") return {inline_system(p), std::nullopt};
  if (scenario.empty()) throw ConfigError("--scenario is required");
  throw ConfigError("unknown scenario '" + scenario + "' (sleigh, heisenberg, inline)");
}

inline State initial_state(const Built& b, const std::string& init) {
  const auto n = static_cast<Eigen::Index>(b.sys.n);
  auto kv = split_assignments(init);
  State s{0.0, ChartPoint(Vector::Zero(n)), Vector::Zero(n)};
  if (kv.count("t")) s.t = parse_number(kv["t"], "init t");
  kv.erase("t");
  const bool reduced = kv.count("theta") || kv.count("u") || kv.count("omega") || kv.count("x") || kv.count("y");
  if (b.sleigh && reduced) {
    double vals[5] = {0, 0, 0, 0, 0};
    const char* names[5] = {"x", "y", "theta", "u", "omega"};
    for (int i = 0; i < 5; ++i) {
      if (kv.count(names[i])) {
        vals[i] = parse_number(kv[names[i]], std::string("init ") + names[i]);
        kv.erase(names[i]);
      }
    }
    if (!kv.empty()) throw ConfigError("--init cannot mix '" + kv.begin()->first + "' with x,y,theta,u,omega");
    return scenarios::sleigh_state(*b.sleigh, vals[0], vals[1], vals[2], {vals[3], vals[4]}, s.t);
  }
  for (const auto& [k, v] : kv) {
    if (k != "z" && k != "v") throw ConfigError("unknown --init key '" + k + "'");
    const Vector vec = parse_tuple(v, "init " + k);
    if (vec.size() != n) throw ConfigError("init " + k + " must have " + std::to_string(n) + " entries");
    if (k == "z") s.z = ChartPoint(vec);
    else s.v = vec;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Output

inline std::vector<std::string> trajectory_columns(const LagrangianSystem& sys) {
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 0; i < sys.n; ++i) cols.push_back("z" + std::to_string(i));
  for (std::size_t i = 0; i < sys.n; ++i) cols.push_back("v" + std::to_string(i));
  cols.emplace_back("energy");
  for (std::size_t a = 0; a < sys.m; ++a) cols.push_back("constraint_residual" + std::to_string(a));
  return cols;
}

inline std::vector<double> trajectory_row(const State& s, const SampleDiagnostics& d) {
  std::vector<double> row{s.t};
  for (Eigen::Index i = 0; i < s.v.size(); ++i) row.push_back(s.z[i]);
  for (Eigen::Index i = 0; i < s.v.size(); ++i) row.push_back(s.v(i));
  row.push_back(d.energy);
  for (Eigen::Index a = 0; a < d.constraint_residual.size(); ++a) row.push_back(d.constraint_residual(a));
  return row;
}

inline void write_trajectory(std::ostream& os, const LagrangianSystem& sys, const Trajectory& traj,
                             const std::string& format) {
  const auto cols = trajectory_columns(sys);
  if (format == "json") {
    nlohmann::json doc;
    doc["columns"] = cols;
    doc["rows"] = nlohmann::json::array();
    for (std::size_t k = 0; k < traj.size(); ++k) doc["rows"].push_back(trajectory_row(traj.samples[k], traj.diagnostics[k]));
    os << doc.dump() << "\n";
    return;
  }
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto row = trajectory_row(traj.samples[k], traj.diagnostics[k]);
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
    os << "\n";
  }
}

template <class Writer>
int emit(const std::string& path, std::ostream& out, std::ostream& err, Writer&& write) {
  if (path.empty() || path == "-") {
    write(out);
    return kOk;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot open output file " << path << "\n";
    return kConfigError;
  }
  write(f);
  return kOk;
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Built b;
  State s0;
  try {
    if (!(cfg.t_end > 0.0)) throw ConfigError("--t-end must be given and positive");
    if (!(cfg.h > 0.0)) throw ConfigError("--h must be given and positive");
    if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("--format must be csv or json");
    b = build_system(cfg.scenario, parse_params(cfg.params));
    s0 = initial_state(b, cfg.init);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    (void)orthogonal_pair(b.sys.g, b.sys.pfaffian.matrix(s0.z), s0.z);
    const Vector r0 = constraint_residual(b.sys, s0);
    if (r0.size() > 0 && r0.cwiseAbs().maxCoeff() > 1e-8) {
      if (!cfg.project_init) {
        err << "config error: initial velocity violates the constraints (|Av+B| = "
            << r0.cwiseAbs().maxCoeff() << "); rerun with --project-init to project it\n";
        return kConfigError;
      }
      s0.v = project_velocity(b.sys, s0.t, s0.z, s0.v);
    }
  } catch (const Error& e) {
    err << "degenerate geometry: " << e.what() << "\n";
    return kDegenerateGeometry;
  }

  try {
    const auto traj = integrate(b.sys, s0, cfg.t_end, cfg.h);
    return emit(cfg.out, out, err, [&](std::ostream& os) { write_trajectory(os, b.sys, traj, cfg.format); });
  } catch (const IntegrationFailure& e) {
    err << "integration failure: " << e.what() << "\n";
    const int rc = emit(cfg.out, out, err, [&](std::ostream& os) { write_trajectory(os, b.sys, e.partial(), cfg.format); });
    return rc == kOk ? kIntegrationFailure : rc;
  }
}

struct CheckLine {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;  // NaN: informational
  [[nodiscard]] bool informational() const { return std::isnan(tolerance); }
  [[nodiscard]] bool pass() const { return informational() || value <= tolerance; }
};

inline constexpr double kInformational = std::numeric_limits<double>::quiet_NaN();

// Random on-constraint state at a random point.
inline State sample_state(const LagrangianSystem& sys, std::mt19937& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto n = static_cast<Eigen::Index>(sys.n);
  Vector z(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = u(gen);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(gen);
  const ChartPoint zp(z);
  return {0.0, zp, project_velocity(sys, 0.0, zp, v)};
}

inline std::vector<CheckLine> system_checks(const Built& b, std::size_t samples, std::mt19937& gen) {
  const auto& sys = b.sys;
  const auto n = static_cast<Eigen::Index>(sys.n);
  const Matrix id = Matrix::Identity(n, n);
  double p_idem = 0, q_idem = 0, pq = 0, part = 0, ap = 0, orth = 0, dal = 0, acc = 0, skew = 0;
  std::vector<State> states;
  for (std::size_t k = 0; k < samples; ++k) {
    const State s = sample_state(sys, gen);
    states.push_back(s);
    const Matrix a = sys.pfaffian.matrix(s.z);
    const auto pair = orthogonal_pair(sys.g, a, s.z);
    const Matrix g = sys.g(s.z);
    p_idem = std::max(p_idem, max_abs(pair.P * pair.P - pair.P));
    q_idem = std::max(q_idem, max_abs(pair.Q * pair.Q - pair.Q));
    pq = std::max(pq, max_abs(pair.P * pair.Q));
    part = std::max(part, max_abs(pair.P + pair.Q - id));
    if (a.rows() > 0) ap = std::max(ap, max_abs(a * pair.P));
    orth = std::max(orth, max_abs(pair.P.transpose() * g * pair.Q));
    const auto sol = solve_acceleration(sys, s);
    dal = std::max(dal, max_abs(pair.P.transpose() * sol.force));
    if (a.rows() > 0) {
      const Vector c = a * sol.a + sys.pfaffian.rate_term(s.z, s.v) + sys.pfaffian.offset_rate(s.t);
      acc = std::max(acc, max_abs(c));
    }
    const Matrix t = pseudo_poisson(scenarios::projector_field(sys), s.z, s.v);
    skew = std::max(skew, skew_defect(t));
  }
  std::vector<CheckLine> lines = {
      {"projector.P_idempotent", p_idem, 1e-10},
      {"projector.Q_idempotent", q_idem, 1e-10},
      {"projector.PQ_zero", pq, 1e-10},
      {"projector.P_plus_Q_identity", part, 1e-10},
      {"projector.AP_zero", ap, 1e-10},
      {"projector.g_orthogonal_images", orth, 1e-10},
      {"dynamics.dalembert_PtE", dal, 1e-9},
      {"dynamics.constraint_acceleration", acc, 1e-9},
      {"pseudo_poisson.skew", skew, 1e-10},
  };

  // Energy along a short trajectory; conserved only without potential work
  // from a constraint offset.
  const auto traj = integrate(sys, states.front(), 1.0, 1e-3);
  double drift = 0;
  for (const auto& d : traj.diagnostics) drift = std::max(drift, std::abs(d.energy - traj.diagnostics.front().energy));
  const bool conservative = !sys.pfaffian.B;
  lines.push_back({"dynamics.energy_drift", drift, conservative ? 1e-7 : kInformational});

  // Jacobiator of the pseudo-Poisson tensor on coordinate triples.
  const auto br = bracket_of(pseudo_poisson_field(scenarios::projector_field(sys), sys.n));
  const State& s = states.front();
  Vector x(2 * n);
  x << s.z.coords(), s.v;
  double jac = 0;
  const auto dim = static_cast<std::size_t>(2 * n);
  for (Eigen::Index i = 0; i < 2 * n; ++i)
    for (Eigen::Index j = i + 1; j < 2 * n; ++j)
      for (Eigen::Index k = j + 1; k < 2 * n; ++k)
        jac = std::max(jac, std::abs(jacobiator(br, ScalarField::coordinate(i, dim), ScalarField::coordinate(j, dim),
                                                ScalarField::coordinate(k, dim), ChartPoint(x))));
  lines.push_back({"pseudo_poisson.jacobiator", jac, kInformational});
  return lines;
}

/// Canonical structure on interleaved (q1, p1, q2, p2, ...) with second-class
/// constraints q_j = p_j = 0 on the last `constrained_pairs` pairs, or the
/// first-class pair q_1 = q_2 = 0.
struct CanonicalCase {
  std::size_t pairs = 2;
  PoissonField pi;
  SecondClassConstraintSet constraints;
};

inline CanonicalCase canonical_case(const ParamMap& p) {
  reject_unknown(p, {"pairs", "constrained_pairs", "first_class"}, "canonical");
  CanonicalCase c;
  c.pairs = count_param(p, "pairs", 2, 1);
  const auto constrained = count_param(p, "constrained_pairs", 1, 0);
  const auto first_class = count_param(p, "first_class", 0, 0);
  if (constrained > c.pairs) throw ConfigError("constrained_pairs exceeds pairs");
  c.pi = PoissonField::canonical(c.pairs);
  const auto dim = 2 * c.pairs;
  if (first_class > 0) {
    if (c.pairs < 2) throw ConfigError("first_class needs pairs >= 2");
    c.constraints.functions = {ScalarField::coordinate(0, dim), ScalarField::coordinate(2, dim)};
    return c;
  }
  for (std::size_t j = c.pairs - constrained; j < c.pairs; ++j) {
    c.constraints.functions.push_back(ScalarField::coordinate(static_cast<Eigen::Index>(2 * j), dim));
    c.constraints.functions.push_back(ScalarField::coordinate(static_cast<Eigen::Index>(2 * j + 1), dim));
  }
  return c;
}

inline std::vector<CheckLine> canonical_checks(const CanonicalCase& c, std::size_t samples, std::mt19937& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(2 * c.pairs);
  double part = 0, central = 0, skew = 0, jac = 0;
  const auto br = dirac_bracket_of(c.pi, c.constraints);
  for (std::size_t k = 0; k < samples; ++k) {
    Vector x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = u(gen);
    const ChartPoint z(x);
    const auto dec = transverse_decomposition(c.pi, c.constraints, z);
    part = std::max(part, max_abs(dec.Pi_W - dec.Pi_S - dec.Pi_M));
    if (c.constraints.size() > 0) central = std::max(central, max_abs(dec.Pi_M * c.constraints.gradients(z)));
    skew = std::max(skew, skew_defect(dec.Pi_M));
    if (k == 0) {
      const auto d = static_cast<std::size_t>(dim);
      for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = i + 1; j < dim; ++j)
          for (Eigen::Index l = j + 1; l < dim; ++l)
            jac = std::max(jac, std::abs(jacobiator(br, ScalarField::coordinate(i, d), ScalarField::coordinate(j, d),
                                                    ScalarField::coordinate(l, d), z)));
    }
  }
  return {{"dirac.Pi_W_equals_Pi_S_plus_Pi_M", part, 0.0},
          {"dirac.constraints_central", central, 1e-10},
          {"dirac.skew", skew, 1e-12},
          {"dirac.jacobiator", jac, 2e-5}};
}

inline std::size_t sample_count(const ParamMap& p) { return count_param(p, "samples", 20, 1); }

inline void print_check(std::ostream& os, const std::vector<CheckLine>& lines) {
  for (const auto& l : lines) {
    os << l.name << "," << fmt(l.value) << "," << (l.informational() ? std::string("-") : short_fmt(l.tolerance)) << ","
       << (l.informational() ? "informational" : (l.pass() ? "pass" : "fail")) << "\n";
  }
}

inline int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  ParamMap params;
  std::size_t samples = 0;
  std::optional<Built> built;
  std::optional<CanonicalCase> canon;
  try {
    params = parse_params(cfg.params);
    samples = sample_count(params);
    if (cfg.scenario == "canonical") canon = canonical_case(params);
    else built = build_system(cfg.scenario, params);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  std::mt19937 gen(cfg.seed);
  std::vector<CheckLine> lines;
  int rc = kOk;
  try {
    lines = canon ? canonical_checks(*canon, samples, gen) : system_checks(*built, samples, gen);
  } catch (const DegenerateConstraints& e) {
    lines.push_back({"constraints.DegenerateConstraints", 1.0, 0.0});
    err << "DegenerateConstraints: " << e.what() << "\n";
  } catch (const FirstClassConstraint& e) {
    lines.push_back({"constraints.FirstClassConstraint", 1.0, 0.0});
    err << "FirstClassConstraint: " << e.what() << "\n";
  } catch (const Error& e) {
    lines.push_back({"geometry.error", 1.0, 0.0});
    err << "error: " << e.what() << "\n";
  }
  for (const auto& l : lines) {
    if (!l.pass()) rc = kInvariantFailure;
  }
  const int wrc = emit(cfg.out, out, err, [&](std::ostream& os) { print_check(os, lines); });
  return wrc != kOk ? wrc : rc;
}

inline nlohmann::json to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json to_json(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline int cmd_poisson(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  ParamMap params;
  std::vector<Vector> points;
  std::optional<Built> built;
  std::optional<CanonicalCase> canon;
  try {
    params = parse_params(cfg.params);
    const auto samples = count_param(params, "samples", 1, 1);
    if (cfg.scenario == "canonical") canon = canonical_case(params);
    else built = build_system(cfg.scenario, params);
    const auto dim = static_cast<Eigen::Index>(canon ? 2 * canon->pairs : 2 * built->sys.n);
    Vector first = Vector::Zero(dim);
    auto kv = split_assignments(cfg.init);
    if (kv.count("point")) {
      first = parse_tuple(kv["point"], "init point");
      kv.erase("point");
    }
    if (!canon && (kv.count("z") || kv.count("p"))) {
      const auto n = dim / 2;
      for (const char* key : {"z", "p"}) {
        if (!kv.count(key)) continue;
        const Vector part = parse_tuple(kv[key], std::string("init ") + key);
        if (part.size() != n) throw ConfigError(std::string("init ") + key + " must have " + std::to_string(n) + " entries");
        first.segment(key[0] == 'z' ? 0 : n, n) = part;
        kv.erase(key);
      }
    }
    if (!kv.empty()) throw ConfigError("unknown --init key '" + kv.begin()->first + "'");
    if (first.size() != dim) throw ConfigError("init point must have " + std::to_string(dim) + " entries");
    points.push_back(first);
    std::mt19937 gen(cfg.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t k = 1; k < samples; ++k) {
      Vector x(dim);
      for (Eigen::Index i = 0; i < dim; ++i) x(i) = u(gen);
      points.push_back(x);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  auto doc = nlohmann::json::array();
  try {
    for (const auto& x : points) {
      nlohmann::json entry;
      entry["point"] = to_json(x);
      if (canon) {
        const auto dec = transverse_decomposition(canon->pi, canon->constraints, ChartPoint(x));
        entry["Pi_W"] = to_json(dec.Pi_W);
        entry["Pi_S"] = to_json(dec.Pi_S);
        entry["Pi_M"] = to_json(dec.Pi_M);
        entry["pseudo"] = nullptr;
        entry["lambda"] = canon->constraints.size() > 0 ? to_json(dec.lambda_upper) : nlohmann::json(nullptr);
      } else {
        const auto n = static_cast<Eigen::Index>(built->sys.n);
        const Matrix t = pseudo_poisson(scenarios::projector_field(built->sys), ChartPoint(Vector(x.head(n))), x.tail(n));
        entry["Pi_W"] = nullptr;
        entry["Pi_S"] = nullptr;
        entry["Pi_M"] = nullptr;
        entry["pseudo"] = to_json(t);
        entry["lambda"] = nullptr;
      }
      doc.push_back(entry);
    }
  } catch (const FirstClassConstraint& e) {
    err << "FirstClassConstraint: " << e.what() << "\n";
    return kDegenerateGeometry;
  } catch (const Error& e) {
    err << "degenerate geometry: " << e.what() << "\n";
    return kDegenerateGeometry;
  }
  return emit(cfg.out, out, err, [&](std::ostream& os) { os << doc.dump(2) << "\n"; });
}

// ---------------------------------------------------------------------------

inline void add_run_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--scenario", cfg.scenario, "sleigh | heisenberg | inline | canonical");
  sub->add_option("--param", cfg.params, "Scenario parameter k=v (repeatable)");
  sub->add_option("--init", cfg.init, "Initial state, e.g. \"theta=0,u=1,omega=1\" or \"z=(0,0,0),v=(1,0,0)\"");
  sub->add_option("--t-end", cfg.t_end, "Integration horizon");
  sub->add_option("--h", cfg.h, "Step size");
  sub->add_option("--out", cfg.out, "Output file (default: stdout)");
  sub->add_option("--format", cfg.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_flag("--project-init", cfg.project_init, "Project an off-constraint initial velocity");
  sub->add_option("--seed", cfg.seed, "Seed for sampled points");
}

/// Entry point; args excludes the program name.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projector method for nonholonomic mechanics", "nhproj"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "INI/TOML file; sections name subcommands, flags override");
  app.require_subcommand(1);
  RunConfig sim, chk, poi;
  auto* s = app.add_subcommand("simulate", "Integrate a trajectory and write a table");
  auto* c = app.add_subcommand("check", "Run invariant suites at sampled points");
  auto* p = app.add_subcommand("poisson", "Dump Poisson tensors at sampled points");
  add_run_options(s, sim);
  add_run_options(c, chk);
  add_run_options(p, poi);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  if (s->parsed()) return cmd_simulate(sim, out, err);
  if (c->parsed()) return cmd_check(chk, out, err);
  return cmd_poisson(poi, out, err);
}

}  // namespace nhproj::cli
