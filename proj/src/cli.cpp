#include "chronoscale/cli.hpp"

#include "chronoscale/error.hpp"
#include "chronoscale/lyapunov.hpp"
#include "chronoscale/numeric.hpp"
#include "chronoscale/scales.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace chronoscale::cli {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::NotInScale: return kExitSchema;
    case ErrorKind::Refusal: return kExitRefusal;
    case ErrorKind::Divergence:
    case ErrorKind::Numerical: return kExitNumerical;
  }
  return kExitNumerical;
}

namespace {

[[noreturn]] void schema(const std::string& msg) { fail(ErrorKind::InvalidArgument, msg); }

json parse_json_arg(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    schema(what + ": not valid JSON (" + e.what() + ")");
  }
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) schema(what + " must be a number");
  return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  return number(j.at(key), std::string("'") + key + "'");
}

VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) schema(what + " must be an array of numbers");
  VectorXd v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[Eigen::Index(i)] = number(j[i], what);
  return v;
}

MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) schema(what + " must be a non-empty array of rows");
  const std::size_t n = j.size();
  MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != n) schema(what + " must be square");
    for (std::size_t k = 0; k < n; ++k) m(Eigen::Index(i), Eigen::Index(k)) = number(j[i][k], what);
  }
  return m;
}

Window parse_window(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) schema("window must be 'a,b'");
  try {
    std::size_t u1 = 0, u2 = 0;
    const std::string a = text.substr(0, comma), b = text.substr(comma + 1);
    const double lo = std::stod(a, &u1);
    const double hi = std::stod(b, &u2);
    if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument(text);
    if (!(lo <= hi)) schema("window start after end");
    return {lo, hi};
  } catch (const std::logic_error&) {
    schema("cannot parse window '" + text + "'");
  }
}

MatrixXd rot(double th) {
  MatrixXd r(2, 2);
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return r;
}

// x = L(t) y with L(t) = rot(theta sin t) turns x^D = A x into y^D = B-hat y.
MatrixFunction rotated_system(const VectorXd& b, double theta, const Grid& grid) {
  if (b.size() != 2) schema("rotated system needs a 2-element B");
  MatrixXd jmat(2, 2);
  jmat << 0, -1, 1, 0;
  MatrixFunction a;
  a.dim = 2;
  a.dense_eval = [b, theta, jmat](double t) {
    const MatrixXd l = rot(theta * std::sin(t));
    return MatrixXd(theta * std::cos(t) * jmat + l * b.asDiagonal() * l.transpose());
  };
  a.eval = [b, theta, grid, dense = a.dense_eval](double t) {
    const double mu = grid.mu_at(t);
    if (mu == 0.0) return dense(t);
    const MatrixXd e = VectorXd((b * mu).array().exp()).asDiagonal();
    return MatrixXd((rot(theta * std::sin(t + mu)) * e * rot(-theta * std::sin(t)) -
                     MatrixXd::Identity(2, 2)) /
                    mu);
  };
  return a;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

Table trajectory_table(const Trajectory& x, const std::string& prefix = "x") {
  Table t;
  t.header.push_back("t");
  t.columns.push_back(x.grid.times());
  for (int j = 0; j < x.dim(); ++j) {
    t.header.push_back(prefix + std::to_string(j));
    t.columns.push_back(x.component(j));
  }
  return t;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json window_json(Window w) { return json::array({w.start, w.end}); }

}  // namespace

// --- registries ---------------------------------------------------------------------

ScalarCoefficient coefficient_from_json(const json& j) {
  if (j.is_number()) {
    const double c = j.get<double>();
    return [c](double) { return c; };
  }
  if (j.is_string()) return coefficient_from_json(parse_json_arg(j.get<std::string>(), "coefficient"));
  if (!j.is_object()) schema("coefficient must be a number or an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "c" && key != "sin" && key != "cos" && key != "exp" && key != "t") {
      schema("unknown coefficient term '" + key + "'");
    }
  }
  const double c = number_or(j, "c", 0.0);
  const double slope = number_or(j, "t", 0.0);
  auto wave = [&](const char* key) {
    std::array<double, 3> w{0, 0, 0};
    if (!j.contains(key)) return w;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() < 2 || a.size() > 3) schema(std::string("'") + key + "' is [amp, w, phase]");
    for (std::size_t i = 0; i < a.size(); ++i) w[i] = number(a[i], key);
    return w;
  };
  const auto s = wave("sin");
  const auto k = wave("cos");
  std::array<double, 2> e{0, 0};
  if (j.contains("exp")) {
    const auto& a = j.at("exp");
    if (!a.is_array() || a.size() != 2) schema("'exp' is [amp, rate]");
    e = {number(a[0], "exp"), number(a[1], "exp")};
  }
  return [=](double t) {
    return c + slope * t + s[0] * std::sin(s[1] * t + s[2]) + k[0] * std::cos(k[1] * t + k[2]) +
           e[0] * std::exp(e[1] * t);
  };
}

MatrixFunction system_from_json(const json& j, const Grid& grid) {
  if (!j.is_object()) schema("system must be a JSON object");
  if (j.contains("A")) {
    const json& a = j.at("A");
    if (!a.is_array() || a.empty()) schema("'A' must be a non-empty array of rows");
    const std::size_t n = a.size();
    bool constant = true;
    for (const auto& row : a) {
      if (!row.is_array() || row.size() != n) schema("'A' must be square");
      for (const auto& v : row) constant = constant && v.is_number();
    }
    if (constant) return MatrixFunction::constant_matrix(matrix_from_json(a, "'A'"));
    std::vector<ScalarCoefficient> entries;
    for (const auto& row : a) {
      for (const auto& v : row) entries.push_back(coefficient_from_json(v));
    }
    MatrixFunction m;
    m.dim = int(n);
    m.eval = [entries, n](double t) {
      MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) out(Eigen::Index(i), Eigen::Index(k)) = entries[i * n + k](t);
      }
      return out;
    };
    return m;
  }
  if (j.contains("diag")) {
    const VectorXd d = vector_from_json(j.at("diag"), "'diag'");
    return MatrixFunction::constant_matrix(d.asDiagonal());
  }
  if (!j.contains("builtin")) schema("system needs 'A', 'diag' or 'builtin'");
  const std::string name = j.at("builtin").get<std::string>();
  if (name == "rotating") {
    MatrixFunction a;
    a.dim = 2;
    a.eval = [](double t) {
      MatrixXd m(2, 2);
      m << -0.3, std::cos(t), -0.5 * std::sin(t), -0.2;
      return m;
    };
    a.bound = 1.5;
    return a;
  }
  if (name == "upper-triangular") {
    const double p = number_or(j, "a", 1.0), q = number_or(j, "b", -1.0), w = number_or(j, "w", 1.0);
    MatrixFunction a;
    a.dim = 2;
    a.eval = [p, q, w](double t) {
      MatrixXd m(2, 2);
      m << p, std::cos(w * t), 0.0, q;
      return m;
    };
    return a;
  }
  if (name == "b-hat") {
    if (!j.contains("B")) schema("b-hat needs 'B'");
    return b_hat_system(vector_from_json(j.at("B"), "'B'"), grid);
  }
  if (name == "rotated") {
    if (!j.contains("B")) schema("rotated needs 'B'");
    return rotated_system(vector_from_json(j.at("B"), "'B'"), number_or(j, "theta", 0.3), grid);
  }
  schema("unknown builtin system '" + name + "'");
}

Forcing forcing_from_json(const json& j, int dim) {
  if (j.is_null()) return zero_forcing(dim);
  if (!j.is_array() || int(j.size()) != dim) {
    schema("forcing must be an array of " + std::to_string(dim) + " coefficients");
  }
  std::vector<ScalarCoefficient> parts;
  for (const auto& v : j) parts.push_back(coefficient_from_json(v));
  return [parts](double t) {
    VectorXd out(Eigen::Index(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) out[Eigen::Index(i)] = parts[i](t);
    return out;
  };
}

NonlinearityModel nonlinearity_from_json(const json& j, int dim) {
  if (!j.is_object() || !j.contains("components") || !j.at("components").is_array()) {
    schema("nonlinearity needs a 'components' array");
  }
  NonlinearityModel m;
  m.dim = dim;
  if (j.contains("ball_radius")) m.ball_radius = number(j.at("ball_radius"), "'ball_radius'");
  for (const auto& c : j.at("components")) {
    if (!c.is_object() || !c.contains("type")) schema("each component needs a 'type'");
    const std::string type = c.at("type").get<std::string>();
    const VectorXd offset = c.contains("offset") ? vector_from_json(c.at("offset"), "'offset'")
                                                 : VectorXd(VectorXd::Zero(dim));
    if (offset.size() != dim) schema("'offset' must have " + std::to_string(dim) + " entries");
    const double amp = number_or(c, "amp", 0.0);
    NonlinearComponent comp;
    comp.name = type;
    if (type == "sin") {
      comp.g = [amp, offset](double, const VectorXd& x) {
        return VectorXd(amp * x.array().sin().matrix() + offset);
      };
      comp.h = offset.norm();
      comp.c = std::abs(amp);
    } else if (type == "cos") {
      comp.g = [amp, offset](double, const VectorXd& x) {
        return VectorXd(amp * x.array().cos().matrix() + offset);
      };
      comp.h = (VectorXd::Constant(dim, amp) + offset).norm();
      comp.c = std::abs(amp);
    } else if (type == "swap") {
      if (dim != 2) schema("'swap' needs a 2-dimensional system");
      comp.g = [amp, offset](double, const VectorXd& x) {
        VectorXd out(2);
        out << amp * std::cos(x[1]) + offset[0], amp * std::sin(x[0]) + offset[1];
        return out;
      };
      comp.h = std::hypot(amp + offset[0], offset[1]);
      comp.c = std::abs(amp);
    } else if (type == "linear") {
      if (!c.contains("K")) schema("'linear' needs 'K'");
      const MatrixXd k = matrix_from_json(c.at("K"), "'K'");
      if (k.rows() != dim) schema("'K' has the wrong size");
      comp.g = [k, offset](double, const VectorXd& x) { return VectorXd(k * x + offset); };
      comp.h = offset.norm();
      comp.c = op_norm(k);
    } else if (type == "constant") {
      comp.g = [offset](double, const VectorXd&) { return offset; };
      comp.h = offset.norm();
      comp.c = 0.0;
    } else {
      schema("unknown nonlinearity type '" + type + "'");
    }
    if (c.contains("forcing")) {
      const Forcing f = forcing_from_json(c.at("forcing"), dim);
      const double bound = number_or(c, "forcing_bound", kInf);
      if (!std::isfinite(bound)) schema("a component with 'forcing' must declare 'forcing_bound'");
      comp.g = [g = comp.g, f](double t, const VectorXd& x) { return VectorXd(g(t, x) + f(t)); };
      comp.h += bound;
    }
    comp.h = number_or(c, "h", comp.h);
    comp.c = number_or(c, "c", comp.c);
    m.components.push_back(std::move(comp));
  }
  return m;
}

DecayScenario decay_from_json(const json& j) {
  if (!j.is_object() || !j.contains("B")) schema("decay model needs 'B'");
  DecayScenario s;
  s.b = vector_from_json(j.at("B"), "'B'");
  if (s.b.size() == 0) schema("'B' must not be empty");
  s.model.c1 = number_or(j, "c1", 0.0);
  s.model.c2 = number_or(j, "c2", 0.0);
  s.model.h = number_or(j, "h", 0.0);
  s.model.alpha = number_or(j, "alpha", 1.0);
  s.model.beta = number_or(j, "beta", 1.0);
  s.model.gamma = number_or(j, "gamma", 1.0);
  if (j.contains("L")) {
    const json& l = j.at("L");
    if (!l.is_object() || l.value("type", "") != "rotation") schema("'L' supports {\"type\": \"rotation\", \"theta\": t}");
    if (s.b.size() != 2) schema("rotation L needs a 2-element B");
    const double theta = number_or(l, "theta", 0.3);
    MatrixFunction lf;
    lf.dim = 2;
    lf.eval = [theta](double t) { return rot(theta * std::sin(t)); };
    lf.bound = 1.0;
    s.l = lf;
  }
  return s;
}

json list_builtins() {
  return json{
      {"scales", scale_catalog()},
      {"systems",
       json::array({
           json{{"name", "A"}, {"doc", "{\"A\": [[...]]}; entries are numbers or coefficients"}},
           json{{"name", "diag"}, {"doc", "{\"diag\": [d1, ...]}"}},
           json{{"name", "rotating"}, {"doc", "[[-0.3, cos t], [-0.5 sin t, -0.2]]"}},
           json{{"name", "upper-triangular"},
                {"params", json::array({"a (1)", "b (-1)", "w (1)"})},
                {"doc", "[[a, cos(w t)], [0, b]]"}},
           json{{"name", "b-hat"},
                {"params", json::array({"B"})},
                {"doc", "diag((exp(B mu) - 1)/mu), B on dense points"}},
           json{{"name", "rotated"},
                {"params", json::array({"B (2 entries)", "theta (0.3)"})},
                {"doc", "system reduced to B-hat by x = rot(theta sin t) y"}},
       })},
      {"forcings",
       json::array({json{{"name", "coefficient array"},
                         {"doc", "one coefficient per component; null is zero forcing"}}})},
      {"coefficients",
       json{{"forms", json::array({"number", "{\"c\", \"t\", \"sin\": [amp, w, phase], "
                                             "\"cos\": [amp, w, phase], \"exp\": [amp, rate]}"})},
            {"doc", "c + t*slope + amp sin(w t + phase) + amp cos(w t + phase) + amp exp(rate t)"}}},
      {"nonlinearities",
       json::array({
           json{{"name", "sin"}, {"doc", "amp sin(x_i) + offset_i; h = |offset|, c = |amp|"}},
           json{{"name", "cos"}, {"doc", "amp cos(x_i) + offset_i; h = |amp + offset|, c = |amp|"}},
           json{{"name", "swap"},
                {"doc", "(amp cos x_2 + o_1, amp sin x_1 + o_2); h = |(amp + o_1, o_2)|, c = |amp|"}},
           json{{"name", "linear"}, {"doc", "K x + offset; h = |offset|, c = |K|"}},
           json{{"name", "constant"}, {"doc", "offset; c = 0"}},
           json{{"name", "decay"},
                {"doc", "decay model: c1 |x|^(1+alpha) u + c2 e^(-beta t) x + h e^(-gamma t) u, "
                        "u = (1,...,1)/sqrt(n)"}},
       })},
  };
}

std::string format_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) schema("csv: header and column counts differ");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    out += header[c];
    out += c + 1 < header.size() ? ',' : '\n';
  }
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  char buf[40];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", columns[c].at(r));
      out += buf;
      out += c + 1 < columns.size() ? ',' : '\n';
    }
  }
  return out;
}

std::vector<std::string> scenario_arguments(const json& scenario) {
  if (!scenario.is_object() || !scenario.contains("command") || !scenario.at("command").is_string()) {
    schema("scenario needs a string 'command'");
  }
  std::vector<std::string> args{scenario.at("command").get<std::string>()};
  for (const auto& [key, value] : scenario.items()) {
    if (key == "command") continue;
    std::string opt = "--" + key;
    std::replace(opt.begin(), opt.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(opt);
    } else if (value.is_string()) {
      args.push_back(opt);
      args.push_back(value.get<std::string>());
    } else if (key == "window" && value.is_array() && value.size() == 2) {
      args.push_back(opt);
      args.push_back(value[0].dump() + "," + value[1].dump());
    } else {
      args.push_back(opt);
      args.push_back(value.dump());
    }
  }
  return args;
}

// --- subcommands ------------------------------------------------------------------

namespace {

struct Options {
  std::string scale;
  std::string window;
  double h = 0.01;
  std::string out;
  std::string system;
  std::string x0;
  std::string forcing;
  std::string projection;
  std::string nonlin;
  std::string model;
  std::string p;
  double from = 0.0;
  double to = 0.0;
  double tol = 1e-10;
  double residual_tol = 1e-8;
  int max_iter = 200;
  std::uint64_t seed = 7;
  double verify_tol = 1e-8;
  bool diagnostic = false;
  double b = 0.0;
  double gamma = 1.0;
  double lambda = 1.0;
  double a_max = 10.0;
  bool det_quotient_alpha = false;
};

struct Result {
  json report;
  std::optional<Table> table;
  int code = kExitOk;
};

Grid make_grid(const TimeScale& scale, const Options& o) {
  if (o.window.empty()) schema("--window is required");
  return build_grid(scale, parse_window(o.window), o.h);
}

SolverOptions solver_options(const Options& o) {
  SolverOptions s;
  s.tol = o.tol;
  s.max_iter = o.max_iter;
  s.residual_tol = o.residual_tol;
  s.seed = o.seed;
  return s;
}

json scale_summary(const TimeScale& scale, const Grid& grid) {
  return json{{"inf", finite_or_null(scale.inf())},
              {"sup", finite_or_null(scale.sup())},
              {"mu_star", finite_or_null(scale.mu_star())},
              {"nu_star", finite_or_null(scale.nu_star())},
              {"syndetic", scale.is_syndetic()},
              {"window", window_json(grid.window())},
              {"points", grid.size()}};
}

Result run_scale(const Options& o) {
  const TimeScale scale = parse_scale(o.scale);
  const Grid g = make_grid(scale, o);
  Result r;
  r.report = scale_summary(scale, g);
  r.report["scale"] = o.scale;
  r.report["mu_star_window"] = finite_or_null(scale.mu_star(g.window()));
  Table t{{"t", "mu", "sigma", "right_scattered", "left_scattered"}, {{}, {}, {}, {}, {}}};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double tk = g[k].t;
    const PointClass pc = scale.classify(tk);
    t.columns[0].push_back(tk);
    t.columns[1].push_back(g[k].mu);
    t.columns[2].push_back(tk + g[k].mu);
    t.columns[3].push_back(pc.right == RightClass::RightScattered ? 1.0 : 0.0);
    t.columns[4].push_back(pc.left == LeftClass::LeftScattered ? 1.0 : 0.0);
  }
  r.table = std::move(t);
  return r;
}

Result run_exp(const Options& o) {
  if (o.p.empty()) schema("--p is required");
  const TimeScale scale = parse_scale(o.scale);
  const ScalarCoefficient p = coefficient_from_json(parse_json_arg(o.p, "--p"));
  const double lo = std::min(o.from, o.to), hi = std::max(o.from, o.to);
  const Grid g = build_grid(scale, {lo, hi}, o.h);
  const LogValue v = hilger_log_exp(p, o.to, o.from, g);
  const RegressivityClass rc = regressivity_class(p, g);
  Result r;
  r.report = json{{"value", v.value()},
                  {"log_abs", finite_or_null(v.log_abs())},
                  {"sign", v.sign()},
                  {"from", o.from},
                  {"to", o.to},
                  {"regressivity", to_string(rc.kind)},
                  {"regressivity_witness", rc.witness}};
  if (o.to >= o.from) {
    const auto prof = hilger_log_profile(p, g, g.index_of(o.from));
    Table t{{"t", "value", "log_abs", "sign"}, {{}, {}, {}, {}}};
    const std::size_t start = g.index_of(o.from);
    for (std::size_t k = 0; k < prof.size(); ++k) {
      t.columns[0].push_back(g[start + k].t);
      t.columns[1].push_back(prof[k].value());
      t.columns[2].push_back(prof[k].log_abs());
      t.columns[3].push_back(prof[k].sign());
    }
    r.table = std::move(t);
  }
  return r;
}

Result run_solve(const Options& o) {
  const TimeScale scale = parse_scale(o.scale);
  const Grid g = make_grid(scale, o);
  if (o.system.empty() || o.x0.empty()) schema("--system and --x0 are required");
  const MatrixFunction a = system_from_json(parse_json_arg(o.system, "--system"), g);
  const VectorXd x0 = vector_from_json(parse_json_arg(o.x0, "--x0"), "--x0");
  if (x0.size() != a.dim) schema("--x0 has the wrong dimension");
  const Forcing f =
      forcing_from_json(o.forcing.empty() ? json(nullptr) : parse_json_arg(o.forcing, "--forcing"), a.dim);
  const Trajectory x = step_ivp(a, f, g.front(), x0, g);
  const RegressiveReport reg = regressive_check(a, g);
  Result r;
  r.report = json{{"grid", scale_summary(scale, g)},
                  {"residual", finite_or_null(residual(x, a, f))},
                  {"regressive", reg.regressive},
                  {"first_failure", reg.first_failure ? json(*reg.first_failure) : json(nullptr)},
                  {"sup_norm", x.sup_norm()}};
  r.table = trajectory_table(x);
  return r;
}

ProjectionFamily projection_for(const Options& o, const MatrixFunction& a, const Grid& g) {
  if (o.projection.empty() || o.projection == "spectral") {
    if (!a.constant) schema("spectral projections need a constant system; pass --projection");
    return spectral_projections(a(g.front()), g);
  }
  const MatrixXd p = matrix_from_json(parse_json_arg(o.projection, "--projection"), "--projection");
  if (p.rows() != a.dim) schema("--projection has the wrong size");
  return ProjectionFamily::constant_projection(p);
}

Result run_green(const Options& o) {
  const TimeScale scale = parse_scale(o.scale);
  const Grid g = make_grid(scale, o);
  Result r;
  if (!scale.is_syndetic() || o.diagnostic) {
    const NonSyndeticDiagnostic d = nonsyndetic_diagnostic(scale, g, o.b, o.gamma, o.lambda);
    r.report = json{{"mode", "weighted-norm-diagnostic"},
                    {"grid", scale_summary(scale, g)},
                    {"b", o.b},
                    {"gamma", o.gamma},
                    {"lambda", o.lambda},
                    {"monotone", d.monotone},
                    {"max_value", finite_or_null(d.max_value)},
                    {"log_max_value", d.running_max.back()},
                    {"literal_delta_integral", d.literal_sum}};
    r.table = Table{{"t", "log_profile", "log_running_max"}, {d.times, d.log_profile, d.running_max}};
    return r;
  }
  if (o.system.empty()) schema("--system is required");
  const MatrixFunction a = system_from_json(parse_json_arg(o.system, "--system"), g);
  const ProjectionFamily p = projection_for(o, a, g);
  const GreenOperator op(a, p, scale, g);
  const Forcing f = forcing_from_json(
      o.forcing.empty() ? json(std::vector<double>(std::size_t(a.dim), 1.0)) : parse_json_arg(o.forcing, "--forcing"),
      a.dim);
  const GreenResult gr = op.apply(f);
  const NormEstimate est = op.norm_estimate();
  const GreenVerification ver = op.verify(f, o.verify_tol);
  r.report = json{{"mode", "green"},
                  {"grid", scale_summary(scale, g)},
                  {"norm_estimate", est.value},
                  {"norm_tail", est.tail},
                  {"truncated", op.truncated()},
                  {"stabilized", op.stabilized()},
                  {"certified", gr.certified},
                  {"max_tail", gr.max_tail},
                  {"verify", json{{"residual", finite_or_null(ver.residual)},
                                  {"tol", o.verify_tol},
                                  {"pass", ver.pass},
                                  {"reason", ver.reason}}}};
  Table t = trajectory_table(gr.trajectory);
  t.header.push_back("tail_bound");
  t.columns.push_back(gr.tail_bound);
  r.table = std::move(t);
  return r;
}

json contraction_json(const ContractionReport& c) {
  return json{{"L", c.l},
              {"h", c.h},
              {"c", c.c},
              {"beta", c.beta},
              {"lambda", c.lambda},
              {"a_priori_bound", c.a_priori_bound},
              {"iterations", c.iterations},
              {"update", c.update},
              {"ratios", c.ratios},
              {"sup_norm", c.sup_norm},
              {"residual", finite_or_null(c.residual)},
              {"residual_tol", c.residual_tol},
              {"residual_ok", c.residual_ok},
              {"converged", c.converged},
              {"a_posteriori_error", c.a_posteriori_error},
              {"max_tail", c.max_tail},
              {"message", c.message}};
}

Result run_bounded(const Options& o) {
  const TimeScale scale = parse_scale(o.scale);
  const Grid g = make_grid(scale, o);
  if (o.system.empty() || o.nonlin.empty()) schema("--system and --nonlin are required");
  const MatrixFunction a = system_from_json(parse_json_arg(o.system, "--system"), g);
  const NonlinearityModel model = nonlinearity_from_json(parse_json_arg(o.nonlin, "--nonlin"), a.dim);
  const SolverOptions so = solver_options(o);
  BoundedSolution sol{Trajectory{g, MatrixXd()}, {}};
  std::string path;
  if (o.projection.empty() && a.constant && !model.ball_radius) {
    GrowthBound gb;
    gb.a = [model](double t, const VectorXd& x) { return model(t, x); };
    for (const auto& c : model.components) {
      gb.lambda0 += c.c;
      gb.beta0 += c.h;
    }
    sol = hyperbolic_bounded_solve(a(g.front()), gb, scale, g, so);
    path = "hyperbolic";
  } else {
    const ProjectionFamily p = projection_for(o, a, g);
    std::vector<GreenOperator> greens;
    for (std::size_t j = 0; j < std::max<std::size_t>(1, model.components.size()); ++j) {
      greens.emplace_back(a, p, scale, g);
    }
    sol = fixed_point_solve(greens, model, so);
    path = "contraction";
  }
  Result r;
  r.report = contraction_json(sol.report);
  r.report["path"] = path;
  r.report["grid"] = scale_summary(scale, g);
  if (!sol.report.converged || !sol.report.residual_ok) {
    r.code = kExitNumerical;
  } else {
    r.table = trajectory_table(sol.trajectory);
  }
  return r;
}

Result run_decay(const Options& o) {
  const TimeScale scale = parse_scale(o.scale);
  const Grid g = make_grid(scale, o);
  if (o.model.empty()) schema("--model is required");
  const DecayScenario s = decay_from_json(parse_json_arg(o.model, "--model"));
  const DecaySolution sol = regular_decay_solve(s.b, s.l, s.model, scale, g, solver_options(o));
  const DecayReport& d = sol.report;
  Result r;
  r.report = json{{"gamma", d.gamma},
                  {"lambda", d.lambda},
                  {"C_gamma_lambda", d.c_gamma_lambda},
                  {"component_constants", d.component_constants},
                  {"branches", d.branches},
                  {"kappa", d.kappa},
                  {"iterations", d.iterations},
                  {"update", d.update},
                  {"converged", d.converged},
                  {"C", d.c},
                  {"decay_exponent", finite_or_null(d.decay_exponent)},
                  {"residual", finite_or_null(d.residual)},
                  {"residual_tol", d.residual_tol},
                  {"residual_ok", d.residual_ok},
                  {"max_weighted_tail", d.max_weighted_tail},
                  {"message", d.message},
                  {"grid", scale_summary(scale, g)}};
  if (!d.converged || !d.residual_ok) {
    r.code = kExitNumerical;
  } else {
    r.table = trajectory_table(sol.trajectory);
  }
  return r;
}

Result run_lyap(const Options& o) {
  const TimeScale scale = parse_scale(o.scale);
  const Grid g = make_grid(scale, o);
  if (o.system.empty()) schema("--system is required");
  const MatrixFunction a = system_from_json(parse_json_arg(o.system, "--system"), g);
  TsExponentOptions opts;
  opts.a_max = o.a_max;
  const FundamentalSystem phi = fundamental_system(a, g);
  const RegularityDefect d = regularity_defect(a, phi, scale, g.front(), opts, o.det_quotient_alpha);
  Result r;
  json exps = json::array(), bands = json::array(), classic = json::array();
  for (const auto& e : d.columns.exponents) {
    exps.push_back(e.value);
    bands.push_back(e.band);
  }
  for (const auto& col : phi.log_norms) classic.push_back(classic_exponent(col, g).value);
  r.report = json{{"exponents", exps},
                  {"S", d.columns.s},
                  {"alpha_exponent", d.nonnegative == TriState::Indeterminate ? json(nullptr)
                                                                               : json(d.rhs.value)},
                  {"sum_exponent", d.nonnegative == TriState::Indeterminate ? json(nullptr)
                                                                             : json(d.lhs.value)},
                  {"defect", d.nonnegative == TriState::Indeterminate ? json(nullptr) : json(d.defect)},
                  {"bands", json{{"exponents", bands}, {"S", d.columns.band}, {"defect", d.band}}},
                  {"nonnegative", to_string(d.nonnegative)},
                  {"classic_exponents", classic},
                  {"det_quotient_alpha", o.det_quotient_alpha},
                  {"message", d.message},
                  {"grid", scale_summary(scale, g)}};
  Table t{{"t"}, {g.times()}};
  for (int j = 0; j < phi.dim(); ++j) {
    t.header.push_back("log_norm" + std::to_string(j));
    t.columns.push_back(phi.log_norms[std::size_t(j)]);
  }
  r.table = std::move(t);
  return r;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::InvalidArgument, "cannot write " + path.string());
  f << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"chronoscale: dynamic equations on time scales", "chronoscale"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(0, 1);
  Options o;
  std::string scenario_path;
  app.add_option("--scenario", scenario_path, "JSON scenario file {\"command\": ..., options}");

  auto common = [&](CLI::App* c, bool needs_window) {
    c->add_option("--scale", o.scale, "time-scale descriptor (see `list`)")->required();
    auto* w = c->add_option("--window", o.window, "window a,b");
    if (needs_window) w->required();
    c->add_option("--h", o.h, "dense grid step")->capture_default_str();
    c->add_option("--out", o.out, "output directory");
  };
  auto solver = [&](CLI::App* c) {
    c->add_option("--tol", o.tol, "successive-update tolerance")->capture_default_str();
    c->add_option("--residual-tol", o.residual_tol, "residual gate")->capture_default_str();
    c->add_option("--max-iter", o.max_iter, "iteration cap")->capture_default_str();
    c->add_option("--seed", o.seed, "seed for constant spot checks")->capture_default_str();
  };

  auto* scale = app.add_subcommand("scale", "grid of a time-scale window");
  common(scale, true);
  auto* exp = app.add_subcommand("exp", "Hilger exponential e_p(to, from)");
  common(exp, false);
  exp->add_option("--p", o.p, "coefficient (number or JSON object)")->required();
  exp->add_option("--from", o.from, "s")->required();
  exp->add_option("--to", o.to, "t")->required();
  auto* solve = app.add_subcommand("solve", "forward IVP x^D = A x + f");
  common(solve, true);
  solve->add_option("--system", o.system, "system JSON")->required();
  solve->add_option("--x0", o.x0, "initial value JSON array")->required();
  solve->add_option("--forcing", o.forcing, "forcing JSON array");
  auto* green = app.add_subcommand("green", "Green operator, or the weighted-norm diagnostic");
  common(green, true);
  green->add_option("--system", o.system, "system JSON");
  green->add_option("--projection", o.projection, "projection matrix JSON or 'spectral'");
  green->add_option("--forcing", o.forcing, "forcing JSON array (default all ones)");
  green->add_option("--verify-tol", o.verify_tol, "residual tolerance of the check")->capture_default_str();
  green->add_flag("--diagnostic", o.diagnostic, "weighted-norm diagnostic on any scale");
  green->add_option("--b", o.b, "diagnostic exponent b")->capture_default_str();
  green->add_option("--gamma", o.gamma, "diagnostic forcing weight")->capture_default_str();
  green->add_option("--lambda", o.lambda, "diagnostic solution weight")->capture_default_str();
  auto* bounded = app.add_subcommand("bounded", "bounded solution by contraction");
  common(bounded, true);
  solver(bounded);
  bounded->add_option("--system", o.system, "system JSON")->required();
  bounded->add_option("--nonlin", o.nonlin, "nonlinearity JSON")->required();
  bounded->add_option("--projection", o.projection, "projection matrix JSON or 'spectral'");
  auto* decay = app.add_subcommand("decay", "exponentially decaying solution");
  common(decay, true);
  solver(decay);
  decay->add_option("--model", o.model, "{B, alpha, beta, gamma, c1, c2, h, L}")->required();
  auto* lyap = app.add_subcommand("lyap", "Lyapunov exponents and the regularity defect");
  common(lyap, true);
  lyap->add_option("--system", o.system, "system JSON")->required();
  lyap->add_option("--a-max", o.a_max, "upper end of the exponent search")->capture_default_str();
  lyap->add_flag("--det-quotient-alpha", o.det_quotient_alpha, "use det(E + mu A)/mu");
  auto* list = app.add_subcommand("list", "builtin catalog");

  std::string command = "chronoscale";
  if (!args.empty() && !args.front().empty() && args.front()[0] != '-') command = args.front();
  auto report_error = [&](int code, const std::string& kind, const std::string& msg) {
    const json diag{{"error", kind}, {"message", msg}, {"command", command}, {"exit_code", code}};
    err << diag.dump(2) << "\n";
    if (!o.out.empty()) {
      try {
        std::filesystem::create_directories(o.out);
        write_file(std::filesystem::path(o.out) / (command + ".json"), diag.dump(2) + "\n");
      } catch (const std::exception&) {
      }
    }
    return code;
  };

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report_error(kExitSchema, "usage", e.what());
  }

  if (!scenario_path.empty()) {
    if (app.get_subcommands().size() > 0) return report_error(kExitSchema, "usage", "--scenario takes no subcommand");
    std::ifstream f(scenario_path);
    if (!f) return report_error(kExitSchema, "usage", "cannot read " + scenario_path);
    try {
      const json s = json::parse(f);
      return run(scenario_arguments(s), out, err);
    } catch (const json::exception& e) {
      return report_error(kExitSchema, "invalid-argument", std::string("scenario: ") + e.what());
    } catch (const Error& e) {
      return report_error(exit_code(e.kind()), to_string(e.kind()), e.what());
    }
  }
  if (app.get_subcommands().empty()) {
    out << app.help();
    return kExitSchema;
  }
  command = app.get_subcommands().front()->get_name();

  try {
    if (list->parsed()) {
      out << list_builtins().dump(2) << "\n";
      return kExitOk;
    }
    Result r;
    if (scale->parsed()) r = run_scale(o);
    else if (exp->parsed()) r = run_exp(o);
    else if (solve->parsed()) r = run_solve(o);
    else if (green->parsed()) r = run_green(o);
    else if (bounded->parsed()) r = run_bounded(o);
    else if (decay->parsed()) r = run_decay(o);
    else r = run_lyap(o);
    r.report["command"] = command;
    r.report["exit_code"] = r.code;
    const std::string report = r.report.dump(2) + "\n";
    if (!o.out.empty()) {
      std::filesystem::create_directories(o.out);
      const std::filesystem::path dir(o.out);
      write_file(dir / (command + ".json"), report);
      if (r.table) write_file(dir / (command + ".csv"), format_csv(r.table->header, r.table->columns));
      out << report;
    } else if (r.table || r.code != kExitOk) {
      if (r.table) out << format_csv(r.table->header, r.table->columns);
      err << report;
    } else {
      out << report;
    }
    return r.code;
  } catch (const Error& e) {
    return report_error(exit_code(e.kind()), to_string(e.kind()), e.what());
  } catch (const json::exception& e) {
    return report_error(kExitSchema, "invalid-argument", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(kExitSchema, "invalid-argument", e.what());
  }
}

}  // namespace chronoscale::cli
