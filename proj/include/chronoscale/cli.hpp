#pragma once

// Command-line front end: builtin registries, JSON decoding of systems,
// forcings and nonlinearities, and the subcommand runner behind the
// `chronoscale` executable.
//
// Exit codes: 0 success, 2 schema or argument error, 3 solver refusal,
// 4 numerical failure (divergence, uncertifiable tail, failed residual gate).

#include "chronoscale/dichotomy.hpp"
#include "chronoscale/error.hpp"
#include "chronoscale/hilger.hpp"
#include "chronoscale/solver.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace chronoscale::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitRefusal = 3;
inline constexpr int kExitNumerical = 4;

int exit_code(ErrorKind kind);

/// number | {"c": c, "sin": [amp, w, phase], "cos": [amp, w, phase], "exp": [amp, rate], "t": slope}
ScalarCoefficient coefficient_from_json(const json& j);

/// {"A": [[...]]} with number or coefficient entries, {"diag": [...]}, or
/// {"builtin": name, ...}. Some builtins depend on the grid (b-hat, rotated).
MatrixFunction system_from_json(const json& j, const Grid& grid);

/// Array of coefficients, one per component; null gives zero forcing.
Forcing forcing_from_json(const json& j, int dim);

/// {"components": [{"type": ..., ...}], "ball_radius": r}.
NonlinearityModel nonlinearity_from_json(const json& j, int dim);

/// {"B": [...], "alpha", "beta", "gamma", "c1", "c2", "h", "L": {...}}.
struct DecayScenario {
  Eigen::VectorXd b;
  DecayModel model;
  std::optional<MatrixFunction> l;
};
DecayScenario decay_from_json(const json& j);

/// Scales, systems, forcings, nonlinearities and coefficient forms.
json list_builtins();

/// Header row, then one row per entry; values at 17 significant digits.
std::string format_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

/// Runs one invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands a scenario object {"command": ..., "<option>": value, ...} into arguments.
std::vector<std::string> scenario_arguments(const json& scenario);

}  // namespace chronoscale::cli
