#pragma once

// Built-in time scales and the JSON time-scale descriptor.
//
//   "real"                          the whole real line
//   "integers:h"                    hZ (h defaults to 1)
//   "naturals:h"                    h{0, 1, 2, ...}
//   "union"                         [0,1] together with {2, 3, 4, ...}
//   "geometric:q"                   {q^n : n >= 0}, q > 1 (not syndetic)
//   "tower3"                        {3^(3^n) : n >= 0} (not syndetic)
//   "random-syndetic:seed,mu_max"   seeded random points/intervals, gaps <= mu_max
//
// JSON form: {"segments": [[a, b], ...],
//             "pattern": {"kind": "periodic", "period": p, "start": s, "cell": [[l, r], ...]}
//                      | {"kind": "sequence", "points": [...]}
//                      | {"kind": "sequence", "builtin": "tower3" | "geometric:q"}}
// Endpoints may be numbers, or the strings "inf" / "-inf".

#include "chronoscale/timescale.hpp"

#include <json.hpp>

#include <string>

namespace chronoscale {

/// Parses a builtin name or a JSON descriptor (text starting with '{').
TimeScale parse_scale(const std::string& descriptor);
TimeScale scale_from_json(const nlohmann::json& descriptor);

TimeScale real_line();
TimeScale integers(double h = 1.0);
TimeScale naturals(double h = 1.0);
TimeScale union_scale();
TimeScale geometric(double q);
TimeScale tower3();
TimeScale random_syndetic(std::uint64_t seed, double mu_max);

/// Catalog of builtin scales with parameter documentation.
nlohmann::json scale_catalog();

}  // namespace chronoscale
