#pragma once

#include <string>

#include "sps2/matrix_system.hpp"

namespace sps2 {

// System-spec JSON:
// {"arc": [t-, t+], "disc_radius": r1, "sector_radius": r2,
//  "trunc": {"eps": K, "x": N},
//  "matrix": {"a11": [[k, n, re, im], ...], "a12": ..., "a21": ..., "a22": ...}}
// where each quadruple is the coefficient of eps^k x^n.
SystemSpec load_system(const std::string& path);
SystemSpec parse_system(const std::string& json_text);

// Canonical serialisation: keys ordered, coefficients sorted by (k, n),
// exact zero entries dropped.  save(load(s)) is byte-identical for
// canonicalised files.
std::string serialize_system(const SystemSpec& sys);
void save_system(const SystemSpec& sys, const std::string& path);

}  // namespace sps2
