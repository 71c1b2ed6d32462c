#pragma once

#include <cstdint>
#include <string>

#include "mip/function.hpp"
#include "mip/variation.hpp"

namespace mip {

// Flags a scenario file may assert about its inputs. even_symmetry is
// rejected when decidably false for the given pair; support_regularity is
// taken on trust and gates boundary-moment work downstream.
struct DeclaredFlags {
  bool even_symmetry = false;
  bool support_regularity = false;
};

// A validated problem instance: the function pair, determinant mode, run
// defaults, and a normalized echo of the parsed file. Not default
// constructible; obtain one from parse_scenario.
struct Scenario {
  std::string name;
  int dim;
  LogConcaveFunc f;
  LogConcaveFunc g;
  DetMode mode;
  double det_target;
  DeclaredFlags flags;
  std::int64_t budget;
  std::uint64_t seed;
  std::string echo;
};

// Strict parse: unknown keys are rejected, every body and matrix must agree
// with the top-level dim, and declared flags are checked against the
// function families where decidable. origin labels error messages.
Scenario parse_scenario_text(const std::string& text, const std::string& origin);

Scenario parse_scenario(const std::string& path);

}  // namespace mip
