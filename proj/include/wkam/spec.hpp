#pragma once

// Problem files. Six blocks of `key = value` lines:
//
//   # comment
//   domain {
//     family = disk
//     radius = 1
//   }
//   hamiltonian { ... }  oblique { ... }  grid { ... }  run { ... }  output { ... }
//
// A JSON object with the same blocks (values as strings or numbers) is accepted
// too. Parsing fills defaults, validates every field and stores canonical value
// strings, so parse_spec(emit_spec(s)) == s.

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "wkam/geometry.hpp"
#include "wkam/grid.hpp"
#include "wkam/hamiltonian.hpp"

namespace wkam {

struct ProblemSpec {
  // block -> key -> canonical value
  std::map<std::string, std::map<std::string, std::string>> blocks;

  const std::string& text(const std::string& block, const std::string& key) const;
  double number(const std::string& block, const std::string& key) const;
  void set(const std::string& block, const std::string& key, const std::string& value);

  bool operator==(const ProblemSpec&) const = default;
};

// Throws Error(SpecError) naming the line and the field.
ProblemSpec parse_spec(std::string_view text);
std::string emit_spec(const ProblemSpec& spec);
std::string emit_spec_json(const ProblemSpec& spec);

const std::vector<std::string>& known_domain_families();
const std::vector<std::string>& known_hamiltonian_families();

struct Problem {
  ImplicitDomain domain;
  HamiltonianModel model;
  ObliqueField field;
  std::shared_ptr<const Grid> grid;
};

Problem build_problem(const ProblemSpec& spec);

// A validated 'x,y' field.
Vec2 spec_point(const ProblemSpec& spec, const std::string& block, const std::string& key);

}  // namespace wkam
