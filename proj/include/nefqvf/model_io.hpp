#pragma once

// Plain-text model files, one `key = value` per line; `#` starts a comment.
//
//   family     = binomial{m=1}        family tag (see families.hpp)
//   kind       = kin                  kin | additive (default kin)
//   null_means = 0.5                  N values, space or comma separated
//   atom       = 1 : 0.75             probability : N coordinates (repeatable)
//   sampler    = iid-uniform 0.2 0.8  instead of atoms, see below
//   N          = 1                    optional; required to broadcast a
//                                     single null mean to every coordinate
//
// Samplers draw every coordinate independently:
//   iid-uniform LO HI       uniform on (LO, HI)
//   iid-two-point A B P     A with probability P, otherwise B
// Numbers may be written as decimals or as fractions p/q.

#include <iosfwd>
#include <string>
#include <vector>

#include "nefqvf/ldlr.hpp"

namespace nefqvf {

struct ModelSpec {
  FamilySpec family = FamilySpec::gaussian();
  SpikeKind kind = SpikeKind::kKin;
  std::vector<double> null_means;
  SpikePrior prior;
  std::string source;

  KinSpikedModel kin() const;
  AdditiveSpikedModel additive() const;
};

// Throws ConfigError naming the offending key (and line) on malformed input.
ModelSpec parse_model(std::istream& in, const std::string& source = "<model>");
ModelSpec load_model(const std::string& path);

// Atom-mode models only; the output parses back to the same model.
std::string format_model(const ModelSpec& model);

// Decimal or p/q; throws ConfigError mentioning `what`.
double parse_number(const std::string& text, const std::string& what);

}  // namespace nefqvf
