// SMILES subset: organic-subset atoms (B C N O P S F Cl Br I), aromatic
// lowercase b c n o p s, bracket atoms with charge / explicit H / atom map,
// bond symbols - = # :, branches, ring closures (digits and %nn), and '.'
// separated components. Stereochemistry and isotopes are recognized and
// rejected as unsupported; anything else malformed is a syntax error with a
// byte offset.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "gtpn/molgraph.hpp"

namespace gtpn {

class SmilesError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kUnsupported, kUnknownElement };

  SmilesError(Kind kind, size_t offset, const std::string& message)
      : std::runtime_error(message + " (at byte " + std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const { return kind_; }
  size_t offset() const { return offset_; }

 private:
  Kind kind_;
  size_t offset_;
};

MolGraph parse_smiles(std::string_view smiles);

// Emits a string that re-parses to an isomorphic graph (equal canonical hash
// with atom maps). Atoms needing charge, explicit H or a map use brackets;
// non-single bonds are always written explicitly (aromatic as ':').
std::string write_smiles(const MolGraph& g);

}  // namespace gtpn
