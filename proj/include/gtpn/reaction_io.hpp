#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gtpn/molgraph.hpp"

namespace gtpn {

// One line of a dataset file that failed validation, with the reason.
struct LoadWarning {
  size_t line = 0;
  std::string id;
  std::string reason;
};

struct LoadResult {
  std::vector<ReactionRecord> records;
  std::vector<LoadWarning> warnings;
};

// Reaction SMILES: `reactants>reagents>products`, one per line. Reagent atoms
// are merged into the input graph with their reagent flag set. Blank lines and
// lines starting with '#' are skipped. Records failing validation (duplicate
// map numbers, unmapped product atoms, product atoms absent from the input,
// edits touching reagent atoms) are dropped with a warning.
LoadResult load_reaction_smiles(std::istream& in);

// JSON-lines records: one object per line with "id", "input" and "product"
// graphs given explicitly as {"atoms":[{"z","charge","h","map","reagent"}...],
// "bonds":[[i,j,"single"]...]}. Same validation as the SMILES form.
LoadResult load_reaction_jsonl(std::istream& in);

// Dispatch by extension: .smi/.rsmi -> reaction SMILES, .jsonl -> JSON lines.
LoadResult load_reactions(const std::string& path);

std::string reaction_record_to_jsonl(const ReactionRecord& rec);
void write_reaction_jsonl(std::ostream& out, const std::vector<ReactionRecord>& records);

// Renders input+product back to `reactants>reagents>products`. Product side
// keeps the atom maps; reagents are split out of the input graph.
std::string reaction_record_to_smiles(const ReactionRecord& rec);

// Shared validation: populates rec.gold via triple extraction and checks the
// invariants above. Returns an explanation on failure, empty string on success.
std::string validate_and_extract(ReactionRecord& rec);

}  // namespace gtpn
