// Synthetic reaction generator for tests and small-scale training runs.
//
// Each record is a random sparse molecular graph whose gold edit set is a
// deterministic function of the labeled graph. At every step the highest
// degree-sum unbonded pair that fits both elements' valences gains a bond
// (ties broken by element labels; graphs where a visible tie would decide
// anything are redrawn), and the number of steps is read off the first such
// pair's degree sum. A model therefore has to read degrees and labels out of
// the graph to predict the edits and to know when to stop; nothing about the
// rule is stored in the atoms themselves.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtpn/reaction_io.hpp"

namespace gtpn {

struct ToyTaskSpec {
  int min_nodes = 4;
  int max_nodes = 7;
  // Elements are drawn from the first `alphabet` entries of C, N, O, S, P,
  // restricted per atom to elements whose valence fits its bonds.
  int alphabet = 3;
  // Bond edits per reaction, 0 to 3. The generator redraws until the graph's
  // own rule yields exactly this many edits (the first taken pair's degree
  // sum decides: one edit below 5, two at 5, three at 6). 0 generates
  // no-edit records whose correct trajectory is to stop immediately.
  int changes = 1;
  // When set, a formed bond is double instead of single whenever the degree
  // sum of its endpoints is odd, so the bond sub-action also depends on
  // structure.
  bool vary_bond = false;
  double extra_edge_prob = 0.35;   // chance of each of two possible extra edges
  double reagent_prob = 0.25;      // chance of a detached spectator component
  uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument on nonsense
};

// Record `index` of the named split. Records are a pure function of
// (spec, split, index): generation order and dataset sizes do not matter.
ReactionRecord generate_toy_record(const ToyTaskSpec& spec, const std::string& split,
                                   uint64_t index);

std::vector<ReactionRecord> generate_toy_dataset(const ToyTaskSpec& spec,
                                                 const std::string& split, int count);

}  // namespace gtpn
