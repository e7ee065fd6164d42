#pragma once

#include <vector>

#include "gtpn/policy.hpp"
#include "gtpn/reaction_io.hpp"

namespace gtpn {

// One emitted sub-action tuple (ξ, u, v, b); a stop emits (0, -1, -1, null).
struct DecodedAction {
  int signal = 0;
  int u = -1;
  int v = -1;
  BondType bond = BondType::kNull;
};

struct Candidate {
  std::vector<DecodedAction> actions;
  double score = 0;        // length-normalized joint log-probability
  bool continued = false;  // reached the step limit without emitting ξ=0
  MolGraph graph;          // fully edited input graph (reagents included)
  MolGraph product;        // graph minus all-reagent components
};

struct RankedCandidates {
  std::vector<Candidate> items;  // score descending
};

// Three-phase beam search: per step every live beam first expands over the
// two signals, then over its top-K atom pairs, then over the bond vocabulary
// (the pair's current bond excluded); each phase keeps the best `beam_width`
// states by length-normalized joint log-probability. Finished beams pass
// through phases unchanged and keep competing on score. Beams maintain
// independent episode states; a beam that picks ξ=1 with no available pair
// is dropped as unrealizable.
RankedCandidates beam_search(ModelCtx& ctx, const MolGraph& input, int beam_width);

// The product view of an edited graph: connected components that contain at
// least one non-reagent atom.
MolGraph product_view(const MolGraph& g);

// Drops candidates whose product fails the valence check, then deduplicates
// isomorphic products (map numbers ignored) keeping the first — i.e. the
// highest-scored — representative. Order is otherwise preserved.
RankedCandidates postprocess(const RankedCandidates& in, const ValenceTable& table);

// True iff the candidate graph reproduces gold bonding exactly over the atoms
// that map into the gold product: every gold bond present with the same type
// and no extra bonds between mapped atoms. Leftover fragments outside the
// mapped atom set are ignored.
bool match_gold(const MolGraph& candidate, const ReactionRecord& record);

// Rank (0-based) of the first candidate matching gold, -1 when none does.
int gold_rank(const RankedCandidates& ranked, const ReactionRecord& record);

}  // namespace gtpn
