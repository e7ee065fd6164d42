#pragma once

#include <set>
#include <utility>
#include <vector>

#include "gtpn/model.hpp"
#include "gtpn/molgraph.hpp"
#include "gtpn/tape.hpp"

namespace gtpn {

// Scores for every unordered candidate atom pair of one graph. The candidate
// universe is all pairs (i < j) with neither atom flagged as reagent; it is a
// function of the atom set only, so rows line up across the steps of an
// episode even as bonds change.
struct PairBatch {
  std::vector<std::pair<int, int>> pairs;  // sorted (i, j), i < j
  Var z;  // [P x pair_dim] pair representations
  Var s;  // [P x 1] unnormalized scores

  int size() const { return static_cast<int>(pairs.size()); }
  int row_of(std::pair<int, int> pair) const;  // -1 when absent
};

std::vector<std::pair<int, int>> pair_universe(const MolGraph& g);

// Computes z and s for the whole universe given node states x and the
// recurrent state h [1 x gru]. With cfg.global_pairs, each node first gets an
// attention context over all other nodes (reagents included); the pair
// representation consumes the summed contexts of its endpoints.
PairBatch score_pairs(ModelCtx& ctx, const MolGraph& g, Var x, Var h);

// Rows of the top-K pairs by (score desc, i asc, j asc), skipping consumed
// pairs. Returns fewer than k rows when the universe runs out.
std::vector<int> select_top_k(const PairBatch& batch,
                              const std::set<std::pair<int, int>>& consumed, int k);

// g(Z_K): per-row linear map (no bias) then mean over the K rows -> [1 x pool].
// Zero vector when `rows` is empty.
Var pooled_rep(ModelCtx& ctx, const PairBatch& batch, const std::vector<int>& rows);

// V , estimated from the mean of the top-K pair representations -> [1 x 1].
Var value_estimate(ModelCtx& ctx, const PairBatch& batch, const std::vector<int>& rows);

}  // namespace gtpn
