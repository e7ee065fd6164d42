#include "gtpn/pairnet.hpp"

#include <algorithm>

namespace gtpn {

namespace {

constexpr double kMaskFill = -1e30;

// Endpoint gathers plus bond-embedding rows shared by attention and pair
// representation: (x_i + x_j) [Q x state] and e_ij [Q x bond_embed].
struct PairInputs {
  Var xsum;
  Var e;
};

PairInputs gather_pair_inputs(ModelCtx& ctx, const MolGraph& g, Var x,
                              const std::vector<std::pair<int, int>>& pairs) {
  std::vector<int> left, right, bond_ids;
  left.reserve(pairs.size());
  right.reserve(pairs.size());
  bond_ids.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    left.push_back(i);
    right.push_back(j);
    bond_ids.push_back(static_cast<int>(g.bond(i, j)));
  }
  Var xsum = add(gather_rows(x, std::move(left)), gather_rows(x, std::move(right)));
  Var e = gather_rows(ctx.p("embed.bond"), std::move(bond_ids));
  return {xsum, e};
}

// c_i for every node: softmax-weighted sum of the other nodes' states, with
// weights from a relation network over every unordered node pair.
Var attention_contexts(ModelCtx& ctx, const MolGraph& g, Var x) {
  int n = g.num_atoms();
  std::vector<std::pair<int, int>> all_pairs;
  all_pairs.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all_pairs.emplace_back(i, j);
  if (all_pairs.empty()) {
    // Single node: no partners; define its context as its own state, which is
    // what the masked softmax (uniform over an all-masked row) degrades to.
    return x;
  }
  PairInputs in = gather_pair_inputs(ctx, g, x, all_pairs);
  Var r = relu(ctx.dense(concat_cols({in.xsum, in.e}), "pair.attn.r"));
  Var logits = ctx.dense(r, "pair.attn.score");  // [Q x 1]
  Var mat = scatter_pairs_symmetric(logits, std::move(all_pairs), n, kMaskFill);
  Var weights = softmax_rows(mat);
  return matmul(weights, x);
}

}  // namespace

int PairBatch::row_of(std::pair<int, int> pair) const {
  auto it = std::lower_bound(pairs.begin(), pairs.end(), pair);
  if (it == pairs.end() || *it != pair) return -1;
  return static_cast<int>(it - pairs.begin());
}

std::vector<std::pair<int, int>> pair_universe(const MolGraph& g) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < g.num_atoms(); ++i) {
    if (g.atom(i).is_reagent) continue;
    for (int j = i + 1; j < g.num_atoms(); ++j) {
      if (g.atom(j).is_reagent) continue;
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

PairBatch score_pairs(ModelCtx& ctx, const MolGraph& g, Var x, Var h) {
  PairBatch batch;
  batch.pairs = pair_universe(g);
  int p = batch.size();
  if (p == 0) {
    batch.z = ctx.tape.constant(Tensor(0, ctx.cfg.pair_dim));
    batch.s = ctx.tape.constant(Tensor(0, 1));
    return batch;
  }
  PairInputs in = gather_pair_inputs(ctx, g, x, batch.pairs);
  std::vector<Var> z_in{broadcast_row(h, p), in.xsum};
  if (ctx.cfg.global_pairs) {
    Var contexts = attention_contexts(ctx, g, x);
    std::vector<int> left, right;
    for (const auto& [i, j] : batch.pairs) {
      left.push_back(i);
      right.push_back(j);
    }
    z_in.push_back(
        add(gather_rows(contexts, std::move(left)), gather_rows(contexts, std::move(right))));
  }
  z_in.push_back(in.e);
  batch.z = relu(ctx.dense(concat_cols(z_in), "pair.z"));
  batch.s = ctx.mlp2(batch.z, "pair.score");
  return batch;
}

std::vector<int> select_top_k(const PairBatch& batch,
                              const std::set<std::pair<int, int>>& consumed, int k) {
  std::vector<int> rows;
  rows.reserve(batch.pairs.size());
  for (int r = 0; r < batch.size(); ++r)
    if (!consumed.count(batch.pairs[r])) rows.push_back(r);
  const Tensor& s = batch.s.value();
  // Score descending; ties broken by (i, j) ascending == row ascending.
  std::stable_sort(rows.begin(), rows.end(), [&](int a, int b) {
    if (s.at(a, 0) != s.at(b, 0)) return s.at(a, 0) > s.at(b, 0);
    return a < b;
  });
  if (static_cast<int>(rows.size()) > k) rows.resize(k);
  return rows;
}

Var pooled_rep(ModelCtx& ctx, const PairBatch& batch, const std::vector<int>& rows) {
  if (rows.empty()) return ctx.tape.constant(Tensor(1, ctx.cfg.pool_dim));
  Var zk = gather_rows(batch.z, rows);
  return mean_rows(linear(zk, ctx.p("pair.pool.w")));
}

Var value_estimate(ModelCtx& ctx, const PairBatch& batch, const std::vector<int>& rows) {
  Var pooled = rows.empty() ? ctx.tape.constant(Tensor(1, ctx.cfg.pair_dim))
                            : mean_rows(gather_rows(batch.z, rows));
  return ctx.mlp2(pooled, "value");
}

}  // namespace gtpn
