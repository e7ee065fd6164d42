#include "gtpn/gnn.hpp"

namespace gtpn {

Var atom_features(ModelCtx& ctx, const MolGraph& g) {
  int n = g.num_atoms();
  std::vector<int> elem_rows(n);
  Tensor attrs(n, kNumAtomAttributes);
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atom(i);
    elem_rows[i] = element_vocab_index(a.element);
    auto row = atom_attributes(a);
    for (int k = 0; k < kNumAtomAttributes; ++k) attrs.at(i, k) = row[k];
  }
  Var embedded = gather_rows(ctx.p("embed.atom"), std::move(elem_rows));
  return concat_cols({embedded, ctx.tape.constant(std::move(attrs))});
}

Var initial_states(ModelCtx& ctx, Var features) {
  return relu(ctx.dense(features, "gnn.init"));
}

Var message_step(ModelCtx& ctx, const MolGraph& g, Var x, Var features) {
  int n = g.num_atoms();
  Var m;
  std::vector<int> recv, send, bond_ids;
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, b] : g.neighbors(i)) {
      recv.push_back(i);
      send.push_back(j);
      bond_ids.push_back(static_cast<int>(b));
    }
  }
  if (recv.empty()) {
    m = ctx.tape.constant(Tensor(n, ctx.cfg.state_dim));
  } else {
    Var xi = gather_rows(x, recv);
    Var xj = gather_rows(x, std::move(send));
    Var e = gather_rows(ctx.p("embed.bond"), std::move(bond_ids));
    Var msgs = relu(ctx.dense(concat_cols({xi, xj, e}), "gnn.msg"));
    m = segment_mean_rows(msgs, std::move(recv), n);
  }
  Var hw_in = concat_cols({x, m, features});
  Var cand = relu(ctx.dense(hw_in, "gnn.hw.main"));
  Var gate = sigmoid(ctx.dense(hw_in, "gnn.hw.gate"));
  Var keep = add_const(scale(gate, -1.0), 1.0);
  return add(mul(gate, cand), mul(keep, x));
}

Var encode(ModelCtx& ctx, const MolGraph& g) {
  Var f = atom_features(ctx, g);
  Var x = initial_states(ctx, f);
  for (int t = 0; t < ctx.cfg.mp_steps; ++t) x = message_step(ctx, g, x, f);
  return x;
}

Var refresh_states(ModelCtx& ctx, const MolGraph& g, Var x, int u, int v) {
  Var f = atom_features(ctx, g);
  Var local = message_step(ctx, g, x, f);
  std::vector<int> touched{u, v};
  if (u > v) std::swap(touched[0], touched[1]);
  Var x_local = replace_rows(x, gather_rows(local, touched), touched);
  return message_step(ctx, g, x_local, f);
}

}  // namespace gtpn
