#include "gtpn/model.hpp"

#include "gtpn/rng.hpp"

namespace gtpn {

namespace {

// Weight matrices get a name-keyed stream so initialization does not depend
// on registration order; biases start at zero.
void add_weight(ParamStore& ps, Rng& root, const std::string& name, int out, int in) {
  Rng r = root.fork(fnv1a64(name));
  ps.register_glorot(name, out, in, r);
}

void add_dense(ParamStore& ps, Rng& root, const std::string& prefix, int out, int in) {
  add_weight(ps, root, prefix + ".w", out, in);
  ps.register_zeros(prefix + ".b", 1, out);
}

}  // namespace

Model::Model(const Config& config) : cfg(config) {
  validate(cfg);
  Rng root(cfg.seed);

  const int feat = feature_dim();
  const int st = cfg.state_dim;
  const int be = cfg.bond_embed_dim;
  const int pd = cfg.pair_dim;
  const int gd = cfg.gru_dim;

  add_weight(params, root, "embed.atom", element_vocab_size(), cfg.atom_embed_dim);
  add_weight(params, root, "embed.bond", kNumBondTypes, be);

  add_dense(params, root, "gnn.init", st, feat);
  add_dense(params, root, "gnn.msg", st, 2 * st + be);
  add_dense(params, root, "gnn.hw.main", st, 2 * st + feat);
  add_dense(params, root, "gnn.hw.gate", st, 2 * st + feat);

  add_dense(params, root, "pair.attn.r", cfg.attn_hidden_dim, st + be);
  add_dense(params, root, "pair.attn.score", 1, cfg.attn_hidden_dim);
  const int z_in = gd + st + (cfg.global_pairs ? st : 0) + be;
  add_dense(params, root, "pair.z", pd, z_in);
  add_dense(params, root, "pair.score.l1", cfg.score_hidden_dim, pd);
  add_dense(params, root, "pair.score.l2", 1, cfg.score_hidden_dim);
  add_weight(params, root, "pair.pool.w", cfg.pool_dim, pd);

  add_dense(params, root, "policy.signal.l1", cfg.head_hidden_dim, gd + cfg.pool_dim);
  add_dense(params, root, "policy.signal.l2", 1, cfg.head_hidden_dim);
  add_dense(params, root, "policy.bond.l1", cfg.head_hidden_dim, gd + pd + be);
  add_dense(params, root, "policy.bond.l2", 1, cfg.head_hidden_dim);
  add_dense(params, root, "policy.gru.wr", gd, pd + gd);
  add_dense(params, root, "policy.gru.wz", gd, pd + gd);
  add_dense(params, root, "policy.gru.wn", gd, pd + gd);
  params.register_zeros("policy.h0", 1, gd);

  add_dense(params, root, "value.l1", cfg.value_hidden_dim, pd);
  add_dense(params, root, "value.l2", 1, cfg.value_hidden_dim);
}

Var ModelCtx::p(const std::string& name) {
  auto it = leased_.find(name);
  if (it != leased_.end()) return it->second;
  Var v = tape.param(name, params.value(name));
  leased_.emplace(name, v);
  return v;
}

Var ModelCtx::dense(Var x, const std::string& prefix) {
  return linear(x, p(prefix + ".w"), p(prefix + ".b"));
}

Var ModelCtx::mlp2(Var x, const std::string& prefix) {
  Var h = relu(dense(x, prefix + ".l1"));
  if (h.cols() == x.cols()) h = add(h, x);
  Var out = dense(h, prefix + ".l2");
  if (out.cols() == h.cols()) out = add(out, h);
  return out;
}

}  // namespace gtpn
