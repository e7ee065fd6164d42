#pragma once

#include <map>
#include <string>

#include "gtpn/config.hpp"
#include "gtpn/param_store.hpp"
#include "gtpn/tape.hpp"

namespace gtpn {

// Owns the parameter store for one model instance. Parameter initialization
// is a pure function of (config, seed): each tensor is drawn from a stream
// forked off the seed by parameter name, so registration order is irrelevant.
struct Model {
  Config cfg;
  ParamStore params;

  explicit Model(const Config& cfg);

  int feature_dim() const { return cfg.atom_embed_dim + kNumAtomAttributes; }
};

// Leases parameters onto a tape for one forward/backward episode. Each named
// parameter becomes a single tape leaf no matter how often it is used, so
// gradient accumulation is automatic.
class ModelCtx {
 public:
  ModelCtx(const Config& cfg, ParamStore& params, Tape& tape)
      : cfg(cfg), params(params), tape(tape) {}

  const Config& cfg;
  ParamStore& params;
  Tape& tape;

  // The tape leaf for a named parameter (created on first use).
  Var p(const std::string& name);

  // x·Wᵀ+b with W = `prefix.w`, b = `prefix.b`.
  Var dense(Var x, const std::string& prefix);
  // Two dense layers (ReLU after the first), hidden width set at registration.
  // A layer adds an identity skip whenever its input and output widths match.
  Var mlp2(Var x, const std::string& prefix);

 private:
  std::map<std::string, Var> leased_;
};

}  // namespace gtpn
