#pragma once

#include "gtpn/model.hpp"
#include "gtpn/molgraph.hpp"
#include "gtpn/tape.hpp"

namespace gtpn {

// Per-atom input features [V x (atom_embed + 5)]: the element embedding row
// concatenated with the normalized bonding/charge attributes. Attributes are
// constants; gradient flows into the embedding table only.
Var atom_features(ModelCtx& ctx, const MolGraph& g);

// x⁰ = ReLU(W·f + b), one row per atom.
Var initial_states(ModelCtx& ctx, Var features);

// One synchronous message-passing step for every node: per directed edge
// (receiver, sender) the message is ReLU(W·[x_recv, x_send, e_bond] + b);
// messages are averaged per receiver (isolated nodes get a zero message);
// states pass through a highway gate over [x, m, f].
Var message_step(ModelCtx& ctx, const MolGraph& g, Var x, Var features);

// Full encoder: initial states plus cfg.mp_steps message-passing steps.
Var encode(ModelCtx& ctx, const MolGraph& g);

// State refresh after a bond edit at (u,v): one synchronous step whose result
// is kept only for u and v (their neighborhoods changed), then one full step
// so the rest of the graph sees the new structure. `g` is the edited graph.
Var refresh_states(ModelCtx& ctx, const MolGraph& g, Var x, int u, int v);

}  // namespace gtpn
