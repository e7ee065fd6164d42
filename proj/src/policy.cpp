#include "gtpn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace gtpn {

namespace {

constexpr double kMaskFill = -1e30;

Var gru_cell(ModelCtx& ctx, Var h, Var zin) {
  Var in = concat_cols({zin, h});
  Var reset = sigmoid(ctx.dense(in, "policy.gru.wr"));
  Var update = sigmoid(ctx.dense(in, "policy.gru.wz"));
  Var cand = tanh_op(ctx.dense(concat_cols({zin, mul(reset, h)}), "policy.gru.wn"));
  Var keep = add_const(scale(update, -1.0), 1.0);
  return add(mul(update, h), mul(keep, cand));
}

int argmax_row(const Tensor& row) {
  int best = 0;
  for (int i = 1; i < row.cols(); ++i)
    if (row.at(0, i) > row.at(0, best)) best = i;
  return best;
}

}  // namespace

EpisodeState initial_state(ModelCtx& ctx, const MolGraph& g) {
  EpisodeState st;
  st.g = g;
  st.x = encode(ctx, st.g);
  st.h = ctx.p("policy.h0");
  return st;
}

StepEval eval_step(ModelCtx& ctx, const EpisodeState& st,
                   const std::vector<std::pair<int, int>>* pinned_topk) {
  StepEval ev;
  ev.pairs = score_pairs(ctx, st.g, st.x, st.h);
  if (pinned_topk != nullptr) {
    ev.topk.reserve(pinned_topk->size());
    for (const auto& pr : *pinned_topk) {
      int row = ev.pairs.row_of(pr);
      if (row < 0)
        throw std::invalid_argument("eval_step: pinned pair outside the universe");
      ev.topk.push_back(row);
    }
  } else {
    ev.topk = select_top_k(ev.pairs, st.consumed, ctx.cfg.top_k);
  }
  ev.pooled = pooled_rep(ctx, ev.pairs, ev.topk);
  ev.value = value_estimate(ctx, ev.pairs, ev.topk);
  Var logit = ctx.mlp2(concat_cols({st.h, ev.pooled}), "policy.signal");
  ev.logp_cont = scale(softplus(scale(logit, -1.0)), -1.0);  // log sigmoid(logit)
  ev.logp_stop = scale(softplus(logit), -1.0);               // log sigmoid(-logit)
  return ev;
}

Var pair_logprobs(ModelCtx& ctx, const StepEval& ev) {
  Var sel = gather_rows(ev.pairs.s, ev.topk);
  return log_softmax_rows(reshape(sel, 1, static_cast<int>(ev.topk.size())));
}

BondEval bond_logprobs(ModelCtx& ctx, const EpisodeState& st, const PairBatch& pairs,
                       int row) {
  BondEval ev;
  ev.candidates = ctx.cfg.bond_vocab;
  int b = static_cast<int>(ev.candidates.size());
  auto [u, v] = pairs.pairs[row];
  BondType old = st.g.bond(u, v);

  std::vector<int> cand_ids(b);
  for (int i = 0; i < b; ++i) {
    cand_ids[i] = static_cast<int>(ev.candidates[i]);
    if (ev.candidates[i] == old) ev.old_index = i;
  }
  Var e_cand = gather_rows(ctx.p("embed.bond"), std::move(cand_ids));
  Var e_old = broadcast_row(gather_rows(ctx.p("embed.bond"), {static_cast<int>(old)}), b);
  Var z_row = broadcast_row(gather_rows(pairs.z, {row}), b);
  Var h_rep = broadcast_row(st.h, b);
  Var logits = ctx.mlp2(concat_cols({h_rep, z_row, sub(e_cand, e_old)}), "policy.bond");
  logits = reshape(logits, 1, b);
  if (ev.old_index >= 0) {
    Tensor mask(1, b);
    mask.at(0, ev.old_index) = kMaskFill;
    logits = add(logits, ctx.tape.constant(std::move(mask)));
  }
  ev.logprobs = log_softmax_rows(logits);
  return ev;
}

EpisodeState apply_action(ModelCtx& ctx, const EpisodeState& st, const PairBatch& pairs,
                          int row, BondType b) {
  auto [u, v] = pairs.pairs[row];
  EpisodeState next;
  next.g = apply_triple(st.g, ReactionTriple{u, v, b});
  next.h = gru_cell(ctx, st.h, gather_rows(pairs.z, {row}));
  next.x = refresh_states(ctx, next.g, st.x, u, v);
  next.consumed = st.consumed;
  next.consumed.insert({u, v});
  return next;
}

// --- choosers ----------------------------------------------------------------

int sample_categorical(Rng& rng, const Tensor& probs) {
  double u = rng.uniform();
  double cum = 0;
  for (int i = 0; i < probs.cols(); ++i) {
    cum += probs.at(0, i);
    if (u < cum) return i;
  }
  return probs.cols() - 1;
}

int SampleChooser::pick_signal(double p_cont) { return rng_.uniform() < p_cont ? 1 : 0; }

int SampleChooser::pick_pair(const Tensor& probs) { return sample_categorical(rng_, probs); }

int SampleChooser::pick_bond(const Tensor& probs) { return sample_categorical(rng_, probs); }

int GreedyChooser::pick_pair(const Tensor& probs) { return argmax_row(probs); }

int GreedyChooser::pick_bond(const Tensor& probs) { return argmax_row(probs); }

// --- episode bookkeeping ------------------------------------------------------

int Episode::first_wrong_step() const {
  if (t_first_wrong < 0) return std::numeric_limits<int>::max();
  return t_first_wrong / 3;
}

bool Episode::substep_on(int substep) const {
  return t_first_wrong < 0 || substep <= t_first_wrong;
}

ReplayPlan make_replay_plan(const Episode& ep) {
  ReplayPlan plan;
  plan.steps.reserve(ep.steps.size());
  for (const auto& s : ep.steps) {
    ReplayPlan::Step p;
    p.signal = s.signal;
    p.topk = s.topk_pairs;
    p.pair_choice = s.pair_choice;
    p.bond_choice = s.bond_choice;
    p.gold_best = s.gold_best;
    p.a_signal = s.a_signal;
    p.a_pair = s.a_pair;
    p.a_bond = s.a_bond;
    p.ret = s.ret;
    plan.steps.push_back(std::move(p));
  }
  return plan;
}

Episode rollout_supervised(ModelCtx& ctx, const ReactionRecord& record, Chooser& chooser) {
  Episode ep;
  ep.t_end_gt = static_cast<int>(record.gold.size());

  std::map<std::pair<int, int>, BondType> remaining;
  for (const auto& t : record.gold) remaining[{t.u, t.v}] = t.bond;

  EpisodeState st = initial_state(ctx, record.input);
  ep.universe = pair_universe(st.g);

  for (int tau = 0; tau < ctx.cfg.t_max; ++tau) {
    StepEval ev = eval_step(ctx, st, chooser.pinned_topk(tau));
    EpisodeStep step;
    step.scores = ev.pairs.s;
    step.value = ev.value;
    step.value_d = ev.value.item();
    step.logp_stop = ev.logp_stop;
    step.topk_rows = ev.topk;
    for (int row : ev.topk) step.topk_pairs.push_back(ev.pairs.pairs[row]);

    step.gold_mask.resize(ep.universe.size(), 0);
    step.consumed_mask.resize(ep.universe.size(), 0);
    for (size_t r = 0; r < ep.universe.size(); ++r) {
      if (remaining.count(ep.universe[r])) step.gold_mask[r] = 1;
      if (st.consumed.count(ep.universe[r])) step.consumed_mask[r] = 1;
    }
    if (auto pin = chooser.pinned_gold_best(tau)) {
      step.gold_best = *pin;
      step.gold_best_row = ev.pairs.row_of(*pin);
    } else if (!remaining.empty()) {
      const Tensor& s = ev.pairs.s.value();
      for (size_t r = 0; r < ep.universe.size(); ++r) {
        if (!step.gold_mask[r]) continue;
        if (step.gold_best_row < 0 || s.at(static_cast<int>(r), 0) > s.at(step.gold_best_row, 0))
          step.gold_best_row = static_cast<int>(r);
      }
      if (step.gold_best_row >= 0) step.gold_best = ep.universe[step.gold_best_row];
    }

    // Sub-action 1: continuation signal.
    int want_signal = remaining.empty() ? 0 : 1;
    step.signal = chooser.pick_signal(std::exp(ev.logp_cont.item()));
    step.logp_signal = step.signal == 1 ? ev.logp_cont : ev.logp_stop;
    step.signal_correct = (step.signal == want_signal);
    step.r_signal = step.signal_correct ? 1.0 : -1.0;
    if (!step.signal_correct && ep.t_first_wrong < 0) ep.t_first_wrong = 3 * tau;

    if (step.signal == 0) {
      ep.stopped_by_signal = true;
      std::vector<ReactionTriple> sorted_applied = ep.applied;
      std::sort(sorted_applied.begin(), sorted_applied.end());
      ep.matched_gold = (sorted_applied == record.gold);
      step.r_signal += ep.matched_gold ? 2.0 : -2.0;
      ep.steps.push_back(std::move(step));
      break;
    }
    if (!step.signal_correct) {
      // Wrong continuation: the model wants another edit but gold is done.
      ep.steps.push_back(std::move(step));
      break;
    }

    // Sub-action 2: atom pair. Gold is nonempty here, so the top-K is too.
    step.has_pair = true;
    Var plp = pair_logprobs(ctx, ev);
    Tensor pair_probs = softmax_rows(plp).value();
    step.pair_choice = chooser.pick_pair(pair_probs);
    step.logp_pair = slice_cols(plp, step.pair_choice, 1);
    int chosen_row = ev.topk[step.pair_choice];
    std::pair<int, int> chosen_pair = ev.pairs.pairs[chosen_row];
    step.pair_correct = remaining.count(chosen_pair) != 0;
    step.r_pair = step.pair_correct ? 1.0 : -1.0;
    if (!step.pair_correct && ep.t_first_wrong < 0) ep.t_first_wrong = 3 * tau + 1;
    if (!step.pair_correct) {
      ep.steps.push_back(std::move(step));
      break;
    }

    // Sub-action 3: bond type.
    step.has_bond = true;
    BondEval bev = bond_logprobs(ctx, st, ev.pairs, chosen_row);
    Tensor bond_probs = softmax_rows(bev.logprobs).value();
    step.bond_choice = chooser.pick_bond(bond_probs);
    step.bond = bev.candidates[step.bond_choice];
    step.logp_bond = slice_cols(bev.logprobs, step.bond_choice, 1);
    step.bond_correct = (step.bond == remaining[chosen_pair]);
    step.r_bond = step.bond_correct ? 1.0 : -1.0;
    if (!step.bond_correct && ep.t_first_wrong < 0) ep.t_first_wrong = 3 * tau + 2;
    if (!step.bond_correct) {
      ep.steps.push_back(std::move(step));
      break;
    }

    // Full correct triple: commit.
    st = apply_action(ctx, st, ev.pairs, chosen_row, step.bond);
    ep.applied.push_back(ReactionTriple{chosen_pair.first, chosen_pair.second, step.bond});
    remaining.erase(chosen_pair);
    ep.steps.push_back(std::move(step));
  }

  for (const auto& s : ep.steps) ep.total_reward += s.r_signal + s.r_pair + s.r_bond;
  return ep;
}

void compute_returns_and_advantages(Episode& ep) {
  double suffix = 0;
  for (int i = static_cast<int>(ep.steps.size()) - 1; i >= 0; --i) {
    EpisodeStep& s = ep.steps[i];
    suffix += s.r_signal + s.r_pair + s.r_bond;
    s.ret = suffix;
    double v_next = (i + 1 < static_cast<int>(ep.steps.size())) ? ep.steps[i + 1].value_d : 0.0;
    s.a_signal = s.r_signal + v_next - s.value_d;
    s.a_pair = s.has_pair ? s.r_pair + v_next - s.value_d : 0.0;
    s.a_bond = s.has_bond ? s.r_bond + v_next - s.value_d : 0.0;
  }
}

void apply_pinned_advantages(Episode& ep, const ReplayPlan& plan) {
  if (plan.steps.size() != ep.steps.size())
    throw std::invalid_argument("apply_pinned_advantages: step count mismatch");
  for (size_t i = 0; i < ep.steps.size(); ++i) {
    ep.steps[i].a_signal = plan.steps[i].a_signal;
    ep.steps[i].a_pair = plan.steps[i].a_pair;
    ep.steps[i].a_bond = plan.steps[i].a_bond;
    ep.steps[i].ret = plan.steps[i].ret;
  }
}

}  // namespace gtpn
