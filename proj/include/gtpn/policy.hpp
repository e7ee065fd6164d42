#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "gtpn/gnn.hpp"
#include "gtpn/pairnet.hpp"
#include "gtpn/rng.hpp"

namespace gtpn {

// Mutable per-trajectory state: the evolving graph, tape-resident node states
// and recurrent state, and the pairs already acted on (each pair may be
// edited at most once per trajectory).
struct EpisodeState {
  MolGraph g;
  Var x;  // [V x state]
  Var h;  // [1 x gru]
  std::set<std::pair<int, int>> consumed;
};

// Encodes the input graph and loads the learned initial recurrent state.
EpisodeState initial_state(ModelCtx& ctx, const MolGraph& g);

// Everything the policy derives at the start of one step, before any
// sub-action is taken.
struct StepEval {
  PairBatch pairs;
  std::vector<int> topk;  // rows into pairs, best first
  Var pooled;             // [1 x pool]
  Var value;              // [1 x 1]
  Var logp_cont;          // [1 x 1] log p(ξ=1)
  Var logp_stop;          // [1 x 1] log p(ξ=0)
};

// `pinned_topk` replays a frozen top-K selection (pairs must exist in the
// universe); otherwise the top-K comes from the current scores.
StepEval eval_step(ModelCtx& ctx, const EpisodeState& st,
                   const std::vector<std::pair<int, int>>* pinned_topk = nullptr);

// Log-probabilities over the top-K pairs of `ev`: [1 x K'].
Var pair_logprobs(ModelCtx& ctx, const StepEval& ev);

// Bond head for the pair at universe row `row`: log-probs over
// cfg.bond_vocab. The pair's current bond is additively masked out when it is
// in the vocabulary (re-asserting it would be a no-op edit).
struct BondEval {
  std::vector<BondType> candidates;
  int old_index = -1;  // position of the current bond in candidates, -1 if absent
  Var logprobs;        // [1 x B]
};
BondEval bond_logprobs(ModelCtx& ctx, const EpisodeState& st, const PairBatch& pairs,
                       int row);

// Applies (u,v,b) for the pair at universe row `row`: advances the GRU on
// z_uv, edits the bond, refreshes node states, marks the pair consumed.
EpisodeState apply_action(ModelCtx& ctx, const EpisodeState& st, const PairBatch& pairs,
                          int row, BondType b);

// --- supervised rollouts ----------------------------------------------------

// One recorded step of a rollout. Tape handles stay valid as long as the tape
// the rollout ran on is alive.
struct EpisodeStep {
  int signal = 0;
  bool signal_correct = false;
  double r_signal = 0;

  bool has_pair = false;
  std::vector<int> topk_rows;                   // universe rows, rank order
  std::vector<std::pair<int, int>> topk_pairs;  // same rows as atom pairs
  int pair_choice = -1;                         // index into topk
  bool pair_correct = false;
  double r_pair = 0;

  bool has_bond = false;
  int bond_choice = -1;  // index into cfg.bond_vocab
  BondType bond = BondType::kNull;
  bool bond_correct = false;
  double r_bond = 0;

  std::vector<char> gold_mask;      // per universe row: in the remaining gold set
  std::vector<char> consumed_mask;  // per universe row: consumed before this step
  std::pair<int, int> gold_best{-1, -1};
  int gold_best_row = -1;

  Var logp_signal;  // log-prob of the chosen ξ
  Var logp_stop;    // log p(ξ=0)
  Var logp_pair;    // [1 x 1]; valid iff has_pair
  Var logp_bond;    // [1 x 1]; valid iff has_bond
  Var value;        // [1 x 1]
  Var scores;       // [P x 1] universe scores at this step

  double value_d = 0;
  double a_signal = 0, a_pair = 0, a_bond = 0;  // TD advantages (constants)
  double ret = 0;                               // return R^τ, γ = 1
};

struct Episode {
  std::vector<std::pair<int, int>> universe;  // fixed across steps
  std::vector<EpisodeStep> steps;
  std::vector<ReactionTriple> applied;
  int t_first_wrong = -1;  // sub-step index (3τ+sub); -1 = no wrong sub-action
  int t_end_gt = 0;        // |gold|
  bool stopped_by_signal = false;
  bool matched_gold = false;
  double total_reward = 0;

  // Step index of the first wrong sub-action, INT_MAX-like when none.
  int first_wrong_step() const;
  bool substep_on(int substep) const;  // ζ at a global sub-step index
};

// Selection strategy for the three sub-actions, with optional replay pins.
class Chooser {
 public:
  virtual ~Chooser() = default;
  virtual int pick_signal(double p_cont) = 0;
  // probs is [1 x K'] over ev.topk / candidates; returns an index into it.
  virtual int pick_pair(const Tensor& probs) = 0;
  virtual int pick_bond(const Tensor& probs) = 0;
  virtual const std::vector<std::pair<int, int>>* pinned_topk(int step) { return nullptr; }
  virtual std::optional<std::pair<int, int>> pinned_gold_best(int step) {
    return std::nullopt;
  }
};

class SampleChooser : public Chooser {
 public:
  explicit SampleChooser(Rng& rng) : rng_(rng) {}
  int pick_signal(double p_cont) override;
  int pick_pair(const Tensor& probs) override;
  int pick_bond(const Tensor& probs) override;

 private:
  Rng& rng_;
};

class GreedyChooser : public Chooser {
 public:
  int pick_signal(double p_cont) override { return p_cont >= 0.5 ? 1 : 0; }
  int pick_pair(const Tensor& probs) override;
  int pick_bond(const Tensor& probs) override;
};

// Frozen trace of one rollout: selections, top-K membership, gold-best rows,
// and the advantage/return constants. Replaying it re-evaluates the same
// deterministic function of the parameters (used by finite-difference
// checking and by tests).
struct ReplayPlan {
  struct Step {
    int signal = 0;
    std::vector<std::pair<int, int>> topk;
    int pair_choice = -1;
    int bond_choice = -1;
    std::pair<int, int> gold_best{-1, -1};
    double a_signal = 0, a_pair = 0, a_bond = 0, ret = 0;
  };
  std::vector<Step> steps;
};

ReplayPlan make_replay_plan(const Episode& ep);

class ReplayChooser : public Chooser {
 public:
  explicit ReplayChooser(const ReplayPlan& plan) : plan_(plan) {}
  int pick_signal(double) override { return plan_.steps[step_++].signal; }
  int pick_pair(const Tensor&) override { return plan_.steps[step_ - 1].pair_choice; }
  int pick_bond(const Tensor&) override { return plan_.steps[step_ - 1].bond_choice; }
  const std::vector<std::pair<int, int>>* pinned_topk(int step) override {
    if (step >= static_cast<int>(plan_.steps.size())) return nullptr;
    return &plan_.steps[step].topk;
  }
  std::optional<std::pair<int, int>> pinned_gold_best(int step) override {
    if (step >= static_cast<int>(plan_.steps.size())) return std::nullopt;
    auto gb = plan_.steps[step].gold_best;
    if (gb.first < 0) return std::nullopt;
    return gb;
  }

 private:
  const ReplayPlan& plan_;
  int step_ = 0;
};

// Runs one supervised episode against `record.gold`: per step the chooser
// picks ξ, then (if continuing) an atom pair from the top-K and a bond type.
// Correctness per sub-action: ξ must equal [remaining gold nonempty]; the
// pair must be in the remaining gold set; the bond must match that pair's
// gold bond. Immediate rewards are ±1 per sub-action; the episode stops at
// the first wrong sub-action, at an emitted ξ=0, or at t_max steps. When the
// episode ends by ξ=0, a delayed reward of +2/-2 is added to the final signal
// reward according to whether the applied edits reproduce gold exactly.
Episode rollout_supervised(ModelCtx& ctx, const ReactionRecord& record, Chooser& chooser);

// Fills ret / a_* from the recorded rewards and values: R^τ is the suffix sum
// of all rewards, A_x^τ = r_x^τ + V^{τ+1} - V^τ with V past the end = 0.
void compute_returns_and_advantages(Episode& ep);

// Overwrites the advantage/return constants with the plan's frozen values.
void apply_pinned_advantages(Episode& ep, const ReplayPlan& plan);

// Categorical draw from a [1 x n] probability row.
int sample_categorical(Rng& rng, const Tensor& probs);

}  // namespace gtpn
