#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gtpn/policy.hpp"
#include "gtpn/reaction_io.hpp"

namespace gtpn {

struct LossTerms {
  Var a2c;
  Var value;
  Var pair;
  Var over_length;
  Var in_top_k;
  Var total;  // λ-weighted sum
};

// Assembles every loss term from a finished episode (advantages and returns
// must already be filled in; they enter as constants).
LossTerms episode_losses(ModelCtx& ctx, const Episode& ep);

struct TrainOptions {
  std::string checkpoint_path;  // saved at the end and every checkpoint_every
  int checkpoint_every = 0;     // 0 = final only (requires checkpoint_path)
  std::ostream* log = nullptr;  // JSON-lines training log
  std::ostream* info = nullptr; // human-readable progress lines
};

struct TrainResult {
  int iterations = 0;          // optimizer steps taken
  double final_loss = 0;       // batch loss at the last step
  double best_val_top1 = -1;   // best validation top-1 seen (-1: never evaluated)
  int best_iteration = -1;
  bool early_stopped = false;
  double final_lr = 0;
};

// Mini-batch advantage actor-critic training. Per iteration: sample a batch
// (epoch-shuffled without replacement), run one supervised rollout per record,
// average the composite losses, backpropagate, Adam step. Every
// cfg.eval_every iterations the validation top-1 accuracy gates the
// learning-rate plateau schedule and the optional early stop. Non-finite
// losses abort with a diagnostic naming the batch.
TrainResult fit(Model& model, const std::vector<ReactionRecord>& train,
                const std::vector<ReactionRecord>& valid, const TrainOptions& opts);

// Fraction of records whose top-ranked post-processed candidate matches gold.
// Runs greedy-width or wider beam search per record with a fresh tape.
double evaluate_top1(Model& model, const std::vector<ReactionRecord>& records,
                     int beam_width);

}  // namespace gtpn
