#include "gtpn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "gtpn/decode.hpp"

namespace gtpn {

namespace {

Var zero_scalar(ModelCtx& ctx) { return ctx.tape.constant(Tensor::scalar(0.0)); }

Var sum_or_zero(ModelCtx& ctx, const std::vector<Var>& terms) {
  if (terms.empty()) return zero_scalar(ctx);
  Var acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

}  // namespace

LossTerms episode_losses(ModelCtx& ctx, const Episode& ep) {
  std::vector<Var> a2c_terms, value_terms, pair_terms, over_terms, topk_terms;
  const int last_on_step = ep.first_wrong_step();  // steps beyond this are masked

  for (int tau = 0; tau < static_cast<int>(ep.steps.size()); ++tau) {
    const EpisodeStep& s = ep.steps[tau];

    if (ep.substep_on(3 * tau)) {
      a2c_terms.push_back(scale(s.logp_signal, s.a_signal));
      Var diff = add_const(s.value, -s.ret);
      value_terms.push_back(mul(diff, diff));
    }
    if (s.has_pair && ep.substep_on(3 * tau + 1))
      a2c_terms.push_back(scale(s.logp_pair, s.a_pair));
    if (s.has_bond && ep.substep_on(3 * tau + 2))
      a2c_terms.push_back(scale(s.logp_bond, s.a_bond));

    if (tau <= last_on_step && !ep.universe.empty()) {
      // Binary cross-entropy over unconsumed universe pairs:
      //   y·softplus(-s) + (1-y)·softplus(s), y = membership in remaining gold.
      int p = static_cast<int>(ep.universe.size());
      Tensor w_pos(p, 1), w_neg(p, 1);
      bool any = false;
      for (int r = 0; r < p; ++r) {
        if (s.consumed_mask[r]) continue;
        any = true;
        (s.gold_mask[r] ? w_pos : w_neg).at(r, 0) = 1.0;
      }
      if (any) {
        Var pos = mul(ctx.tape.constant(std::move(w_pos)), softplus(scale(s.scores, -1.0)));
        Var neg = mul(ctx.tape.constant(std::move(w_neg)), softplus(s.scores));
        pair_terms.push_back(sum_all(add(pos, neg)));
      }
      if (s.gold_best_row >= 0) {
        // -log p(gold best in top-K); the gold row also appears in the
        // denominator sum when it made the top-K (kept exactly as defined).
        std::vector<Var> rows{gather_rows(s.scores, {s.gold_best_row})};
        if (!s.topk_rows.empty()) rows.push_back(gather_rows(s.scores, s.topk_rows));
        Var joined = concat_rows(rows);
        Var lsm = log_softmax_rows(reshape(joined, 1, joined.rows()));
        topk_terms.push_back(scale(slice_cols(lsm, 0, 1), -1.0));
      }
    }

    if (tau >= ep.t_end_gt && s.signal == 1)
      over_terms.push_back(scale(s.logp_stop, -1.0));
  }

  LossTerms out;
  out.a2c = scale(sum_or_zero(ctx, a2c_terms), -1.0);
  out.value = sum_or_zero(ctx, value_terms);
  out.pair = sum_or_zero(ctx, pair_terms);
  out.over_length = sum_or_zero(ctx, over_terms);
  out.in_top_k = sum_or_zero(ctx, topk_terms);
  out.total = add(add(add(scale(out.a2c, ctx.cfg.loss_a2c),
                          scale(out.value, ctx.cfg.loss_value)),
                      add(scale(out.pair, ctx.cfg.loss_pair),
                          scale(out.over_length, ctx.cfg.loss_over_length))),
                  scale(out.in_top_k, ctx.cfg.loss_top_k));
  return out;
}

double evaluate_top1(Model& model, const std::vector<ReactionRecord>& records,
                     int beam_width) {
  if (records.empty()) throw std::runtime_error("evaluate_top1: empty dataset");
  ValenceTable table = ValenceTable::defaults();
  int hits = 0;
  for (const auto& rec : records) {
    Tape tape;
    ModelCtx ctx(model.cfg, model.params, tape);
    RankedCandidates ranked = postprocess(beam_search(ctx, rec.input, beam_width), table);
    if (gold_rank(ranked, rec) == 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

TrainResult fit(Model& model, const std::vector<ReactionRecord>& train,
                const std::vector<ReactionRecord>& valid, const TrainOptions& opts) {
  if (train.empty()) throw std::runtime_error("fit: empty training set");
  const Config& cfg = model.cfg;
  TrainResult result;

  Rng root(cfg.seed);
  Rng shuffle_rng = root.fork(fnv1a64("batch-order"));
  Rng action_rng = root.fork(fnv1a64("rollout-actions"));

  AdamConfig adam{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  // plateau_patience counts iterations; the schedule counts validation
  // reports, which happen every eval_every iterations.
  int patience_reports = std::max(1, cfg.plateau_patience / cfg.eval_every);
  PlateauSchedule schedule(cfg.lr, cfg.plateau_factor, patience_reports, cfg.min_lr);

  // Epoch-shuffled batch order, no replacement within an epoch.
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // triggers a shuffle on first use
  const int batch_size = std::min<int>(cfg.batch_size, static_cast<int>(train.size()));

  for (int iter = 0; iter < cfg.train_steps; ++iter) {
    std::vector<int> batch;
    batch.reserve(batch_size);
    for (int i = 0; i < batch_size; ++i) {
      if (cursor == order.size()) {
        for (size_t j = order.size(); j > 1; --j)
          std::swap(order[j - 1], order[shuffle_rng.below(j)]);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }

    Tape tape;
    ModelCtx ctx(cfg, model.params, tape);
    SampleChooser chooser(action_rng);
    std::vector<Var> totals;
    totals.reserve(batch.size());
    double reward_sum = 0;
    for (int idx : batch) {
      Episode ep = rollout_supervised(ctx, train[idx], chooser);
      compute_returns_and_advantages(ep);
      totals.push_back(episode_losses(ctx, ep).total);
      reward_sum += ep.total_reward;
    }
    Var batch_loss = scale(sum_or_zero(ctx, totals), 1.0 / totals.size());
    double loss_value = batch_loss.item();

    try {
      backward(batch_loss, model.params);
      adam.lr = schedule.lr();
      model.params.adam_step(adam);
    } catch (const NumericError& e) {
      std::string ids;
      for (int idx : batch) ids += (ids.empty() ? "" : ",") + train[idx].id;
      throw NumericError(std::string(e.what()) + " [iteration " + std::to_string(iter) +
                         ", batch records " + ids + "]");
    }

    result.iterations = iter + 1;
    result.final_loss = loss_value;
    result.final_lr = schedule.lr();

    bool eval_now = !valid.empty() && ((iter + 1) % cfg.eval_every == 0);
    double val_top1 = -1;
    if (eval_now) {
      val_top1 = evaluate_top1(model, valid, cfg.val_beam_width);
      schedule.report(val_top1);
      if (val_top1 > result.best_val_top1) {
        result.best_val_top1 = val_top1;
        result.best_iteration = iter + 1;
      }
    }

    if (opts.log != nullptr) {
      nlohmann::json j{{"iteration", iter + 1},
                       {"loss", loss_value},
                       {"mean_reward", reward_sum / totals.size()},
                       {"lr", schedule.lr()}};
      if (eval_now) j["val_top1"] = val_top1;
      (*opts.log) << j.dump() << '\n';
    }
    if (opts.info != nullptr && (eval_now || (iter + 1) % 100 == 0 || iter == 0)) {
      (*opts.info) << "iter " << (iter + 1) << " loss " << loss_value << " lr "
                   << schedule.lr();
      if (eval_now) (*opts.info) << " val_top1 " << val_top1;
      (*opts.info) << '\n';
    }

    if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
        (iter + 1) % opts.checkpoint_every == 0)
      model.params.save(opts.checkpoint_path, model_config_hash(cfg));

    if (eval_now && cfg.early_stop_top1 >= 0 && val_top1 >= cfg.early_stop_top1) {
      result.early_stopped = true;
      break;
    }
  }

  if (!opts.checkpoint_path.empty())
    model.params.save(opts.checkpoint_path, model_config_hash(cfg));
  return result;
}

}  // namespace gtpn
