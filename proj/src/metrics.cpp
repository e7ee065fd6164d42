#include "gtpn/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "gtpn/decode.hpp"
#include "gtpn/policy.hpp"

namespace gtpn {

namespace {

struct PairTally {
  int gold_total = 0;
  int gold_in_k = 0;
  bool covered = false;
};

// Scores the universe once in the initial state and counts how many gold
// pairs land among the k best-ranked rows.
PairTally tally_pairs(Model& model, const ReactionRecord& rec, int k) {
  Tape tape;
  ModelCtx ctx(model.cfg, model.params, tape);
  EpisodeState st = initial_state(ctx, rec.input);
  PairBatch batch = score_pairs(ctx, st.g, st.x, st.h);
  std::vector<int> top = select_top_k(batch, /*consumed=*/{}, k);

  std::set<std::pair<int, int>> gold;
  for (const auto& t : rec.gold) gold.insert({t.u, t.v});

  PairTally tally;
  tally.gold_total = static_cast<int>(gold.size());
  for (int row : top)
    if (gold.count(batch.pairs[row])) ++tally.gold_in_k;
  tally.covered = tally.gold_in_k == tally.gold_total;
  return tally;
}

}  // namespace

double coverage_at_k(Model& model, const std::vector<ReactionRecord>& records, int k) {
  if (records.empty()) throw std::runtime_error("coverage_at_k: empty dataset");
  int covered = 0;
  for (const auto& rec : records)
    if (tally_pairs(model, rec, k).covered) ++covered;
  return static_cast<double>(covered) / static_cast<double>(records.size());
}

double recall_at_k(Model& model, const std::vector<ReactionRecord>& records, int k) {
  if (records.empty()) throw std::runtime_error("recall_at_k: empty dataset");
  int64_t total = 0, in_k = 0;
  for (const auto& rec : records) {
    PairTally t = tally_pairs(model, rec, k);
    total += t.gold_total;
    in_k += t.gold_in_k;
  }
  if (total == 0) return 1.0;
  return static_cast<double>(in_k) / static_cast<double>(total);
}

double precision_at_k(Model& model, const std::vector<ReactionRecord>& records, int k,
                      int beam_width) {
  if (records.empty()) throw std::runtime_error("precision_at_k: empty dataset");
  ValenceTable table = ValenceTable::defaults();
  int hits = 0;
  for (const auto& rec : records) {
    Tape tape;
    ModelCtx ctx(model.cfg, model.params, tape);
    RankedCandidates ranked = postprocess(beam_search(ctx, rec.input, beam_width), table);
    int rank = gold_rank(ranked, rec);
    if (rank >= 0 && rank < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

MetricsReport evaluate_metrics(Model& model, const std::vector<ReactionRecord>& records,
                               const std::vector<int>& ks, int beam_width) {
  if (records.empty()) throw std::runtime_error("evaluate_metrics: empty dataset");
  if (ks.empty()) throw std::runtime_error("evaluate_metrics: no k values");
  MetricsReport report;
  report.ks = ks;
  report.coverage.assign(ks.size(), 0.0);
  report.recall.assign(ks.size(), 0.0);
  report.precision.assign(ks.size(), 0.0);

  std::vector<int64_t> gold_in_k(ks.size(), 0);
  int64_t gold_total = 0;
  ValenceTable table = ValenceTable::defaults();
  int max_k = *std::max_element(ks.begin(), ks.end());

  for (const auto& rec : records) {
    // One scoring pass covers every k: count gold pairs by rank prefix.
    Tape tape;
    ModelCtx ctx(model.cfg, model.params, tape);
    EpisodeState st = initial_state(ctx, rec.input);
    PairBatch batch = score_pairs(ctx, st.g, st.x, st.h);
    std::vector<int> top = select_top_k(batch, /*consumed=*/{}, max_k);

    std::set<std::pair<int, int>> gold;
    for (const auto& t : rec.gold) gold.insert({t.u, t.v});
    gold_total += static_cast<int64_t>(gold.size());

    std::vector<int> hits_by_prefix(top.size() + 1, 0);
    for (size_t i = 0; i < top.size(); ++i)
      hits_by_prefix[i + 1] =
          hits_by_prefix[i] + (gold.count(batch.pairs[top[i]]) ? 1 : 0);

    RankedCandidates ranked = postprocess(beam_search(ctx, rec.input, beam_width), table);
    int rank = gold_rank(ranked, rec);

    for (size_t ki = 0; ki < ks.size(); ++ki) {
      int prefix = std::min<int>(ks[ki], static_cast<int>(top.size()));
      int in_k = hits_by_prefix[prefix];
      gold_in_k[ki] += in_k;
      if (in_k == static_cast<int>(gold.size())) report.coverage[ki] += 1.0;
      if (rank >= 0 && rank < ks[ki]) report.precision[ki] += 1.0;
    }
  }

  double n = static_cast<double>(records.size());
  for (size_t ki = 0; ki < ks.size(); ++ki) {
    report.coverage[ki] /= n;
    report.precision[ki] /= n;
    report.recall[ki] = gold_total == 0
                            ? 1.0
                            : static_cast<double>(gold_in_k[ki]) /
                                  static_cast<double>(gold_total);
  }
  return report;
}

}  // namespace gtpn
