#include "gtpn/decode.hpp"

#include <algorithm>
#include <map>
#include <memory>

namespace gtpn {

namespace {

// Anything this low is an additive mask, not a real log-probability.
constexpr double kMaskedLogp = -1e20;

struct Beam {
  std::shared_ptr<EpisodeState> st;
  double sum_logp = 0;  // Σ log p of sub-actions emitted while alive
  bool alive = true;
  std::vector<DecodedAction> actions;

  // Scratch for the current step (live beams only).
  std::shared_ptr<StepEval> ev;
  Tensor pair_lp;            // [1 x K']
  bool continuing = false;   // chose ξ=1 in the signal phase this step
  int chosen_topk = -1;      // index into ev->topk
  Tensor bond_lp;            // [1 x B]
  std::vector<BondType> bond_candidates;
};

// Descending by score; stable so ties keep generation order.
void keep_best(std::vector<std::pair<double, Beam>>& cands, int n) {
  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (static_cast<int>(cands.size()) > n) cands.resize(n);
}

}  // namespace

RankedCandidates beam_search(ModelCtx& ctx, const MolGraph& input, int beam_width) {
  if (beam_width < 1) throw std::invalid_argument("beam_search: beam width must be >= 1");
  std::vector<Beam> beams(1);
  beams[0].st = std::make_shared<EpisodeState>(initial_state(ctx, input));

  for (int tau = 0; tau < ctx.cfg.t_max; ++tau) {
    bool any_alive = false;
    for (auto& b : beams) {
      if (!b.alive) continue;
      any_alive = true;
      b.ev = std::make_shared<StepEval>(eval_step(ctx, *b.st));
    }
    if (!any_alive) break;

    // Phase 1: continuation signal.
    std::vector<std::pair<double, Beam>> cands;
    for (auto& b : beams) {
      if (!b.alive) {
        cands.emplace_back(b.sum_logp, b);
        continue;
      }
      Beam cont = b;
      cont.continuing = true;
      cont.sum_logp += b.ev->logp_cont.item();
      cands.emplace_back(cont.sum_logp, std::move(cont));
      Beam stop = b;
      stop.continuing = false;
      stop.alive = false;
      stop.sum_logp += b.ev->logp_stop.item();
      stop.actions.push_back(DecodedAction{0, -1, -1, BondType::kNull});
      cands.emplace_back(stop.sum_logp, std::move(stop));
    }
    keep_best(cands, beam_width);

    // Phase 2: atom pair.
    std::vector<std::pair<double, Beam>> cands2;
    for (auto& [score, b] : cands) {
      if (!b.alive || !b.continuing) {
        cands2.emplace_back(score, std::move(b));
        continue;
      }
      if (b.ev->topk.empty()) continue;  // ξ=1 with nothing left to edit
      Tensor lp = pair_logprobs(ctx, *b.ev).value();
      for (int k = 0; k < lp.cols(); ++k) {
        Beam child = b;
        child.chosen_topk = k;
        child.sum_logp += lp.at(0, k);
        cands2.emplace_back(child.sum_logp, std::move(child));
      }
    }
    keep_best(cands2, beam_width);

    // Phase 3: bond type.
    std::vector<std::pair<double, Beam>> cands3;
    for (auto& [score, b] : cands2) {
      if (!b.alive || !b.continuing) {
        cands3.emplace_back(score, std::move(b));
        continue;
      }
      BondEval bev = bond_logprobs(ctx, *b.st, b.ev->pairs, b.ev->topk[b.chosen_topk]);
      Tensor lp = bev.logprobs.value();
      for (int i = 0; i < lp.cols(); ++i) {
        if (lp.at(0, i) < kMaskedLogp) continue;  // current bond: not an edit
        Beam child = b;
        child.sum_logp += lp.at(0, i);
        int row = child.ev->topk[child.chosen_topk];
        auto [u, v] = child.ev->pairs.pairs[row];
        child.actions.push_back(DecodedAction{1, u, v, bev.candidates[i]});
        cands3.emplace_back(child.sum_logp, std::move(child));
      }
    }
    keep_best(cands3, beam_width);

    // Commit the edits of beams that continued this step.
    beams.clear();
    for (auto& [score, b] : cands3) {
      if (b.alive && b.continuing) {
        const DecodedAction& act = b.actions.back();
        int row = b.ev->pairs.row_of({act.u, act.v});
        b.st = std::make_shared<EpisodeState>(
            apply_action(ctx, *b.st, b.ev->pairs, row, act.bond));
      }
      b.ev.reset();
      b.continuing = false;
      b.chosen_topk = -1;
      beams.push_back(std::move(b));
    }
  }

  RankedCandidates out;
  std::stable_sort(beams.begin(), beams.end(),
                   [](const Beam& a, const Beam& b) { return a.sum_logp > b.sum_logp; });
  for (auto& b : beams) {
    Candidate c;
    c.actions = std::move(b.actions);
    c.score = b.sum_logp / ctx.cfg.t_max;
    c.continued = b.alive;
    c.graph = b.st->g;
    c.product = product_view(c.graph);
    out.items.push_back(std::move(c));
  }
  return out;
}

MolGraph product_view(const MolGraph& g) {
  std::vector<int> comp = g.components();
  std::vector<char> keep_comp;
  for (int i = 0; i < g.num_atoms(); ++i) {
    if (comp[i] >= static_cast<int>(keep_comp.size())) keep_comp.resize(comp[i] + 1, 0);
    if (!g.atom(i).is_reagent) keep_comp[comp[i]] = 1;
  }
  std::vector<int> keep;
  for (int i = 0; i < g.num_atoms(); ++i)
    if (keep_comp[comp[i]]) keep.push_back(i);
  return g.induced_subgraph(keep);
}

RankedCandidates postprocess(const RankedCandidates& in, const ValenceTable& table) {
  RankedCandidates out;
  std::vector<uint64_t> seen;
  for (const Candidate& c : in.items) {
    if (!validate_valence(c.product, table).empty()) continue;
    uint64_t h = canonical_hash(c.product, /*use_maps=*/false);
    if (std::find(seen.begin(), seen.end(), h) != seen.end()) continue;
    seen.push_back(h);
    out.items.push_back(c);
  }
  return out;
}

bool match_gold(const MolGraph& candidate, const ReactionRecord& record) {
  // Map number -> candidate atom index.
  std::map<int, int> by_map;
  for (int i = 0; i < candidate.num_atoms(); ++i) {
    int m = candidate.atom(i).map_number;
    if (m != 0) by_map[m] = i;
  }
  const MolGraph& gold = record.product;
  std::vector<int> gold_to_cand(gold.num_atoms(), -1);
  for (int i = 0; i < gold.num_atoms(); ++i) {
    int m = gold.atom(i).map_number;
    if (m == 0) continue;  // unmapped gold atoms carry no bonding constraints here
    auto it = by_map.find(m);
    if (it == by_map.end()) return false;
    gold_to_cand[i] = it->second;
  }
  // Every gold bond must exist in the candidate with the same type.
  int mapped_gold_bonds = 0;
  for (const auto& [gu, gv, gb] : gold.bond_list()) {
    if (gold_to_cand[gu] < 0 || gold_to_cand[gv] < 0) continue;
    ++mapped_gold_bonds;
    if (candidate.bond(gold_to_cand[gu], gold_to_cand[gv]) != gb) return false;
  }
  // No extra candidate bonds between atoms that both map into gold.
  std::vector<char> is_mapped(candidate.num_atoms(), 0);
  for (int i = 0; i < gold.num_atoms(); ++i)
    if (gold_to_cand[i] >= 0) is_mapped[gold_to_cand[i]] = 1;
  int mapped_cand_bonds = 0;
  for (const auto& [cu, cv, cb] : candidate.bond_list())
    if (is_mapped[cu] && is_mapped[cv]) ++mapped_cand_bonds;
  return mapped_cand_bonds == mapped_gold_bonds;
}

int gold_rank(const RankedCandidates& ranked, const ReactionRecord& record) {
  for (size_t i = 0; i < ranked.items.size(); ++i)
    if (match_gold(ranked.items[i].graph, record)) return static_cast<int>(i);
  return -1;
}

}  // namespace gtpn
