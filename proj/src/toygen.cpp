#include "gtpn/toygen.hpp"

#include <algorithm>
#include <stdexcept>

#include "gtpn/molgraph.hpp"
#include "gtpn/rng.hpp"

namespace gtpn {

namespace {

// Candidate elements by max valence: C 4, N 3, O 2, S 6, P 5.
constexpr int kElements[] = {6, 7, 8, 16, 15};
constexpr int kMaxValence[] = {4, 3, 2, 6, 5};
constexpr int kAlphabetLimit = 5;

// Degree-sum thresholds at the first taken pair that raise the edit count.
constexpr int kTwoEditDegsum = 5;
constexpr int kThreeEditDegsum = 6;

struct Draft {
  int n = 0;
  std::vector<std::vector<int>> order;  // [n x n] integer bond order matrix
  std::vector<int> used;                // valence consumed per atom

  bool bonded(int i, int j) const { return order[i][j] != 0; }
  void add(int i, int j, int o) {
    order[i][j] = order[j][i] = o;
    used[i] += o;
    used[j] += o;
  }
};

// Random connected sparse graph: a degree-capped spanning tree plus up to two
// extra single bonds. All generated bonds are single, so `used` == degree.
Draft draw_structure(const ToyTaskSpec& spec, Rng& r) {
  Draft d;
  d.n = r.range(spec.min_nodes, spec.max_nodes);
  d.order.assign(d.n, std::vector<int>(d.n, 0));
  d.used.assign(d.n, 0);

  // Among any i nodes of a tree at most degree sum 2(i-1) is spent, so a
  // parent below the cap always exists.
  const int cap = 3;
  for (int i = 1; i < d.n; ++i) {
    std::vector<int> feasible;
    for (int j = 0; j < i; ++j)
      if (d.used[j] < cap) feasible.push_back(j);
    d.add(i, feasible[r.below(static_cast<int>(feasible.size()))], 1);
  }
  for (int e = 0; e < 2; ++e) {
    if (!r.bernoulli(spec.extra_edge_prob)) continue;
    std::vector<std::pair<int, int>> open;
    for (int i = 0; i < d.n; ++i)
      for (int j = i + 1; j < d.n; ++j)
        if (!d.bonded(i, j) && d.used[i] < cap && d.used[j] < cap) open.push_back({i, j});
    if (open.empty()) continue;
    auto [i, j] = open[r.below(static_cast<int>(open.size()))];
    d.add(i, j, 1);
  }
  return d;
}

int draw_element(const ToyTaskSpec& spec, Rng& r, int needed_valence) {
  std::vector<int> eligible;
  for (int i = 0; i < spec.alphabet; ++i)
    if (kMaxValence[i] >= needed_valence) eligible.push_back(kElements[i]);
  return eligible[r.below(static_cast<int>(eligible.size()))];
}

int element_valence(int z) {
  for (size_t i = 0; i < std::size(kElements); ++i)
    if (kElements[i] == z) return kMaxValence[i];
  return 0;
}

// The gold rule, start to finish, is a deterministic function of the labeled
// graph, so a model can read every decision off degrees and element labels:
//   - at each step, unbonded pairs are ranked by (current degree sum desc,
//     unordered element pair asc, index asc) and the first one that fits both
//     endpoints' valences is bonded;
//   - the bond is single, or double when `vary_bond` and the pair's current
//     degree sum is odd;
//   - the edit count is read off the first taken pair's degree sum: one
//     below kTwoEditDegsum, two from there, three from kThreeEditDegsum.
// Returns false (caller redraws) when the emergent count differs from
// `changes`, or when at some step another valence-feasible pair ties the
// taken one on (degree sum, element pair): such a graph would leave the
// choice undecidable from what the model sees.
bool pick_edits(const ToyTaskSpec& spec, const Draft& d, const std::vector<int>& elements,
                const std::vector<int>& valence, std::vector<ReactionTriple>& edits,
                std::vector<int>& product_used) {
  edits.clear();
  product_used = d.used;
  if (spec.changes == 0) return true;  // no-edit records: the rule is "stop at once"

  struct Cand {
    int degsum;
    std::pair<int, int> labels;
    std::pair<int, int> pair;
  };
  int want = -1;
  while (static_cast<int>(edits.size()) != want) {
    std::vector<Cand> cands;
    for (int i = 0; i < d.n; ++i)
      for (int j = i + 1; j < d.n; ++j) {
        if (d.bonded(i, j)) continue;
        bool taken = false;
        for (const auto& e : edits) taken |= (e.u == i && e.v == j);
        if (taken) continue;
        int degsum = product_used[i] + product_used[j];
        cands.push_back({degsum,
                         {std::min(elements[i], elements[j]), std::max(elements[i], elements[j])},
                         {i, j}});
      }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.degsum != b.degsum) return a.degsum > b.degsum;
      if (a.labels != b.labels) return a.labels < b.labels;
      return a.pair < b.pair;
    });

    auto feasible = [&](const Cand& c, int o) {
      return product_used[c.pair.first] + o <= valence[c.pair.first] &&
             product_used[c.pair.second] + o <= valence[c.pair.second];
    };
    const Cand* take = nullptr;
    int take_order = 0;
    for (const Cand& c : cands) {
      int o = (spec.vary_bond && c.degsum % 2 == 1) ? 2 : 1;
      if (!feasible(c, o)) continue;
      if (take == nullptr) {
        take = &c;
        take_order = o;
      } else if (take->degsum == c.degsum && take->labels == c.labels) {
        return false;  // a visible twin competes with the taken pair
      } else {
        break;  // ranking is sorted, no later candidate can tie
      }
    }
    if (take == nullptr) return false;

    if (want < 0) {
      want = take->degsum >= kThreeEditDegsum ? 3 : take->degsum >= kTwoEditDegsum ? 2 : 1;
      if (want != spec.changes) return false;
    }
    BondType b = take_order == 2 ? BondType::kDouble : BondType::kSingle;
    product_used[take->pair.first] += take_order;
    product_used[take->pair.second] += take_order;
    edits.push_back({take->pair.first, take->pair.second, b});
  }
  return true;
}

}  // namespace

void ToyTaskSpec::validate() const {
  if (min_nodes < 2 || max_nodes < min_nodes)
    throw std::invalid_argument("toy spec: need 2 <= min_nodes <= max_nodes");
  if (alphabet < 1 || alphabet > kAlphabetLimit)
    throw std::invalid_argument("toy spec: alphabet must be in [1, 5]");
  if (changes < 0 || changes > 3)
    throw std::invalid_argument("toy spec: changes must be in [0, 3]");
  if (changes > 0 && max_nodes < 3)
    throw std::invalid_argument("toy spec: edits need at least 3 nodes for an open pair");
  if (extra_edge_prob < 0 || extra_edge_prob > 1 || reagent_prob < 0 || reagent_prob > 1)
    throw std::invalid_argument("toy spec: probabilities must be in [0, 1]");
}

ReactionRecord generate_toy_record(const ToyTaskSpec& spec, const std::string& split,
                                   uint64_t index) {
  spec.validate();
  Rng base = Rng(spec.seed).fork(hash_combine(fnv1a64(split), index));

  for (int attempt = 0; attempt < 256; ++attempt) {
    Rng r = base.fork(attempt);
    Draft d = draw_structure(spec, r);

    // Elements are drawn before the edits are picked: edit feasibility then
    // depends on each atom's own valence, which the model can see.
    std::vector<int> elements(d.n), valence(d.n);
    for (int i = 0; i < d.n; ++i) {
      elements[i] = draw_element(spec, r, d.used[i]);
      valence[i] = element_valence(elements[i]);
    }

    std::vector<ReactionTriple> edits;
    std::vector<int> product_used;
    if (!pick_edits(spec, d, elements, valence, edits, product_used)) continue;

    std::vector<Atom> atoms(d.n);
    for (int i = 0; i < d.n; ++i) {
      atoms[i].element = elements[i];
      atoms[i].map_number = i + 1;
    }
    std::vector<std::tuple<int, int, BondType>> bonds;
    for (int i = 0; i < d.n; ++i)
      for (int j = i + 1; j < d.n; ++j)
        if (d.bonded(i, j)) bonds.push_back({i, j, BondType::kSingle});

    // Detached spectator component, never touched by the edits.
    if (r.bernoulli(spec.reagent_prob)) {
      int extra = r.range(1, 2);
      for (int t = 0; t < extra; ++t) {
        Atom a;
        a.element = draw_element(spec, r, 1);
        a.is_reagent = true;
        atoms.push_back(a);
      }
      if (extra == 2) bonds.push_back({d.n, d.n + 1, BondType::kSingle});
    }

    ReactionRecord rec;
    rec.id = "toy-" + split + "-" + std::to_string(index);
    rec.input = MolGraph::build(atoms, bonds);
    MolGraph edited = rec.input;
    for (const auto& t : edits) edited.set_bond(t.u, t.v, t.bond);
    std::vector<int> mapped;
    for (int i = 0; i < d.n; ++i) mapped.push_back(i);
    rec.product = edited.induced_subgraph(mapped);
    rec.gold = edits;  // pick_edits emits (u < v); sort by pair for the record
    std::sort(rec.gold.begin(), rec.gold.end());
    return rec;
  }
  throw std::runtime_error("toy generator: no feasible graph for spec after 256 attempts (index " +
                           std::to_string(index) + ")");
}

std::vector<ReactionRecord> generate_toy_dataset(const ToyTaskSpec& spec,
                                                 const std::string& split, int count) {
  std::vector<ReactionRecord> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(generate_toy_record(spec, split, static_cast<uint64_t>(i)));
  return out;
}

}  // namespace gtpn
