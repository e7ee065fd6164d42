#include "gtpn/molgraph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>

#include "gtpn/rng.hpp"

namespace gtpn {

int bond_order_x2(BondType b) {
  switch (b) {
    case BondType::kNull: return 0;
    case BondType::kSingle: return 2;
    case BondType::kDouble: return 4;
    case BondType::kTriple: return 6;
    case BondType::kAromatic: return 3;
  }
  return 0;
}

const char* bond_name(BondType b) {
  switch (b) {
    case BondType::kNull: return "null";
    case BondType::kSingle: return "single";
    case BondType::kDouble: return "double";
    case BondType::kTriple: return "triple";
    case BondType::kAromatic: return "aromatic";
  }
  return "?";
}

std::optional<BondType> bond_from_name(std::string_view name) {
  for (int b = 0; b < kNumBondTypes; ++b)
    if (name == bond_name(static_cast<BondType>(b))) return static_cast<BondType>(b);
  return std::nullopt;
}

namespace {

struct ElementEntry {
  int z;
  const char* symbol;
};

// 72-entry vocabulary covering the elements that occur in reaction corpora.
constexpr ElementEntry kElements[] = {
    {1, "H"},    {3, "Li"},  {4, "Be"},  {5, "B"},   {6, "C"},   {7, "N"},   {8, "O"},
    {9, "F"},    {11, "Na"}, {12, "Mg"}, {13, "Al"}, {14, "Si"}, {15, "P"},  {16, "S"},
    {17, "Cl"},  {19, "K"},  {20, "Ca"}, {21, "Sc"}, {22, "Ti"}, {23, "V"},  {24, "Cr"},
    {25, "Mn"},  {26, "Fe"}, {27, "Co"}, {28, "Ni"}, {29, "Cu"}, {30, "Zn"}, {31, "Ga"},
    {32, "Ge"},  {33, "As"}, {34, "Se"}, {35, "Br"}, {37, "Rb"}, {38, "Sr"}, {39, "Y"},
    {40, "Zr"},  {41, "Nb"}, {42, "Mo"}, {44, "Ru"}, {45, "Rh"}, {46, "Pd"}, {47, "Ag"},
    {48, "Cd"},  {49, "In"}, {50, "Sn"}, {51, "Sb"}, {52, "Te"}, {53, "I"},  {55, "Cs"},
    {56, "Ba"},  {57, "La"}, {58, "Ce"}, {60, "Nd"}, {62, "Sm"}, {63, "Eu"}, {64, "Gd"},
    {66, "Dy"},  {70, "Yb"}, {72, "Hf"}, {73, "Ta"}, {74, "W"},  {75, "Re"}, {76, "Os"},
    {77, "Ir"},  {78, "Pt"}, {79, "Au"}, {80, "Hg"}, {81, "Tl"}, {82, "Pb"}, {83, "Bi"},
    {90, "Th"},  {92, "U"},
};

constexpr int kNumElements = static_cast<int>(sizeof(kElements) / sizeof(kElements[0]));
static_assert(kNumElements == 72);

}  // namespace

int element_vocab_size() { return kNumElements; }

int element_vocab_index(int atomic_number) {
  for (int i = 0; i < kNumElements; ++i)
    if (kElements[i].z == atomic_number) return i;
  return -1;
}

int element_vocab_entry(int index) { return kElements[index].z; }

const char* element_symbol(int atomic_number) {
  int i = element_vocab_index(atomic_number);
  return i < 0 ? nullptr : kElements[i].symbol;
}

int element_by_symbol(std::string_view symbol) {
  for (int i = 0; i < kNumElements; ++i)
    if (symbol == kElements[i].symbol) return kElements[i].z;
  return -1;
}

MolGraph MolGraph::build(std::vector<Atom> atoms,
                         const std::vector<std::tuple<int, int, BondType>>& bonds) {
  MolGraph g;
  for (const Atom& a : atoms) g.add_atom(a);
  for (const auto& [u, v, b] : bonds) {
    if (b == BondType::kNull) throw std::invalid_argument("MolGraph::build: null bond in list");
    if (g.bond(u, v) != BondType::kNull)
      throw std::invalid_argument("MolGraph::build: duplicate bond");
    g.set_bond(u, v, b);
  }
  return g;
}

int MolGraph::add_atom(const Atom& a) {
  atoms_.push_back(a);
  atoms_.back().degree = 0;
  atoms_.back().explicit_valence = 0;
  atoms_.back().in_ring = false;
  adj_.emplace_back();
  return num_atoms() - 1;
}

BondType MolGraph::bond(int u, int v) const {
  if (u < 0 || v < 0 || u >= num_atoms() || v >= num_atoms())
    throw std::out_of_range("MolGraph::bond: atom index out of range");
  for (const auto& [n, b] : adj_[u])
    if (n == v) return b;
  return BondType::kNull;
}

void MolGraph::set_bond(int u, int v, BondType b) {
  if (u < 0 || v < 0 || u >= num_atoms() || v >= num_atoms())
    throw std::out_of_range("MolGraph::set_bond: atom index out of range");
  if (u == v) throw std::invalid_argument("MolGraph::set_bond: self loop");
  auto update = [&](int from, int to) {
    auto& lst = adj_[from];
    auto it = std::find_if(lst.begin(), lst.end(), [&](const auto& p) { return p.first == to; });
    if (b == BondType::kNull) {
      if (it != lst.end()) lst.erase(it);
    } else if (it != lst.end()) {
      it->second = b;
    } else {
      lst.insert(std::upper_bound(lst.begin(), lst.end(), std::make_pair(to, BondType::kNull),
                                  [](const auto& a, const auto& c) { return a.first < c.first; }),
                 {to, b});
    }
  };
  update(u, v);
  update(v, u);
  recompute_derived();
}

std::vector<std::tuple<int, int, BondType>> MolGraph::bond_list() const {
  std::vector<std::tuple<int, int, BondType>> out;
  for (int u = 0; u < num_atoms(); ++u)
    for (const auto& [v, b] : adj_[u])
      if (u < v) out.emplace_back(u, v, b);
  return out;
}

int MolGraph::num_bonds() const {
  int n = 0;
  for (const auto& lst : adj_) n += static_cast<int>(lst.size());
  return n / 2;
}

std::vector<int> MolGraph::components() const {
  std::vector<int> comp(num_atoms(), -1);
  int next = 0;
  for (int s = 0; s < num_atoms(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const auto& [v, b] : adj_[u]) {
        if (comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

MolGraph MolGraph::induced_subgraph(const std::vector<int>& keep) const {
  std::vector<int> newindex(num_atoms(), -1);
  MolGraph g;
  for (size_t i = 0; i < keep.size(); ++i) {
    newindex[keep[i]] = static_cast<int>(i);
    g.add_atom(atoms_[keep[i]]);
  }
  for (int old_u : keep)
    for (const auto& [old_v, b] : adj_[old_u])
      if (old_u < old_v && newindex[old_v] >= 0)
        g.set_bond(newindex[old_u], newindex[old_v], b);
  g.recompute_derived();
  return g;
}

void MolGraph::recompute_derived() {
  int n = num_atoms();
  // Degree and explicit valence are local sums.
  for (int i = 0; i < n; ++i) {
    atoms_[i].degree = static_cast<int>(adj_[i].size());
    int x2 = 0;
    for (const auto& [j, b] : adj_[i]) x2 += bond_order_x2(b);
    atoms_[i].explicit_valence = x2 / 2;
  }
  // Ring membership: an atom is in a ring iff it touches an edge that lies on
  // a cycle. Every non-bridge edge lies on a cycle, so one lowlink DFS marks
  // endpoints of back edges and of non-bridge tree edges.
  for (int i = 0; i < n; ++i) atoms_[i].in_ring = false;
  std::vector<int> disc(n, -1), low(n, 0), parent(n, -1), pos(n, 0);
  int timer = 0;
  for (int root = 0; root < n; ++root) {
    if (disc[root] >= 0) continue;
    std::vector<int> stack{root};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      int u = stack.back();
      if (pos[u] < static_cast<int>(adj_[u].size())) {
        int v = adj_[u][pos[u]++].first;
        if (disc[v] < 0) {
          parent[v] = u;
          disc[v] = low[v] = timer++;
          stack.push_back(v);
        } else if (v != parent[u]) {
          low[u] = std::min(low[u], disc[v]);
          if (disc[v] < disc[u]) {  // back edge to an ancestor: on a cycle
            atoms_[u].in_ring = true;
            atoms_[v].in_ring = true;
          }
        }
      } else {
        stack.pop_back();
        int p = parent[u];
        if (p >= 0) {
          low[p] = std::min(low[p], low[u]);
          if (low[u] <= disc[p]) {  // tree edge (p, u) is not a bridge
            atoms_[p].in_ring = true;
            atoms_[u].in_ring = true;
          }
        }
      }
    }
  }
}

std::vector<ReactionTriple> extract_triples(const MolGraph& input, const MolGraph& product) {
  auto index_by_map = [](const MolGraph& g, const char* which) {
    std::map<int, int> m;
    for (int i = 0; i < g.num_atoms(); ++i) {
      int mn = g.atom(i).map_number;
      if (mn == 0) continue;
      if (!m.emplace(mn, i).second)
        throw std::invalid_argument(std::string("extract_triples: duplicate map number in ") +
                                    which);
    }
    return m;
  };
  std::map<int, int> in_by_map = index_by_map(input, "input");
  std::map<int, int> prod_by_map = index_by_map(product, "product");
  for (const auto& [mn, pid] : prod_by_map)
    if (!in_by_map.count(mn))
      throw std::invalid_argument("extract_triples: product map number " + std::to_string(mn) +
                                  " missing from input");

  auto product_index = [&](int input_atom) -> int {
    int mn = input.atom(input_atom).map_number;
    if (mn == 0) return -1;
    auto it = prod_by_map.find(mn);
    return it == prod_by_map.end() ? -1 : it->second;
  };

  std::vector<ReactionTriple> out;
  // Bonds present in the input: changed, deleted, or severed by leaving.
  for (const auto& [u, v, b] : input.bond_list()) {
    int pu = product_index(u), pv = product_index(v);
    if (pu >= 0 && pv >= 0) {
      BondType nb = product.bond(pu, pv);
      if (nb != b) out.push_back({u, v, nb});
    } else if (pu >= 0 || pv >= 0) {
      out.push_back({u, v, BondType::kNull});  // leaving-group detachment
    }
  }
  // Bonds only in the product: formed.
  for (const auto& [pu, pv, b] : product.bond_list()) {
    int mu = product.atom(pu).map_number, mv = product.atom(pv).map_number;
    if (mu == 0 || mv == 0)
      throw std::invalid_argument("extract_triples: unmapped product atom in a bond");
    int u = in_by_map.at(mu), v = in_by_map.at(mv);
    if (input.bond(u, v) == BondType::kNull) {
      int a = std::min(u, v), c = std::max(u, v);
      out.push_back({a, c, b});
    }
  }
  for (auto& t : out)
    if (t.u > t.v) std::swap(t.u, t.v);
  std::sort(out.begin(), out.end());
  return out;
}

MolGraph apply_triple(const MolGraph& g, const ReactionTriple& t) {
  if (t.u < 0 || t.v < 0 || t.u >= g.num_atoms() || t.v >= g.num_atoms())
    throw std::invalid_argument("apply_triple: atom index out of range");
  if (t.u == t.v) throw std::invalid_argument("apply_triple: equal endpoints");
  if (g.bond(t.u, t.v) == t.bond)
    throw std::invalid_argument("apply_triple: edit is a no-op (bond already " +
                                std::string(bond_name(t.bond)) + ")");
  MolGraph out = g;
  out.set_bond(t.u, t.v, t.bond);
  return out;
}

uint64_t canonical_hash(const MolGraph& g, bool use_maps) {
  int n = g.num_atoms();
  if (n == 0) return 0x9ae16a3b2f90404full;
  std::vector<uint64_t> color(n), next(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atom(i);
    uint64_t h = 0x243f6a8885a308d3ull;
    h = hash_combine(h, static_cast<uint64_t>(a.element));
    h = hash_combine(h, static_cast<uint64_t>(a.charge + (1 << 20)));
    h = hash_combine(h, static_cast<uint64_t>(a.explicit_h));
    if (use_maps) h = hash_combine(h, static_cast<uint64_t>(a.map_number));
    color[i] = h;
  }
  std::vector<uint64_t> sig;
  for (int round = 0; round < n; ++round) {
    for (int i = 0; i < n; ++i) {
      sig.clear();
      for (const auto& [j, b] : g.neighbors(i))
        sig.push_back(hash_combine(static_cast<uint64_t>(b), color[j]));
      std::sort(sig.begin(), sig.end());
      uint64_t h = hash_combine(0x452821e638d01377ull, color[i]);
      for (uint64_t s : sig) h = hash_combine(h, s);
      next[i] = h;
    }
    color.swap(next);
  }
  std::sort(color.begin(), color.end());
  uint64_t digest = hash_combine(0x13198a2e03707344ull, static_cast<uint64_t>(n));
  for (uint64_t c : color) digest = hash_combine(digest, c);
  return digest;
}

ValenceTable ValenceTable::defaults() {
  ValenceTable t;
  t.set(1, 1);   // H
  t.set(5, 3);   // B
  t.set(6, 4);   // C
  t.set(7, 3);   // N
  t.set(8, 2);   // O
  t.set(9, 1);   // F
  t.set(14, 4);  // Si
  t.set(15, 5);  // P
  t.set(16, 6);  // S
  t.set(17, 1);  // Cl
  t.set(35, 1);  // Br
  t.set(53, 1);  // I
  return t;
}

void ValenceTable::set(int element, int max_valence) {
  auto it = std::lower_bound(limits_.begin(), limits_.end(), element,
                             [](const auto& p, int z) { return p.first < z; });
  if (it != limits_.end() && it->first == element)
    it->second = max_valence;
  else
    limits_.insert(it, {element, max_valence});
}

std::optional<int> ValenceTable::max_x2(int element) const {
  auto it = std::lower_bound(limits_.begin(), limits_.end(), element,
                             [](const auto& p, int z) { return p.first < z; });
  if (it == limits_.end() || it->first != element) return std::nullopt;
  return 2 * it->second;
}

std::vector<ValenceViolation> validate_valence(const MolGraph& g, const ValenceTable& table) {
  std::vector<ValenceViolation> out;
  for (int i = 0; i < g.num_atoms(); ++i) {
    const Atom& a = g.atom(i);
    std::optional<int> mx = table.max_x2(a.element);
    if (!mx) continue;
    int x2 = 2 * a.explicit_h;
    for (const auto& [j, b] : g.neighbors(i)) x2 += bond_order_x2(b);
    if (x2 > *mx) out.push_back({i, x2, *mx});
  }
  return out;
}

std::array<double, 5> atom_attributes(const Atom& a) {
  auto clamp01 = [](double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); };
  return {clamp01(a.degree / 6.0), clamp01(a.explicit_valence / 8.0),
          clamp01(a.explicit_h / 4.0), clamp01((a.charge + 4) / 8.0),
          a.in_ring ? 1.0 : 0.0};
}

}  // namespace gtpn
