// Molecular graphs as attributed undirected multigraph-free adjacency:
// typed bonds, no self loops, possibly many connected components. Atom
// attributes that derive from bonding (degree, explicit valence, ring
// membership) are recomputed whenever the bond set changes, so they can be
// read without revalidation.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace gtpn {

enum class BondType : uint8_t { kNull = 0, kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

inline constexpr int kNumBondTypes = 5;

// Bond order in half units: single 2, double 4, triple 6, aromatic 3.
int bond_order_x2(BondType b);
const char* bond_name(BondType b);
std::optional<BondType> bond_from_name(std::string_view name);

// Fixed element vocabulary (72 atomic numbers). Index = position.
int element_vocab_size();
// Vocabulary index for an atomic number, or -1 if the element is unknown.
int element_vocab_index(int atomic_number);
int element_vocab_entry(int index);
// Symbol <-> atomic number for every vocabulary element.
const char* element_symbol(int atomic_number);
int element_by_symbol(std::string_view symbol);

struct Atom {
  int element = 6;  // atomic number
  int charge = 0;
  int explicit_h = 0;
  int map_number = 0;  // 0 = unmapped
  bool is_reagent = false;

  // Derived from bonding; maintained by MolGraph.
  int degree = 0;
  int explicit_valence = 0;  // floor of the bond-order sum (aromatic = 1.5)
  bool in_ring = false;
};

// One bond edit: set the bond between atoms u < v to `bond` (kNull deletes).
struct ReactionTriple {
  int u = -1;
  int v = -1;
  BondType bond = BondType::kNull;

  friend bool operator==(const ReactionTriple&, const ReactionTriple&) = default;
  friend auto operator<=>(const ReactionTriple& a, const ReactionTriple& b) {
    return std::tie(a.u, a.v, a.bond) <=> std::tie(b.u, b.v, b.bond);
  }
};

class MolGraph {
 public:
  MolGraph() = default;
  static MolGraph build(std::vector<Atom> atoms,
                        const std::vector<std::tuple<int, int, BondType>>& bonds);

  int add_atom(const Atom& a);
  // Sets or deletes (kNull) a bond and refreshes derived attributes.
  void set_bond(int u, int v, BondType b);

  int num_atoms() const { return static_cast<int>(atoms_.size()); }
  const Atom& atom(int i) const { return atoms_[i]; }
  Atom& mutable_atom(int i) { return atoms_[i]; }

  BondType bond(int u, int v) const;  // kNull when not bonded
  // Neighbors sorted by atom index; iteration order is deterministic.
  const std::vector<std::pair<int, BondType>>& neighbors(int i) const { return adj_[i]; }

  // All bonds as (u, v, type) with u < v, sorted by (u, v).
  std::vector<std::tuple<int, int, BondType>> bond_list() const;
  int num_bonds() const;

  // Connected component id per atom (ids are ordinal by lowest member).
  std::vector<int> components() const;

  // Graph containing only the listed atoms, reindexed in `keep` order; bonds
  // among kept atoms survive. `keep` must be sorted ascending.
  MolGraph induced_subgraph(const std::vector<int>& keep) const;

  void recompute_derived();

 private:
  std::vector<Atom> atoms_;
  std::vector<std::vector<std::pair<int, BondType>>> adj_;
};

struct ReactionRecord {
  std::string id;
  MolGraph input;    // reactants plus reagents (reagent atoms flagged)
  MolGraph product;  // gold product graph
  std::vector<ReactionTriple> gold;  // sorted by (u, v); indices into `input`
};

// Bond edits that transform `input` into `product`, matched by atom map
// number. A bond whose one endpoint is absent from the product becomes a
// deletion triple (leaving-group convention); bonds with both endpoints
// absent are dropped with the fragment. Result is sorted by (u, v).
// Preconditions checked: every product atom's map number exists in `input`,
// map numbers are unique within each graph.
std::vector<ReactionTriple> extract_triples(const MolGraph& input, const MolGraph& product);

// Applies one edit, returning a new graph; derived attributes refreshed.
// Rejects out-of-range/equal endpoints and no-op edits (new bond == current).
MolGraph apply_triple(const MolGraph& g, const ReactionTriple& t);

// Permutation-invariant 64-bit graph digest via iterated neighborhood color
// refinement (as many rounds as atoms). Seed colors cover element, charge,
// explicit H count and, when use_maps, the atom map number. Bond types are
// folded into every round. Isomorphic graphs (same attributes) collide by
// construction; distinct graphs may collide only as ordinary hash collisions.
uint64_t canonical_hash(const MolGraph& g, bool use_maps);

// Maximum allowed total valence per element (atomic number keyed).
class ValenceTable {
 public:
  // C 4, N 3, O 2, F/Cl/Br/I 1, S 6, P 5, B 3, H 1, Si 4.
  static ValenceTable defaults();
  void set(int element, int max_valence);
  // Max valence in half units; nullopt when the element is unconstrained.
  std::optional<int> max_x2(int element) const;

 private:
  std::vector<std::pair<int, int>> limits_;  // sorted by element
};

struct ValenceViolation {
  int atom = -1;
  int valence_x2 = 0;  // bond order sum (incl. explicit H) in half units
  int max_x2 = 0;
};

// Atoms whose bond-order sum (aromatic 1.5) plus explicit H count exceeds the
// table's maximum. Exact half-unit arithmetic; unconstrained elements pass.
std::vector<ValenceViolation> validate_valence(const MolGraph& g, const ValenceTable& table);

// The five bonding/charge attributes normalized into [0,1] (clamped):
// degree/6, explicit_valence/8, explicit_h/4, (charge+4)/8, in_ring.
std::array<double, 5> atom_attributes(const Atom& a);

inline constexpr int kNumAtomAttributes = 5;

}  // namespace gtpn
