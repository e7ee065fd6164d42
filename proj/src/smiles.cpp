#include "gtpn/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <vector>

namespace gtpn {

namespace {

bool is_organic_subset(int z) {
  return z == 5 || z == 6 || z == 7 || z == 8 || z == 15 || z == 16 || z == 9 || z == 17 ||
         z == 35 || z == 53;
}

// Lowercase aromatic shorthands accepted outside and inside brackets.
int aromatic_element(char c) {
  switch (c) {
    case 'b': return 5;
    case 'c': return 6;
    case 'n': return 7;
    case 'o': return 8;
    case 'p': return 15;
    case 's': return 16;
    default: return -1;
  }
}

struct Parser {
  std::string_view s;
  size_t pos = 0;

  MolGraph g;
  std::vector<bool> aromatic;

  int prev = -1;                         // atom awaiting the next bond
  std::optional<BondType> pending_bond;  // explicit symbol before next atom/closure
  size_t pending_bond_pos = 0;
  std::vector<int> branch_stack;

  struct OpenClosure {
    int atom;
    std::optional<BondType> bond;
    size_t pos;
  };
  std::map<int, OpenClosure> open_closures;

  [[noreturn]] void syntax(size_t at, const std::string& msg) {
    throw SmilesError(SmilesError::Kind::kSyntax, at, "SMILES syntax error: " + msg);
  }
  [[noreturn]] void unsupported(size_t at, const std::string& what) {
    throw SmilesError(SmilesError::Kind::kUnsupported, at,
                      "unsupported SMILES feature: " + what);
  }
  [[noreturn]] void unknown_element(size_t at, const std::string& sym) {
    throw SmilesError(SmilesError::Kind::kUnknownElement, at, "unknown element: " + sym);
  }

  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  char take() { return s[pos++]; }

  int parse_int() {
    size_t start = pos;
    long v = 0;
    while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (take() - '0');
      if (v > 1'000'000) syntax(start, "number too large");
    }
    return static_cast<int>(v);
  }

  void add_atom(int element, bool arom, int charge, int h, int map_number, size_t at) {
    if (element_vocab_index(element) < 0)
      unknown_element(at, element_symbol(element) ? element_symbol(element)
                                                  : ("Z=" + std::to_string(element)));
    Atom a;
    a.element = element;
    a.charge = charge;
    a.explicit_h = h;
    a.map_number = map_number;
    int idx = g.add_atom(a);
    aromatic.push_back(arom);
    if (prev >= 0) {
      BondType b = pending_bond ? *pending_bond
                                : ((aromatic[prev] && arom) ? BondType::kAromatic
                                                            : BondType::kSingle);
      if (g.bond(prev, idx) != BondType::kNull) syntax(at, "duplicate bond");
      g.set_bond(prev, idx, b);
    } else if (pending_bond) {
      syntax(pending_bond_pos, "bond symbol with no preceding atom");
    }
    pending_bond.reset();
    prev = idx;
  }

  void ring_closure(int number, size_t at) {
    if (prev < 0) syntax(at, "ring closure with no preceding atom");
    auto it = open_closures.find(number);
    if (it == open_closures.end()) {
      open_closures.emplace(number, OpenClosure{prev, pending_bond, at});
      pending_bond.reset();
      return;
    }
    OpenClosure o = it->second;
    open_closures.erase(it);
    if (o.atom == prev) syntax(at, "ring closure to the same atom");
    BondType b;
    if (o.bond && pending_bond) {
      if (*o.bond != *pending_bond) syntax(at, "conflicting ring closure bond symbols");
      b = *o.bond;
    } else if (o.bond) {
      b = *o.bond;
    } else if (pending_bond) {
      b = *pending_bond;
    } else {
      b = (aromatic[o.atom] && aromatic[prev]) ? BondType::kAromatic : BondType::kSingle;
    }
    if (g.bond(o.atom, prev) != BondType::kNull) syntax(at, "duplicate ring bond");
    g.set_bond(o.atom, prev, b);
    pending_bond.reset();
  }

  // Element symbol inside brackets: uppercase+optional lowercase (greedy
  // two-letter match against the vocabulary) or an aromatic lowercase letter.
  std::pair<int, bool> bracket_element(size_t at) {
    if (done()) syntax(at, "unterminated bracket atom");
    char c = peek();
    if (std::islower(static_cast<unsigned char>(c))) {
      int z = aromatic_element(c);
      if (z < 0) unknown_element(pos, std::string(1, c));
      take();
      return {z, true};
    }
    if (!std::isupper(static_cast<unsigned char>(c))) syntax(pos, "expected element symbol");
    size_t sym_at = pos;
    std::string sym(1, take());
    std::string attempted = sym;
    if (!done() && std::islower(static_cast<unsigned char>(peek()))) {
      std::string two = sym + peek();
      attempted = two;
      if (element_by_symbol(two) >= 0) {
        take();
        sym = two;
      }
    }
    int z = element_by_symbol(sym);
    // Neither spelling matched: blame the longest symbol the input spells.
    if (z < 0) unknown_element(sym_at, attempted);
    return {z, false};
  }

  void parse_bracket_atom() {
    size_t at = pos;
    take();  // '['
    if (!done() && std::isdigit(static_cast<unsigned char>(peek())))
      unsupported(pos, "isotope specification");
    auto [z, arom] = bracket_element(at);
    int h = 0, charge = 0, map_number = 0;
    while (!done() && peek() != ']') {
      char c = peek();
      if (c == '@') unsupported(pos, "stereochemistry");
      if (c == 'H') {
        take();
        h = (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ? parse_int() : 1;
      } else if (c == '+' || c == '-') {
        int sign = (c == '+') ? 1 : -1;
        size_t cp = pos;
        take();
        if (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
          charge = sign * parse_int();
        } else {
          charge = sign;
          while (!done() && peek() == c) {
            take();
            charge += sign;
          }
        }
        if (std::abs(charge) > 15) syntax(cp, "charge out of range");
      } else if (c == ':') {
        take();
        if (done() || !std::isdigit(static_cast<unsigned char>(peek())))
          syntax(pos, "expected atom map number after ':'");
        map_number = parse_int();
      } else {
        syntax(pos, std::string("unexpected character '") + c + "' in bracket atom");
      }
    }
    if (done()) syntax(at, "unterminated bracket atom");
    take();  // ']'
    add_atom(z, arom, charge, h, map_number, at);
  }

  void parse_organic_atom() {
    size_t at = pos;
    char c = take();
    if (std::islower(static_cast<unsigned char>(c))) {
      int z = aromatic_element(c);
      if (z < 0) syntax(at, std::string("unexpected character '") + c + "'");
      add_atom(z, true, 0, 0, 0, at);
      return;
    }
    std::string sym(1, c);
    // Two-letter organic-subset symbols: Cl, Br.
    if (!done() && std::islower(static_cast<unsigned char>(peek()))) {
      std::string two = sym + peek();
      if (two == "Cl" || two == "Br") {
        take();
        sym = two;
      }
    }
    int z = element_by_symbol(sym);
    if (z < 0) unknown_element(at, sym);
    if (!is_organic_subset(z))
      syntax(at, "element " + sym + " must be written in brackets");
    add_atom(z, false, 0, 0, 0, at);
  }

  MolGraph run() {
    if (s.empty()) syntax(0, "empty SMILES");
    while (!done()) {
      char c = peek();
      if (c == '[') {
        parse_bracket_atom();
      } else if (std::isupper(static_cast<unsigned char>(c)) ||
                 std::islower(static_cast<unsigned char>(c))) {
        parse_organic_atom();
      } else if (c == '-' || c == '=' || c == '#' || c == ':') {
        if (pending_bond) syntax(pos, "two bond symbols in a row");
        pending_bond_pos = pos;
        take();
        pending_bond = (c == '-')   ? BondType::kSingle
                       : (c == '=') ? BondType::kDouble
                       : (c == '#') ? BondType::kTriple
                                    : BondType::kAromatic;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t at = pos;
        ring_closure(take() - '0', at);
      } else if (c == '%') {
        size_t at = pos;
        take();
        if (pos + 1 >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])) ||
            !std::isdigit(static_cast<unsigned char>(s[pos + 1])))
          syntax(at, "'%' must be followed by two digits");
        int number = (take() - '0') * 10;
        number += take() - '0';
        ring_closure(number, at);
      } else if (c == '(') {
        if (prev < 0) syntax(pos, "branch with no preceding atom");
        if (pending_bond) syntax(pending_bond_pos, "bond symbol before '('");
        branch_stack.push_back(prev);
        take();
      } else if (c == ')') {
        if (branch_stack.empty()) syntax(pos, "unmatched ')'");
        if (pending_bond) syntax(pending_bond_pos, "dangling bond symbol");
        prev = branch_stack.back();
        branch_stack.pop_back();
        take();
      } else if (c == '.') {
        if (!branch_stack.empty()) syntax(pos, "'.' inside a branch");
        if (pending_bond) syntax(pending_bond_pos, "dangling bond symbol");
        if (prev < 0) syntax(pos, "empty component before '.'");
        prev = -1;
        take();
      } else if (c == '/' || c == '\\') {
        unsupported(pos, "stereochemistry");
      } else if (c == '@') {
        unsupported(pos, "stereochemistry");
      } else if (c == '*') {
        unsupported(pos, "wildcard atom");
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        syntax(pos, "whitespace inside SMILES");
      } else {
        syntax(pos, std::string("unexpected character '") + c + "'");
      }
    }
    if (!branch_stack.empty()) syntax(s.size(), "unclosed branch");
    if (pending_bond) syntax(pending_bond_pos, "dangling bond symbol");
    if (prev < 0 && g.num_atoms() == 0) syntax(0, "empty SMILES");
    if (prev < 0) syntax(s.size(), "trailing '.'");
    if (!open_closures.empty())
      syntax(open_closures.begin()->second.pos,
             "unclosed ring bond " + std::to_string(open_closures.begin()->first));
    g.recompute_derived();
    return std::move(g);
  }
};

const char* bond_symbol(BondType b) {
  switch (b) {
    case BondType::kSingle: return "";
    case BondType::kDouble: return "=";
    case BondType::kTriple: return "#";
    case BondType::kAromatic: return ":";
    default: return "";
  }
}

bool needs_brackets(const Atom& a) {
  return a.charge != 0 || a.explicit_h != 0 || a.map_number != 0 ||
         !is_organic_subset(a.element);
}

std::string atom_token(const Atom& a) {
  const char* sym = element_symbol(a.element);
  if (sym == nullptr) throw std::invalid_argument("write_smiles: element not in vocabulary");
  if (!needs_brackets(a)) return sym;
  std::string t = "[";
  t += sym;
  if (a.explicit_h == 1)
    t += "H";
  else if (a.explicit_h > 1)
    t += "H" + std::to_string(a.explicit_h);
  if (a.charge == 1)
    t += "+";
  else if (a.charge == -1)
    t += "-";
  else if (a.charge > 1)
    t += "+" + std::to_string(a.charge);
  else if (a.charge < -1)
    t += "-" + std::to_string(-a.charge);
  if (a.map_number != 0) t += ":" + std::to_string(a.map_number);
  t += "]";
  return t;
}

struct Writer {
  const MolGraph& g;
  std::vector<int> disc;
  std::vector<int> parent;
  // Ring closures discovered during DFS: per atom, list of (other, number).
  std::vector<std::vector<std::pair<int, int>>> closure_open;   // at the ancestor
  std::vector<std::vector<std::pair<int, int>>> closure_close;  // at the descendant
  int timer = 0;
  int next_number = 1;
  std::vector<int> free_numbers;
  std::string out;

  explicit Writer(const MolGraph& graph)
      : g(graph),
        disc(graph.num_atoms(), -1),
        parent(graph.num_atoms(), -1),
        closure_open(graph.num_atoms()),
        closure_close(graph.num_atoms()) {}

  int alloc_number() {
    if (!free_numbers.empty()) {
      int n = free_numbers.back();
      free_numbers.pop_back();
      return n;
    }
    if (next_number > 99)
      throw std::invalid_argument("write_smiles: more than 99 simultaneous ring bonds");
    return next_number++;
  }

  // First pass: DFS assigning discovery order and collecting back edges.
  void survey(int root) {
    std::vector<std::pair<int, int>> stack{{root, 0}};
    disc[root] = timer++;
    while (!stack.empty()) {
      auto& [u, pos] = stack.back();
      if (pos < static_cast<int>(g.neighbors(u).size())) {
        int v = g.neighbors(u)[pos++].first;
        if (disc[v] < 0) {
          parent[v] = u;
          disc[v] = timer++;
          stack.emplace_back(v, 0);
        } else if (v != parent[u] && disc[v] < disc[u]) {
          // Back edge u -> ancestor v; number assigned when v is written.
          closure_open[v].emplace_back(u, -1);
          closure_close[u].emplace_back(v, -1);
        }
      } else {
        stack.pop_back();
      }
    }
  }

  void number_for(std::vector<std::pair<int, int>>& lst, int other, int number) {
    for (auto& [o, n] : lst)
      if (o == other && n < 0) {
        n = number;
        return;
      }
  }

  std::string closure_token(int u, int v, int number) {
    std::string t = bond_symbol(g.bond(u, v));
    if (number >= 10)
      t += "%" + std::to_string(number);
    else
      t += std::to_string(number);
    return t;
  }

  void emit(int root) {
    // Recursive emission in the same order as survey().
    std::vector<std::pair<int, int>> stack{{root, -1}};
    emit_atom(root);
    emit_children(root);
  }

  void emit_atom(int u) {
    out += atom_token(g.atom(u));
    // Openings at the ancestor side get numbers now, in descendant disc order.
    std::sort(closure_open[u].begin(), closure_open[u].end(),
              [&](const auto& a, const auto& b) { return disc[a.first] < disc[b.first]; });
    for (auto& [other, number] : closure_open[u]) {
      number = alloc_number();
      number_for(closure_close[other], u, number);
      out += closure_token(u, other, number);
    }
    for (auto& [other, number] : closure_close[u]) {
      out += closure_token(u, other, number);
      free_numbers.push_back(number);
    }
  }

  void emit_children(int u) {
    std::vector<int> children;
    for (const auto& [v, b] : g.neighbors(u))
      if (parent[v] == u && disc[v] > disc[u]) children.push_back(v);
    std::sort(children.begin(), children.end(),
              [&](int a, int b) { return disc[a] < disc[b]; });
    for (size_t k = 0; k < children.size(); ++k) {
      int c = children[k];
      bool last = (k + 1 == children.size());
      if (!last) out += "(";
      out += bond_symbol(g.bond(u, c));
      emit_atom(c);
      emit_children(c);
      if (!last) out += ")";
    }
  }

  std::string run() {
    bool first = true;
    for (int i = 0; i < g.num_atoms(); ++i) {
      if (disc[i] >= 0) continue;
      if (!first) out += ".";
      first = false;
      survey(i);
      emit(i);
    }
    return out;
  }
};

}  // namespace

MolGraph parse_smiles(std::string_view smiles) {
  Parser p;
  p.s = smiles;
  return p.run();
}

std::string write_smiles(const MolGraph& g) {
  if (g.num_atoms() == 0) throw std::invalid_argument("write_smiles: empty graph");
  Writer w(g);
  return w.run();
}

}  // namespace gtpn
