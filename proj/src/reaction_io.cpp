#include "gtpn/reaction_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "gtpn/smiles.hpp"

namespace gtpn {

namespace {

void merge_graph(MolGraph& dst, const MolGraph& src, bool as_reagent) {
  int offset = dst.num_atoms();
  for (int i = 0; i < src.num_atoms(); ++i) {
    Atom a = src.atom(i);
    if (as_reagent) a.is_reagent = true;
    dst.add_atom(a);
  }
  for (const auto& [u, v, b] : src.bond_list()) dst.set_bond(offset + u, offset + v, b);
}

nlohmann::json graph_to_json(const MolGraph& g) {
  nlohmann::json atoms = nlohmann::json::array();
  for (int i = 0; i < g.num_atoms(); ++i) {
    const Atom& a = g.atom(i);
    atoms.push_back({{"z", a.element},
                     {"charge", a.charge},
                     {"h", a.explicit_h},
                     {"map", a.map_number},
                     {"reagent", a.is_reagent}});
  }
  nlohmann::json bonds = nlohmann::json::array();
  for (const auto& [u, v, b] : g.bond_list())
    bonds.push_back(nlohmann::json::array({u, v, bond_name(b)}));
  return {{"atoms", atoms}, {"bonds", bonds}};
}

MolGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.contains("bonds"))
    throw std::runtime_error("graph object must have \"atoms\" and \"bonds\"");
  MolGraph g;
  for (const auto& ja : j.at("atoms")) {
    Atom a;
    a.element = ja.at("z").get<int>();
    a.charge = ja.value("charge", 0);
    a.explicit_h = ja.value("h", 0);
    a.map_number = ja.value("map", 0);
    a.is_reagent = ja.value("reagent", false);
    if (element_vocab_index(a.element) < 0)
      throw std::runtime_error("unknown element z=" + std::to_string(a.element));
    g.add_atom(a);
  }
  for (const auto& jb : j.at("bonds")) {
    if (!jb.is_array() || jb.size() != 3)
      throw std::runtime_error("bond must be [u, v, type]");
    int u = jb.at(0).get<int>();
    int v = jb.at(1).get<int>();
    auto b = bond_from_name(jb.at(2).get<std::string>());
    if (!b || *b == BondType::kNull)
      throw std::runtime_error("bad bond type: " + jb.at(2).get<std::string>());
    if (g.bond(u, v) != BondType::kNull) throw std::runtime_error("duplicate bond");
    g.set_bond(u, v, *b);
  }
  return g;
}

std::string record_id_or(const nlohmann::json& j, size_t line) {
  if (j.contains("id")) {
    const auto& id = j.at("id");
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<long long>());
  }
  return std::to_string(line);
}

}  // namespace

std::string validate_and_extract(ReactionRecord& rec) {
  if (rec.input.num_atoms() == 0) return "empty input graph";
  if (rec.product.num_atoms() == 0) return "empty product graph";
  try {
    rec.gold = extract_triples(rec.input, rec.product);
  } catch (const std::exception& e) {
    return e.what();
  }
  for (const auto& t : rec.gold) {
    if (rec.input.atom(t.u).is_reagent || rec.input.atom(t.v).is_reagent)
      return "edit touches a reagent atom";
  }
  return {};
}

LoadResult load_reaction_smiles(std::istream& in) {
  LoadResult result;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    size_t a = line.find('>');
    size_t b = (a == std::string::npos) ? std::string::npos : line.find('>', a + 1);
    std::string id = std::to_string(lineno);
    if (b == std::string::npos || line.find('>', b + 1) != std::string::npos) {
      result.warnings.push_back({lineno, id, "expected reactants>reagents>products"});
      continue;
    }
    std::string reactants = line.substr(0, a);
    std::string reagents = line.substr(a + 1, b - a - 1);
    std::string products = line.substr(b + 1);

    try {
      ReactionRecord rec;
      rec.id = id;
      rec.input = parse_smiles(reactants);
      if (!reagents.empty()) merge_graph(rec.input, parse_smiles(reagents), true);
      rec.product = parse_smiles(products);
      std::string err = validate_and_extract(rec);
      if (!err.empty()) {
        result.warnings.push_back({lineno, id, err});
        continue;
      }
      result.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      result.warnings.push_back({lineno, id, e.what()});
    }
  }
  return result;
}

LoadResult load_reaction_jsonl(std::istream& in) {
  LoadResult result;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t\r")] == '#') continue;
    std::string id = std::to_string(lineno);
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      id = record_id_or(j, lineno);
      ReactionRecord rec;
      rec.id = id;
      rec.input = graph_from_json(j.at("input"));
      rec.product = graph_from_json(j.at("product"));
      std::string err = validate_and_extract(rec);
      if (!err.empty()) {
        result.warnings.push_back({lineno, id, err});
        continue;
      }
      result.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      result.warnings.push_back({lineno, id, e.what()});
    }
  }
  return result;
}

LoadResult load_reactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  size_t dot = path.find_last_of('.');
  std::string ext = (dot == std::string::npos) ? "" : path.substr(dot);
  if (ext == ".smi" || ext == ".rsmi" || ext == ".txt") return load_reaction_smiles(in);
  if (ext == ".jsonl" || ext == ".json") return load_reaction_jsonl(in);
  throw std::runtime_error("unrecognized dataset extension (want .smi/.rsmi/.txt/.jsonl): " +
                           path);
}

std::string reaction_record_to_jsonl(const ReactionRecord& rec) {
  nlohmann::json j{{"id", rec.id},
                   {"input", graph_to_json(rec.input)},
                   {"product", graph_to_json(rec.product)}};
  return j.dump();
}

void write_reaction_jsonl(std::ostream& out, const std::vector<ReactionRecord>& records) {
  for (const auto& rec : records) out << reaction_record_to_jsonl(rec) << '\n';
}

std::string reaction_record_to_smiles(const ReactionRecord& rec) {
  std::vector<int> reactant_atoms, reagent_atoms;
  for (int i = 0; i < rec.input.num_atoms(); ++i)
    (rec.input.atom(i).is_reagent ? reagent_atoms : reactant_atoms).push_back(i);
  std::string out = write_smiles(rec.input.induced_subgraph(reactant_atoms));
  out += '>';
  if (!reagent_atoms.empty()) out += write_smiles(rec.input.induced_subgraph(reagent_atoms));
  out += '>';
  out += write_smiles(rec.product);
  return out;
}

}  // namespace gtpn
