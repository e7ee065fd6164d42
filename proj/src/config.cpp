#include "gtpn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gtpn/rng.hpp"

namespace gtpn {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long long parse_ll(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size())
    throw std::runtime_error("config key " + key + ": bad integer '" + value + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": bad number '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw std::runtime_error("config key " + key + ": bad boolean '" + value + "'");
}

// Shortest representation that round-trips; keeps canonical text stable.
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  for (int prec = 1; prec < 17; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof probe, "%.*g", prec, v);
    if (std::stod(probe) == v) return probe;
  }
  return buf;
}

struct Field {
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    auto add_int = [&](const std::string& key, int Config::*member) {
      t[key] = {[member, key](Config& c, const std::string& k, const std::string& v) {
                  c.*member = static_cast<int>(parse_ll(k, v));
                },
                [member](const Config& c) { return std::to_string(c.*member); }};
    };
    auto add_double = [&](const std::string& key, double Config::*member) {
      t[key] = {[member](Config& c, const std::string& k, const std::string& v) {
                  c.*member = parse_double(k, v);
                },
                [member](const Config& c) { return fmt_double(c.*member); }};
    };
    add_int("atom_embed_dim", &Config::atom_embed_dim);
    add_int("bond_embed_dim", &Config::bond_embed_dim);
    add_int("state_dim", &Config::state_dim);
    add_int("mp_steps", &Config::mp_steps);
    add_int("pair_dim", &Config::pair_dim);
    add_int("score_hidden_dim", &Config::score_hidden_dim);
    add_int("attn_hidden_dim", &Config::attn_hidden_dim);
    add_int("pool_dim", &Config::pool_dim);
    add_int("top_k", &Config::top_k);
    add_int("gru_dim", &Config::gru_dim);
    add_int("head_hidden_dim", &Config::head_hidden_dim);
    add_int("value_hidden_dim", &Config::value_hidden_dim);
    add_int("t_max", &Config::t_max);
    add_int("batch_size", &Config::batch_size);
    add_int("train_steps", &Config::train_steps);
    add_int("plateau_patience", &Config::plateau_patience);
    add_int("eval_every", &Config::eval_every);
    add_int("beam_width", &Config::beam_width);
    add_int("val_beam_width", &Config::val_beam_width);
    add_double("lr", &Config::lr);
    add_double("adam_beta1", &Config::adam_beta1);
    add_double("adam_beta2", &Config::adam_beta2);
    add_double("adam_eps", &Config::adam_eps);
    add_double("plateau_factor", &Config::plateau_factor);
    add_double("min_lr", &Config::min_lr);
    add_double("loss_a2c", &Config::loss_a2c);
    add_double("loss_value", &Config::loss_value);
    add_double("loss_pair", &Config::loss_pair);
    add_double("loss_over_length", &Config::loss_over_length);
    add_double("loss_top_k", &Config::loss_top_k);
    add_double("early_stop_top1", &Config::early_stop_top1);
    t["seed"] = {[](Config& c, const std::string& k, const std::string& v) {
                   c.seed = static_cast<uint64_t>(parse_ll(k, v));
                 },
                 [](const Config& c) { return std::to_string(c.seed); }};
    t["global_pairs"] = {[](Config& c, const std::string& k, const std::string& v) {
                           c.global_pairs = parse_bool(k, v);
                         },
                         [](const Config& c) {
                           return std::string(c.global_pairs ? "true" : "false");
                         }};
    t["bond_vocab"] = {[](Config& c, const std::string&, const std::string& v) {
                         c.bond_vocab = bond_vocab_from_string(v);
                       },
                       [](const Config& c) { return bond_vocab_to_string(c.bond_vocab); }};
    return t;
  }();
  return table;
}

}  // namespace

std::string bond_vocab_to_string(const std::vector<BondType>& vocab) {
  std::string out;
  for (size_t i = 0; i < vocab.size(); ++i) {
    if (i) out += ",";
    out += bond_name(vocab[i]);
  }
  return out;
}

std::vector<BondType> bond_vocab_from_string(const std::string& text) {
  std::vector<BondType> vocab;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto b = bond_from_name(item);
    if (!b) throw std::runtime_error("config key bond_vocab: unknown bond type '" + item + "'");
    vocab.push_back(*b);
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  if (vocab.empty()) throw std::runtime_error("config key bond_vocab: empty");
  return vocab;
}

void config_set(Config& cfg, const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) throw std::runtime_error("unknown config key: " + key);
  it->second.set(cfg, key, value);
}

Config parse_config(std::istream& in, const Config& base) {
  Config cfg = base;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    config_set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config load_config_file(const std::string& path, const Config& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in, base);
}

std::string canonical_text(const Config& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) {
    out += key;
    out += '=';
    out += field.get(cfg);
    out += '\n';
  }
  return out;
}

uint64_t config_hash(const Config& cfg) { return fnv1a64(canonical_text(cfg)); }

uint64_t model_config_hash(const Config& cfg) {
  static const char* const model_keys[] = {
      "atom_embed_dim", "bond_embed_dim", "state_dim",       "mp_steps",
      "pair_dim",       "score_hidden_dim", "attn_hidden_dim", "pool_dim",
      "top_k",          "gru_dim",        "head_hidden_dim", "value_hidden_dim",
      "global_pairs",   "bond_vocab",
  };
  std::string out;
  for (const char* key : model_keys) {
    out += key;
    out += '=';
    out += fields().at(key).get(cfg);
    out += '\n';
  }
  return fnv1a64(out);
}

void validate(const Config& cfg) {
  auto positive = [](const char* key, long long v) {
    if (v <= 0) throw std::runtime_error(std::string("config key ") + key + " must be positive");
  };
  positive("atom_embed_dim", cfg.atom_embed_dim);
  positive("bond_embed_dim", cfg.bond_embed_dim);
  positive("state_dim", cfg.state_dim);
  positive("mp_steps", cfg.mp_steps);
  positive("pair_dim", cfg.pair_dim);
  positive("score_hidden_dim", cfg.score_hidden_dim);
  positive("attn_hidden_dim", cfg.attn_hidden_dim);
  positive("pool_dim", cfg.pool_dim);
  positive("top_k", cfg.top_k);
  positive("gru_dim", cfg.gru_dim);
  positive("head_hidden_dim", cfg.head_hidden_dim);
  positive("value_hidden_dim", cfg.value_hidden_dim);
  positive("t_max", cfg.t_max);
  positive("batch_size", cfg.batch_size);
  positive("train_steps", cfg.train_steps);
  positive("plateau_patience", cfg.plateau_patience);
  positive("eval_every", cfg.eval_every);
  positive("beam_width", cfg.beam_width);
  positive("val_beam_width", cfg.val_beam_width);
  if (cfg.bond_vocab.size() < 2)
    throw std::runtime_error("config key bond_vocab must list at least two bond types");
  if (cfg.lr <= 0) throw std::runtime_error("config key lr must be positive");
  if (cfg.min_lr <= 0) throw std::runtime_error("config key min_lr must be positive");
  if (cfg.plateau_factor <= 0 || cfg.plateau_factor >= 1)
    throw std::runtime_error("config key plateau_factor must be in (0, 1)");
  if (cfg.bond_vocab.empty()) throw std::runtime_error("config key bond_vocab: empty");
}

}  // namespace gtpn
