#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gtpn/molgraph.hpp"

namespace gtpn {

// All tunables in one flat struct. Defaults are the full-scale settings; toy
// profiles override via config files or key=value pairs.
struct Config {
  uint64_t seed = 1;

  // Encoder.
  int atom_embed_dim = 51;
  int bond_embed_dim = 21;
  int state_dim = 99;  // node state and message width
  int mp_steps = 6;

  // Pair scoring.
  int pair_dim = 71;         // pair representation z
  int score_hidden_dim = 51; // hidden width of the score head
  int attn_hidden_dim = 71;  // hidden width of the attention relation
  int pool_dim = 71;         // width of the pooled top-K summary
  bool global_pairs = true;  // attention context on (off = local variant)
  int top_k = 10;

  // Policy.
  int gru_dim = 101;
  int head_hidden_dim = 81;  // signal and bond heads
  int value_hidden_dim = 99;
  int t_max = 8;
  // Bond types the policy may emit (sorted, unique). Bond embeddings always
  // cover all five types regardless.
  std::vector<BondType> bond_vocab{BondType::kNull, BondType::kSingle, BondType::kDouble,
                                   BondType::kTriple, BondType::kAromatic};

  // Optimization.
  int batch_size = 20;
  int train_steps = 4000;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double plateau_factor = 0.5;
  int plateau_patience = 1000;
  double min_lr = 5e-5;
  double loss_a2c = 1.0;
  double loss_value = 0.5;
  double loss_pair = 1.0;
  double loss_over_length = 0.2;
  double loss_top_k = 0.2;
  int eval_every = 200;
  // Stop as soon as validation top-1 reaches this fraction; negative disables.
  double early_stop_top1 = -1.0;

  // Decoding.
  int beam_width = 20;
  int val_beam_width = 1;  // cheaper width for the in-training validation pass
};

// Applies one `key=value` assignment; throws std::runtime_error on unknown
// keys or unparsable values.
void config_set(Config& cfg, const std::string& key, const std::string& value);

// Reads `key = value` lines ('#' comments, blank lines allowed).
Config parse_config(std::istream& in, const Config& base = Config{});
Config load_config_file(const std::string& path, const Config& base = Config{});

// Every key in sorted order, one `key=value` per line. Two configs are
// behaviorally identical iff their canonical texts match.
std::string canonical_text(const Config& cfg);
uint64_t config_hash(const Config& cfg);

// Hash of only the keys that fix the learned function: layer dimensions,
// message-passing depth, attention variant, top-K, and bond vocabulary.
// Training-schedule and decoding keys are excluded, so a checkpoint stays
// loadable when those differ between training and evaluation.
uint64_t model_config_hash(const Config& cfg);

// Validates ranges (positive dims, k >= 1, non-empty bond vocabulary, ...);
// throws std::runtime_error naming the offending key.
void validate(const Config& cfg);

std::string bond_vocab_to_string(const std::vector<BondType>& vocab);
std::vector<BondType> bond_vocab_from_string(const std::string& text);

}  // namespace gtpn
