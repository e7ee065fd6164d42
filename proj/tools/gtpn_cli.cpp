#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gtpn/config.hpp"
#include "gtpn/decode.hpp"
#include "gtpn/gradcheck.hpp"
#include "gtpn/metrics.hpp"
#include "gtpn/model.hpp"
#include "gtpn/reaction_io.hpp"
#include "gtpn/smiles.hpp"
#include "gtpn/toygen.hpp"
#include "gtpn/training.hpp"

namespace {

using namespace gtpn;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  int64_t seed = -1;                   // -1: keep the config's seed
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", args.overrides, "override a config key, e.g. --set top_k=5");
  cmd->add_option("--seed", args.seed, "override the random seed");
}

Config resolve_config(const CommonArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = load_config_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("override must look like key=value, got: " + kv);
    config_set(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
  validate(cfg);
  return cfg;
}

std::vector<ReactionRecord> load_dataset(const std::string& path, bool allow_empty = false) {
  LoadResult res = load_reactions(path);
  for (const auto& w : res.warnings)
    std::cerr << "warning: " << path << ":" << w.line << ": " << w.reason << "\n";
  if (res.records.empty() && !allow_empty)
    throw std::runtime_error("dataset is empty: " + path);
  return res.records;
}

Model load_model(const Config& cfg, const std::string& checkpoint) {
  Model model(cfg);
  if (!checkpoint.empty()) {
    uint64_t trained_hash = model.params.load(checkpoint);
    if (trained_hash != model_config_hash(cfg))
      throw std::runtime_error(
          "checkpoint was written under a different model configuration: " + checkpoint);
  }
  return model;
}

int cmd_train(const CommonArgs& common, const std::string& data_path,
              const std::string& val_path, const std::string& out_path,
              const std::string& log_path, int checkpoint_every) {
  Config cfg = resolve_config(common);
  std::vector<ReactionRecord> train = load_dataset(data_path);
  std::vector<ReactionRecord> valid;
  if (!val_path.empty()) valid = load_dataset(val_path);

  Model model(cfg);
  std::ofstream log_file;
  TrainOptions opts;
  opts.checkpoint_path = out_path;
  opts.checkpoint_every = checkpoint_every;
  opts.info = &std::cerr;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw std::runtime_error("cannot open log file: " + log_path);
    opts.log = &log_file;
  }

  TrainResult res = fit(model, train, valid, opts);
  nlohmann::json summary{{"iterations", res.iterations},
                         {"final_loss", res.final_loss},
                         {"final_lr", res.final_lr},
                         {"early_stopped", res.early_stopped},
                         {"checkpoint", out_path}};
  if (res.best_val_top1 >= 0) {
    summary["best_val_top1"] = res.best_val_top1;
    summary["best_iteration"] = res.best_iteration;
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& data_path,
             const std::string& model_path, int beam, const std::string& ks_text) {
  Config cfg = resolve_config(common);
  std::vector<ReactionRecord> data = load_dataset(data_path);
  Model model = load_model(cfg, model_path);

  std::vector<int> ks;
  std::stringstream ss(ks_text);
  std::string item;
  while (std::getline(ss, item, ',')) ks.push_back(std::stoi(item));
  if (ks.empty()) throw std::runtime_error("--ks must list at least one cutoff");
  int width = beam > 0 ? beam : cfg.beam_width;

  MetricsReport rep = evaluate_metrics(model, data, ks, width);
  nlohmann::json out{{"records", data.size()}, {"beam_width", width}};
  for (size_t i = 0; i < rep.ks.size(); ++i) {
    std::string k = std::to_string(rep.ks[i]);
    out["coverage@" + k] = rep.coverage[i];
    out["recall@" + k] = rep.recall[i];
    out["precision@" + k] = rep.precision[i];
  }
  std::cout << out.dump() << "\n";
  return 0;
}

// Accepts either reaction records or one plain molecule SMILES per line.
std::vector<std::pair<std::string, MolGraph>> load_inputs(const std::string& path) {
  std::vector<std::pair<std::string, MolGraph>> inputs;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::string first_line;
  std::streampos start = in.tellg();
  bool reaction_form = false;
  while (std::getline(in, first_line)) {
    if (first_line.empty() || first_line[0] == '#') continue;
    reaction_form = first_line.find('>') != std::string::npos || path.size() > 6 &&
                    path.substr(path.size() - 6) == ".jsonl";
    break;
  }
  in.clear();
  in.seekg(start);
  if (reaction_form) {
    for (auto& rec : load_dataset(path)) inputs.emplace_back(rec.id, rec.input);
    return inputs;
  }
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      inputs.emplace_back("line-" + std::to_string(line_no), parse_smiles(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (inputs.empty()) throw std::runtime_error("no inputs found in " + path);
  return inputs;
}

int cmd_predict(const CommonArgs& common, const std::string& data_path,
                const std::string& model_path, int beam, int limit) {
  Config cfg = resolve_config(common);
  Model model = load_model(cfg, model_path);
  int width = beam > 0 ? beam : cfg.beam_width;
  ValenceTable table = ValenceTable::defaults();

  for (const auto& [id, input] : load_inputs(data_path)) {
    Tape tape;
    ModelCtx ctx(cfg, model.params, tape);
    RankedCandidates ranked = beam_search(ctx, input, width);
    int emitted = 0;
    for (size_t rank = 0; rank < ranked.items.size(); ++rank) {
      if (limit > 0 && emitted >= limit) break;
      const Candidate& c = ranked.items[rank];
      nlohmann::json actions = nlohmann::json::array();
      for (const auto& a : c.actions) {
        if (a.signal == 0)
          actions.push_back({{"signal", 0}});
        else
          actions.push_back({{"signal", 1}, {"u", a.u}, {"v", a.v}, {"bond", std::string(bond_name(a.bond))}});
      }
      nlohmann::json line{{"id", id},
                          {"rank", rank},
                          {"score", c.score},
                          {"actions", actions},
                          {"product", write_smiles(c.product)},
                          {"valid", validate_valence(c.product, table).empty()}};
      std::cout << line.dump() << "\n";
      ++emitted;
    }
  }
  return 0;
}

int cmd_gen_data(const std::string& out_path, int count, const std::string& split,
                 const ToyTaskSpec& spec) {
  spec.validate();
  std::vector<ReactionRecord> records = generate_toy_dataset(spec, split, count);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  bool smiles_form = out_path.size() > 4 && (out_path.substr(out_path.size() - 4) == ".smi" ||
                                             out_path.substr(out_path.size() - 5) == ".rsmi");
  if (smiles_form)
    for (const auto& rec : records) out << reaction_record_to_smiles(rec) << "\n";
  else
    write_reaction_jsonl(out, records);
  std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(const CommonArgs& common, const std::string& data_path, double h) {
  Config cfg = resolve_config(common);
  std::vector<ReactionRecord> data = load_dataset(data_path);
  GradCheckReport rep = gradcheck_model(cfg, data.front(), h);
  std::cout << "parameters checked: " << rep.n_params << "\n"
            << "loss at theta:      " << rep.loss << "\n"
            << "all terms active:   " << (rep.all_terms_active ? "yes" : "no") << "\n"
            << "max rel err:        " << rep.max_rel_err << " (" << rep.worst_param << "["
            << rep.worst_row << "," << rep.worst_col << "] ad=" << rep.worst_ad
            << " fd=" << rep.worst_fd << ")\n"
            << "elapsed:            " << rep.seconds << " s\n";
  if (rep.max_rel_err >= 1e-4) {
    std::cerr << "error: gradient mismatch above 1e-4\n";
    return 1;
  }
  return 0;
}

int cmd_pairscore(const CommonArgs& common, const std::string& data_path,
                  const std::string& model_path, int k) {
  Config cfg = resolve_config(common);
  std::vector<ReactionRecord> data = load_dataset(data_path);
  Model model = load_model(cfg, model_path);

  for (const auto& rec : data) {
    Tape tape;
    ModelCtx ctx(cfg, model.params, tape);
    EpisodeState st = initial_state(ctx, rec.input);
    PairBatch batch = score_pairs(ctx, st.g, st.x, st.h);
    std::vector<int> top = select_top_k(batch, {}, k > 0 ? k : batch.size());

    std::set<std::pair<int, int>> gold;
    for (const auto& t : rec.gold) gold.insert({t.u, t.v});
    nlohmann::json pairs = nlohmann::json::array();
    const Tensor& s = batch.s.value();
    for (int row : top) {
      auto [u, v] = batch.pairs[row];
      pairs.push_back({{"u", u},
                       {"v", v},
                       {"score", s.at(row, 0)},
                       {"gold", gold.count({u, v}) != 0}});
    }
    nlohmann::json line{{"id", rec.id},
                        {"pairs", pairs},
                        {"gold_total", rec.gold.size()},
                        {"universe", batch.size()}};
    std::cout << line.dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-edit reaction product prediction"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string data_path, val_path, model_path, out_path, log_path, split = "train", ks = "1,3,5";
  int beam = 0, limit = 0, count = 1000, checkpoint_every = 0, k = 0;
  double h = 1e-5;
  ToyTaskSpec spec;

  CLI::App* train = app.add_subcommand("train", "fit a model on a reaction dataset");
  add_common(train, common);
  train->add_option("--data", data_path, "training dataset (.smi/.rsmi/.jsonl)")->required();
  train->add_option("--val", val_path, "validation dataset");
  train->add_option("--out", out_path, "checkpoint output path")->required();
  train->add_option("--log", log_path, "JSON-lines training log");
  train->add_option("--checkpoint-every", checkpoint_every, "also checkpoint every N iterations");

  CLI::App* eval = app.add_subcommand("eval", "report coverage/recall/precision metrics");
  add_common(eval, common);
  eval->add_option("--data", data_path, "evaluation dataset")->required();
  eval->add_option("--model", model_path, "checkpoint to load")->check(CLI::ExistingFile);
  eval->add_option("--beam", beam, "beam width (default: config beam_width)");
  eval->add_option("--ks", ks, "comma-separated cutoffs (default 1,3,5)");

  CLI::App* predict = app.add_subcommand("predict", "rank product candidates as JSON lines");
  add_common(predict, common);
  predict->add_option("--data", data_path, "reaction dataset or plain SMILES lines")->required();
  predict->add_option("--model", model_path, "checkpoint to load")->check(CLI::ExistingFile);
  predict->add_option("--beam", beam, "beam width (default: config beam_width)");
  predict->add_option("--limit", limit, "emit at most this many candidates per input");

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic reaction dataset");
  gen->add_option("--out", out_path, "output path (.jsonl or .smi)")->required();
  gen->add_option("--count", count, "number of records (default 1000)");
  gen->add_option("--split", split, "split label baked into record ids (default train)");
  gen->add_option("--min-nodes", spec.min_nodes, "minimum atoms per record");
  gen->add_option("--max-nodes", spec.max_nodes, "maximum atoms per record");
  gen->add_option("--alphabet", spec.alphabet, "element alphabet size (1-5)");
  gen->add_option("--changes", spec.changes, "bond edits per record");
  gen->add_flag("--vary-bond", spec.vary_bond, "derive the bond type from the structure");
  gen->add_option("--extra-edge-prob", spec.extra_edge_prob, "extra edge probability");
  gen->add_option("--reagent-prob", spec.reagent_prob, "spectator component probability");
  gen->add_option("--seed", spec.seed, "generator seed");

  CLI::App* gcheck = app.add_subcommand("gradcheck", "compare gradients to finite differences");
  add_common(gcheck, common);
  gcheck->add_option("--data", data_path, "fixture dataset; the first record is used")
      ->required();
  gcheck->add_option("--step", h, "finite-difference step (default 1e-5)");

  CLI::App* pscore = app.add_subcommand("pairscore", "dump raw pair scores per reaction");
  add_common(pscore, common);
  pscore->add_option("--data", data_path, "reaction dataset")->required();
  pscore->add_option("--model", model_path, "checkpoint to load")->check(CLI::ExistingFile);
  pscore->add_option("--k", k, "pairs to list per record (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(common, data_path, val_path, out_path, log_path, checkpoint_every);
    if (eval->parsed()) return cmd_eval(common, data_path, model_path, beam, ks);
    if (predict->parsed()) return cmd_predict(common, data_path, model_path, beam, limit);
    if (gen->parsed()) return cmd_gen_data(out_path, count, split, spec);
    if (gcheck->parsed()) return cmd_gradcheck(common, data_path, h);
    if (pscore->parsed()) return cmd_pairscore(common, data_path, model_path, k);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
