#include "gtpn/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "gtpn/pairnet.hpp"

namespace gtpn {

namespace {

// Plays every gold edit in order, then continues one step past the end so the
// over-length loss term is exercised. The top-K composition is pinned to the
// current gold pair plus fixed distractors, which keeps the episode identical
// under small parameter perturbations.
struct TeacherChooser : Chooser {
  std::vector<std::vector<std::pair<int, int>>> pins;
  std::vector<int> bond_indices;
  size_t next_bond = 0;

  int pick_signal(double) override { return 1; }
  int pick_pair(const Tensor&) override { return 0; }
  int pick_bond(const Tensor&) override { return bond_indices.at(next_bond++); }
  const std::vector<std::pair<int, int>>* pinned_topk(int step) override {
    return step < static_cast<int>(pins.size()) ? &pins[step] : nullptr;
  }
};

TeacherChooser make_teacher(const Config& cfg, const ReactionRecord& rec) {
  TeacherChooser teacher;
  std::vector<std::pair<int, int>> universe = pair_universe(rec.input);

  std::map<std::pair<int, int>, BondType> gold;
  for (const auto& t : rec.gold) gold[{t.u, t.v}] = t.bond;
  std::vector<std::pair<int, int>> distractors;
  for (const auto& p : universe) {
    if (gold.count(p)) continue;
    distractors.push_back(p);
    if (distractors.size() == 2) break;
  }

  for (const auto& t : rec.gold) {
    std::vector<std::pair<int, int>> pin{{t.u, t.v}};
    pin.insert(pin.end(), distractors.begin(), distractors.end());
    teacher.pins.push_back(std::move(pin));
    auto it = std::find(cfg.bond_vocab.begin(), cfg.bond_vocab.end(), t.bond);
    if (it == cfg.bond_vocab.end())
      throw std::runtime_error("gradcheck: gold bond type missing from bond_vocab");
    teacher.bond_indices.push_back(static_cast<int>(it - cfg.bond_vocab.begin()));
  }
  teacher.pins.push_back(distractors);  // the over-length step
  return teacher;
}

}  // namespace

GradCheckReport gradcheck_model(const Config& cfg, const ReactionRecord& rec, double h) {
  if (cfg.t_max <= static_cast<int>(rec.gold.size()))
    throw std::runtime_error("gradcheck: t_max must exceed the gold edit count");
  auto t0 = std::chrono::steady_clock::now();
  GradCheckReport report;

  Model model(cfg);

  // Probe rollout: freeze actions, top-K sets, advantages, and returns.
  ReplayPlan plan;
  {
    Tape tape;
    ModelCtx ctx(cfg, model.params, tape);
    TeacherChooser teacher = make_teacher(cfg, rec);
    Episode probe = rollout_supervised(ctx, rec, teacher);
    compute_returns_and_advantages(probe);
    plan = make_replay_plan(probe);
    LossTerms lt = episode_losses(ctx, probe);
    report.all_terms_active = lt.a2c.item() != 0.0 && lt.value.item() != 0.0 &&
                              lt.pair.item() != 0.0 && lt.over_length.item() != 0.0 &&
                              lt.in_top_k.item() != 0.0;
    report.loss = lt.total.item();
  }

  // The exact scalar function both sides differentiate.
  auto replay_loss = [&]() {
    Tape tape;
    ModelCtx ctx(cfg, model.params, tape);
    ReplayChooser chooser(plan);
    Episode ep = rollout_supervised(ctx, rec, chooser);
    apply_pinned_advantages(ep, plan);
    return episode_losses(ctx, ep).total.item();
  };

  // Reverse-mode gradients of the same replay.
  std::map<std::string, Tensor> ad;
  {
    model.params.zero_grads();
    Tape tape;
    ModelCtx ctx(cfg, model.params, tape);
    ReplayChooser chooser(plan);
    Episode ep = rollout_supervised(ctx, rec, chooser);
    apply_pinned_advantages(ep, plan);
    backward(episode_losses(ctx, ep).total, model.params);
    model.params.for_each(
        [&](const std::string& name, const Tensor&) { ad.emplace(name, model.params.grad(name)); });
  }

  std::vector<std::string> names;
  model.params.for_each([&](const std::string& name, const Tensor&) { names.push_back(name); });
  for (const auto& name : names) {
    Tensor& theta = model.params.mutable_value(name);
    const Tensor& g = ad.at(name);
    for (int r = 0; r < theta.rows(); ++r) {
      for (int c = 0; c < theta.cols(); ++c) {
        double saved = theta.at(r, c);
        theta.at(r, c) = saved + h;
        double up = replay_loss();
        theta.at(r, c) = saved - h;
        double down = replay_loss();
        theta.at(r, c) = saved;

        double fd = (up - down) / (2 * h);
        double ad_val = g.at(r, c);
        double err = std::abs(ad_val - fd) / std::max({std::abs(ad_val), std::abs(fd), 1e-3});
        ++report.n_params;
        if (err > report.max_rel_err) {
          report.max_rel_err = err;
          report.worst_param = name;
          report.worst_row = r;
          report.worst_col = c;
          report.worst_ad = ad_val;
          report.worst_fd = fd;
        }
      }
    }
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace gtpn
