// Named parameters with accumulated gradients and Adam state.
//
// Iteration is always in name order (std::map), so initialization, updates
// and serialization are reproducible. Gradients accumulate across backward
// passes until zero_grads(); adam_step() consumes and clears them.
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gtpn/rng.hpp"
#include "gtpn/tape.hpp"
#include "gtpn/tensor.hpp"

namespace gtpn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class ParamStore {
 public:
  // Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
  // For an [out x in] weight, fan_in = in and fan_out = out.
  void register_glorot(const std::string& name, int out, int in, Rng& rng);
  void register_zeros(const std::string& name, int rows, int cols);
  void register_value(const std::string& name, Tensor value);

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& value(const std::string& name) const;
  Tensor& mutable_value(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  void add_gradient(const std::string& name, const Tensor& g);
  void zero_grads();

  // One Adam update over every parameter (including zero-grad ones, as is
  // conventional); increments the step counter and clears gradients.
  void adam_step(const AdamConfig& cfg);

  int64_t step() const { return step_; }
  size_t size() const { return entries_.size(); }
  int64_t total_scalars() const;

  // Versioned JSON container with parameters, Adam moments, step counter and
  // the hash of the config the model was built from. save -> load -> save is
  // byte-identical.
  void save(const std::string& path, uint64_t config_hash) const;
  // Returns the stored config hash.
  uint64_t load(const std::string& path);

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, e] : entries_) f(name, e.value);
  }

 private:
  struct Entry {
    Tensor value;
    Tensor grad;
    Tensor m;
    Tensor v;
  };
  std::map<std::string, Entry> entries_;
  int64_t step_ = 0;
};

// Reverse pass from `loss`, accumulating parameter gradients into `store`.
void backward(Var loss, ParamStore& store);

// Reduce-on-plateau: after `patience` consecutive reports without improvement
// over the best metric seen, multiply the rate by `factor` (never below
// `min_lr`) and restart the patience window.
class PlateauSchedule {
 public:
  PlateauSchedule(double initial_lr, double factor, int patience, double min_lr)
      : lr_(initial_lr), factor_(factor), patience_(patience), min_lr_(min_lr) {}

  // Report a validation metric (higher is better); returns the current rate.
  double report(double metric);
  double lr() const { return lr_; }
  double best() const { return best_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double min_lr_;
  double best_ = -1e300;
  int stale_ = 0;
};

}  // namespace gtpn
