#include "gtpn/param_store.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gtpn {

void ParamStore::register_glorot(const std::string& name, int out, int in, Rng& rng) {
  double limit = std::sqrt(6.0 / (in + out));
  Tensor t(out, in);
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-limit, limit);
  register_value(name, std::move(t));
}

void ParamStore::register_zeros(const std::string& name, int rows, int cols) {
  register_value(name, Tensor::zeros(rows, cols));
}

void ParamStore::register_value(const std::string& name, Tensor value) {
  if (entries_.count(name)) throw std::runtime_error("parameter registered twice: " + name);
  Entry e;
  e.grad = Tensor::zeros(value.rows(), value.cols());
  e.m = Tensor::zeros(value.rows(), value.cols());
  e.v = Tensor::zeros(value.rows(), value.cols());
  e.value = std::move(value);
  entries_.emplace(name, std::move(e));
}

const Tensor& ParamStore::value(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("unknown parameter: " + name);
  return it->second.value;
}

Tensor& ParamStore::mutable_value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("unknown parameter: " + name);
  return it->second.value;
}

const Tensor& ParamStore::grad(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("unknown parameter: " + name);
  return it->second.grad;
}

void ParamStore::add_gradient(const std::string& name, const Tensor& g) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("gradient for unknown parameter: " + name);
  it->second.grad.add_in_place(g);
}

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad = Tensor::zeros(e.value.rows(), e.value.cols());
}

void ParamStore::adam_step(const AdamConfig& cfg) {
  ++step_;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (auto& [name, e] : entries_) {
    double* p = e.value.data();
    double* g = e.grad.data();
    double* m = e.m.data();
    double* v = e.v.data();
    for (int64_t i = 0; i < e.value.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    if (!e.value.all_finite())
      throw NumericError("adam_step: parameter " + name + " became non-finite");
  }
  zero_grads();
}

int64_t ParamStore::total_scalars() const {
  int64_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

namespace {

nlohmann::json tensor_to_json(const Tensor& t) { return t.raw(); }

Tensor tensor_from_json(const nlohmann::json& j, int rows, int cols) {
  std::vector<double> data = j.get<std::vector<double>>();
  return Tensor::from(rows, cols, data);
}

}  // namespace

void ParamStore::save(const std::string& path, uint64_t config_hash) const {
  nlohmann::json root;
  root["format"] = "gtpn-checkpoint";
  root["version"] = 1;
  root["config_hash"] = hash_hex(config_hash);
  root["step"] = step_;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, e] : entries_) {
    nlohmann::json p;
    p["rows"] = e.value.rows();
    p["cols"] = e.value.cols();
    p["value"] = tensor_to_json(e.value);
    p["m"] = tensor_to_json(e.m);
    p["v"] = tensor_to_json(e.v);
    params[name] = std::move(p);
  }
  root["params"] = std::move(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << root.dump();
  out << "\n";
}

uint64_t ParamStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint parse error in " + path + ": " + e.what());
  }
  if (root.value("format", "") != "gtpn-checkpoint")
    throw std::runtime_error("not a checkpoint file: " + path);
  if (root.value("version", 0) != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  entries_.clear();
  step_ = root.at("step").get<int64_t>();
  for (const auto& [name, p] : root.at("params").items()) {
    int rows = p.at("rows").get<int>();
    int cols = p.at("cols").get<int>();
    Entry e;
    e.value = tensor_from_json(p.at("value"), rows, cols);
    e.m = tensor_from_json(p.at("m"), rows, cols);
    e.v = tensor_from_json(p.at("v"), rows, cols);
    e.grad = Tensor::zeros(rows, cols);
    entries_.emplace(name, std::move(e));
  }
  std::string hex = root.at("config_hash").get<std::string>();
  uint64_t h = 0;
  for (char c : hex) {
    h <<= 4;
    if (c >= '0' && c <= '9')
      h |= static_cast<uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      h |= static_cast<uint64_t>(c - 'a' + 10);
    else
      throw std::runtime_error("bad config hash in checkpoint: " + path);
  }
  return h;
}

void backward(Var loss, ParamStore& store) {
  loss.tape->backward(loss);
  for (const auto& [name, g] : loss.tape->param_grads()) store.add_gradient(name, g);
}

double PlateauSchedule::report(double metric) {
  if (metric > best_) {
    best_ = metric;
    stale_ = 0;
    return lr_;
  }
  if (++stale_ >= patience_) {
    lr_ = std::max(min_lr_, lr_ * factor_);
    stale_ = 0;
  }
  return lr_;
}

}  // namespace gtpn
