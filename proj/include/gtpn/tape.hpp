// Reverse-mode autodiff on a linear tape of 2-D tensors.
//
// Nodes are appended in SSA order (parents always precede children), so the
// backward sweep is a single reverse pass. Every op validates shapes and
// checks its output for NaN/Inf; a violation raises NumericError naming the
// op. Gradients live in a buffer parallel to the tape that is reset at the
// start of each backward() call; parameter-leaf gradients are read off via
// param_grads() and accumulated into a ParamStore by the caller.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gtpn/tensor.hpp"

namespace gtpn {

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  double item() const { return value().item(); }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a named parameter; gradients for it are collected by name.
  Var param(const std::string& name, Tensor value);

  const Tensor& val(int id) const { return nodes_[id].value; }
  const Tensor& val(Var v) const { return nodes_[v.id].value; }

  // Runs reverse accumulation from `loss` (must be 1x1). Gradient buffers are
  // cleared first, so each call measures exactly one cotangent propagation.
  void backward(Var loss);

  // Gradient of the last backward() for any node; nullptr if untouched.
  const Tensor* grad_of(Var v) const;

  // Name -> gradient for every parameter leaf touched by the last backward().
  std::map<std::string, Tensor> param_grads() const;

  size_t node_count() const { return nodes_.size(); }

  // --- used by op implementations ---
  using Vjp = std::function<void(Tape&, int self)>;
  int push(const char* op, Tensor value, std::vector<int> parents, Vjp vjp);
  void accum_grad(int id, const Tensor& g);
  void accum_grad(int id, Tensor&& g);
  const Tensor& grad_at(int id) const { return grads_[id]; }
  bool grad_set(int id) const { return !grads_[id].empty(); }

 private:
  struct Node {
    Tensor value;
    std::string param_name;
    std::vector<int> parents;
    Vjp vjp;
  };
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// --- operations -------------------------------------------------------------

// [m x k] · [k x n] -> [m x n]
Var matmul(Var a, Var b);
// x [m x in], w [out x in], b [1 x out] -> x·wᵀ + b  (rows share the bias)
Var linear(Var x, Var w, Var b);
Var linear(Var x, Var w);

// Elementwise; shapes must match exactly (no implicit broadcasting).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_const(Var a, double c);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh_op(Var a);
Var exp_op(Var a);
Var log_op(Var a);
// softplus(x) = log(1 + e^x), computed overflow-free.
Var softplus(Var a);

// Per-row softmax / log-softmax (stable; max subtracted per row).
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);

Var mean_rows(Var a);  // [m x n] -> [1 x n]
Var sum_all(Var a);    // [m x n] -> [1 x 1]

Var concat_cols(const std::vector<Var>& vs);
Var concat_rows(const std::vector<Var>& vs);
Var slice_cols(Var a, int lo, int len);
Var slice_rows(Var a, int lo, int len);
Var reshape(Var a, int rows, int cols);

// out[r] = a[idx[r]]; duplicate indices accumulate gradient (embedding lookup).
Var gather_rows(Var a, std::vector<int> idx);
// Copy of `base` with row idx[r] replaced by repl[r]. Indices must be unique.
Var replace_rows(Var base, Var repl, std::vector<int> idx);
Var broadcast_row(Var row, int m);

// Mean of the rows of each segment; segments with no rows give zero rows.
// seg[r] in [0, nseg) assigns row r of `a` to a segment.
Var segment_mean_rows(Var a, std::vector<int> seg, int nseg);

// vals is [P x 1]; builds an [n x n] matrix filled with `fill`, then writes
// vals[p] at (i,j) and (j,i) for pairs[p] = (i,j). Pairs must have i != j.
Var scatter_pairs_symmetric(Var vals, std::vector<std::pair<int, int>> pairs, int n,
                            double fill);

}  // namespace gtpn
