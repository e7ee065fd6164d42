#include "gtpn/tape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace gtpn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using CMap = Eigen::Map<const RowMat>;

CMap cmap(const Tensor& t) { return CMap(t.data(), t.rows(), t.cols()); }
Map mmap(Tensor& t) { return Map(t.data(), t.rows(), t.cols()); }

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw NumericError(std::string(op) + ": bad shape " + a.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw NumericError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
}

Tape* same_tape(const char* op, std::initializer_list<Var> vs) {
  Tape* t = nullptr;
  for (const Var& v : vs) {
    if (!v.valid()) throw NumericError(std::string(op) + ": invalid operand");
    if (t == nullptr) t = v.tape;
    if (v.tape != t) throw NumericError(std::string(op) + ": operands on different tapes");
  }
  return t;
}

// Elementwise helper: forward fn(x), backward g * dfn(y, x).
template <typename F, typename DF>
Var unary_op(const char* op, Var a, F fn, DF dfn) {
  Tape* t = same_tape(op, {a});
  const Tensor& x = t->val(a);
  Tensor y(x.rows(), x.cols());
  for (int64_t i = 0; i < x.size(); ++i) y.data()[i] = fn(x.data()[i]);
  int aid = a.id;
  int id = t->push(op, std::move(y), {aid}, [aid, dfn](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& xv = tp.val(aid);
    const Tensor& yv = tp.val(self);
    Tensor gx(xv.rows(), xv.cols());
    for (int64_t i = 0; i < xv.size(); ++i)
      gx.data()[i] = g.data()[i] * dfn(yv.data()[i], xv.data()[i]);
    tp.accum_grad(aid, std::move(gx));
  });
  return {t, id};
}

}  // namespace

const Tensor& Var::value() const { return tape->val(*this); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite value");
  int id = push("constant", std::move(value), {}, nullptr);
  return {this, id};
}

Var Tape::param(const std::string& name, Tensor value) {
  if (!value.all_finite()) throw NumericError("param " + name + ": non-finite value");
  int id = push("param", std::move(value), {}, nullptr);
  nodes_[id].param_name = name;
  return {this, id};
}

int Tape::push(const char* op, Tensor value, std::vector<int> parents, Vjp vjp) {
  if (!value.all_finite())
    throw NumericError(std::string(op) + ": produced non-finite values");
  nodes_.push_back(Node{std::move(value), std::string(), std::move(parents), std::move(vjp)});
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accum_grad(int id, const Tensor& g) {
  if (grads_[id].empty())
    grads_[id] = g;
  else
    grads_[id].add_in_place(g);
}

void Tape::accum_grad(int id, Tensor&& g) {
  if (grads_[id].empty())
    grads_[id] = std::move(g);
  else
    grads_[id].add_in_place(g);
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw NumericError("backward: loss from another tape");
  if (val(loss).size() != 1) throw NumericError("backward: loss is not a scalar");
  grads_.assign(nodes_.size(), Tensor());
  accum_grad(loss.id, Tensor::scalar(1.0));
  for (int i = loss.id; i >= 0; --i) {
    if (!grads_[i].empty() && nodes_[i].vjp) nodes_[i].vjp(*this, i);
  }
}

const Tensor* Tape::grad_of(Var v) const {
  if (v.tape != this || grads_.empty() || grads_[v.id].empty()) return nullptr;
  return &grads_[v.id];
}

std::map<std::string, Tensor> Tape::param_grads() const {
  std::map<std::string, Tensor> out;
  if (grads_.empty()) return out;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].param_name.empty() || grads_[i].empty()) continue;
    auto it = out.find(nodes_[i].param_name);
    if (it == out.end())
      out.emplace(nodes_[i].param_name, grads_[i]);
    else
      it->second.add_in_place(grads_[i]);
  }
  return out;
}

// --- operations -------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape* t = same_tape("matmul", {a, b});
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (A.cols() != B.rows()) shape_error("matmul", A, B);
  Tensor C(A.rows(), B.cols());
  mmap(C).noalias() = cmap(A) * cmap(B);
  int aid = a.id, bid = b.id;
  int id = t->push("matmul", std::move(C), {aid, bid}, [aid, bid](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& A = tp.val(aid);
    const Tensor& B = tp.val(bid);
    Tensor ga(A.rows(), A.cols());
    mmap(ga).noalias() = cmap(g) * cmap(B).transpose();
    tp.accum_grad(aid, std::move(ga));
    Tensor gb(B.rows(), B.cols());
    mmap(gb).noalias() = cmap(A).transpose() * cmap(g);
    tp.accum_grad(bid, std::move(gb));
  });
  return {t, id};
}

Var linear(Var x, Var w, Var b) {
  Tape* t = same_tape("linear", {x, w, b});
  const Tensor& X = t->val(x);
  const Tensor& W = t->val(w);
  const Tensor& B = t->val(b);
  if (X.cols() != W.cols()) shape_error("linear", X, W);
  if (B.rows() != 1 || B.cols() != W.rows()) shape_error("linear(bias)", B, W);
  Tensor Y(X.rows(), W.rows());
  mmap(Y).noalias() = cmap(X) * cmap(W).transpose();
  mmap(Y).rowwise() += cmap(B).row(0);
  int xid = x.id, wid = w.id, bid = b.id;
  int id = t->push("linear", std::move(Y), {xid, wid, bid}, [xid, wid, bid](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& X = tp.val(xid);
    const Tensor& W = tp.val(wid);
    Tensor gx(X.rows(), X.cols());
    mmap(gx).noalias() = cmap(g) * cmap(W);
    tp.accum_grad(xid, std::move(gx));
    Tensor gw(W.rows(), W.cols());
    mmap(gw).noalias() = cmap(g).transpose() * cmap(X);
    tp.accum_grad(wid, std::move(gw));
    Tensor gb(1, W.rows());
    mmap(gb) = cmap(g).colwise().sum();
    tp.accum_grad(bid, std::move(gb));
  });
  return {t, id};
}

Var linear(Var x, Var w) {
  Tape* t = same_tape("linear", {x, w});
  const Tensor& X = t->val(x);
  const Tensor& W = t->val(w);
  if (X.cols() != W.cols()) shape_error("linear", X, W);
  Tensor Y(X.rows(), W.rows());
  mmap(Y).noalias() = cmap(X) * cmap(W).transpose();
  int xid = x.id, wid = w.id;
  int id = t->push("linear", std::move(Y), {xid, wid}, [xid, wid](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& X = tp.val(xid);
    const Tensor& W = tp.val(wid);
    Tensor gx(X.rows(), X.cols());
    mmap(gx).noalias() = cmap(g) * cmap(W);
    tp.accum_grad(xid, std::move(gx));
    Tensor gw(W.rows(), W.cols());
    mmap(gw).noalias() = cmap(g).transpose() * cmap(X);
    tp.accum_grad(wid, std::move(gw));
  });
  return {t, id};
}

Var add(Var a, Var b) {
  Tape* t = same_tape("add", {a, b});
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (!A.same_shape(B)) shape_error("add", A, B);
  Tensor C = A;
  C.add_in_place(B);
  int aid = a.id, bid = b.id;
  int id = t->push("add", std::move(C), {aid, bid}, [aid, bid](Tape& tp, int self) {
    tp.accum_grad(aid, tp.grad_at(self));
    tp.accum_grad(bid, tp.grad_at(self));
  });
  return {t, id};
}

Var sub(Var a, Var b) {
  Tape* t = same_tape("sub", {a, b});
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (!A.same_shape(B)) shape_error("sub", A, B);
  Tensor C(A.rows(), A.cols());
  for (int64_t i = 0; i < A.size(); ++i) C.data()[i] = A.data()[i] - B.data()[i];
  int aid = a.id, bid = b.id;
  int id = t->push("sub", std::move(C), {aid, bid}, [aid, bid](Tape& tp, int self) {
    tp.accum_grad(aid, tp.grad_at(self));
    Tensor gb = tp.grad_at(self);
    gb.scale_in_place(-1.0);
    tp.accum_grad(bid, std::move(gb));
  });
  return {t, id};
}

Var mul(Var a, Var b) {
  Tape* t = same_tape("mul", {a, b});
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (!A.same_shape(B)) shape_error("mul", A, B);
  Tensor C(A.rows(), A.cols());
  for (int64_t i = 0; i < A.size(); ++i) C.data()[i] = A.data()[i] * B.data()[i];
  int aid = a.id, bid = b.id;
  int id = t->push("mul", std::move(C), {aid, bid}, [aid, bid](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& A = tp.val(aid);
    const Tensor& B = tp.val(bid);
    Tensor ga(A.rows(), A.cols());
    Tensor gb(A.rows(), A.cols());
    for (int64_t i = 0; i < A.size(); ++i) {
      ga.data()[i] = g.data()[i] * B.data()[i];
      gb.data()[i] = g.data()[i] * A.data()[i];
    }
    tp.accum_grad(aid, std::move(ga));
    tp.accum_grad(bid, std::move(gb));
  });
  return {t, id};
}

Var scale(Var a, double c) {
  Tape* t = same_tape("scale", {a});
  Tensor C = t->val(a);
  C.scale_in_place(c);
  int aid = a.id;
  int id = t->push("scale", std::move(C), {aid}, [aid, c](Tape& tp, int self) {
    Tensor g = tp.grad_at(self);
    g.scale_in_place(c);
    tp.accum_grad(aid, std::move(g));
  });
  return {t, id};
}

Var add_const(Var a, double c) {
  Tape* t = same_tape("add_const", {a});
  const Tensor& A = t->val(a);
  Tensor C(A.rows(), A.cols());
  for (int64_t i = 0; i < A.size(); ++i) C.data()[i] = A.data()[i] + c;
  int aid = a.id;
  int id = t->push("add_const", std::move(C), {aid}, [aid](Tape& tp, int self) {
    tp.accum_grad(aid, tp.grad_at(self));
  });
  return {t, id};
}

Var relu(Var a) {
  return unary_op(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double, double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary_op(
      "sigmoid", a,
      [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double y, double) { return y * (1.0 - y); });
}

Var tanh_op(Var a) {
  return unary_op(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double y, double) { return 1.0 - y * y; });
}

Var exp_op(Var a) {
  return unary_op(
      "exp", a, [](double x) { return std::exp(x); }, [](double y, double) { return y; });
}

Var log_op(Var a) {
  return unary_op(
      "log", a, [](double x) { return std::log(x); }, [](double, double x) { return 1.0 / x; });
}

Var softplus(Var a) {
  return unary_op(
      "softplus", a,
      [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double, double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      });
}

Var softmax_rows(Var a) {
  Tape* t = same_tape("softmax_rows", {a});
  const Tensor& A = t->val(a);
  if (A.cols() < 1) shape_error("softmax_rows", A);
  Tensor Y(A.rows(), A.cols());
  for (int r = 0; r < A.rows(); ++r) {
    double mx = A.at(r, 0);
    for (int c = 1; c < A.cols(); ++c) mx = std::max(mx, A.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < A.cols(); ++c) {
      double e = std::exp(A.at(r, c) - mx);
      Y.at(r, c) = e;
      sum += e;
    }
    for (int c = 0; c < A.cols(); ++c) Y.at(r, c) /= sum;
  }
  int aid = a.id;
  int id = t->push("softmax_rows", std::move(Y), {aid}, [aid](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& y = tp.val(self);
    Tensor gx(y.rows(), y.cols());
    for (int r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (int c = 0; c < y.cols(); ++c) dot += g.at(r, c) * y.at(r, c);
      for (int c = 0; c < y.cols(); ++c) gx.at(r, c) = y.at(r, c) * (g.at(r, c) - dot);
    }
    tp.accum_grad(aid, std::move(gx));
  });
  return {t, id};
}

Var log_softmax_rows(Var a) {
  Tape* t = same_tape("log_softmax_rows", {a});
  const Tensor& A = t->val(a);
  if (A.cols() < 1) shape_error("log_softmax_rows", A);
  Tensor Y(A.rows(), A.cols());
  for (int r = 0; r < A.rows(); ++r) {
    double mx = A.at(r, 0);
    for (int c = 1; c < A.cols(); ++c) mx = std::max(mx, A.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < A.cols(); ++c) sum += std::exp(A.at(r, c) - mx);
    double lse = mx + std::log(sum);
    for (int c = 0; c < A.cols(); ++c) Y.at(r, c) = A.at(r, c) - lse;
  }
  int aid = a.id;
  int id = t->push("log_softmax_rows", std::move(Y), {aid}, [aid](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& y = tp.val(self);
    Tensor gx(y.rows(), y.cols());
    for (int r = 0; r < y.rows(); ++r) {
      double gsum = 0.0;
      for (int c = 0; c < y.cols(); ++c) gsum += g.at(r, c);
      for (int c = 0; c < y.cols(); ++c)
        gx.at(r, c) = g.at(r, c) - std::exp(y.at(r, c)) * gsum;
    }
    tp.accum_grad(aid, std::move(gx));
  });
  return {t, id};
}

Var mean_rows(Var a) {
  Tape* t = same_tape("mean_rows", {a});
  const Tensor& A = t->val(a);
  if (A.rows() < 1) shape_error("mean_rows", A);
  Tensor Y(1, A.cols());
  mmap(Y) = cmap(A).colwise().mean();
  int aid = a.id;
  int rows = A.rows();
  int id = t->push("mean_rows", std::move(Y), {aid}, [aid, rows](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    Tensor gx(rows, g.cols());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < g.cols(); ++c) gx.at(r, c) = g.at(0, c) / rows;
    tp.accum_grad(aid, std::move(gx));
  });
  return {t, id};
}

Var sum_all(Var a) {
  Tape* t = same_tape("sum_all", {a});
  const Tensor& A = t->val(a);
  double s = 0.0;
  for (int64_t i = 0; i < A.size(); ++i) s += A.data()[i];
  int aid = a.id;
  int rows = A.rows(), cols = A.cols();
  int id = t->push("sum_all", Tensor::scalar(s), {aid}, [aid, rows, cols](Tape& tp, int self) {
    double g = tp.grad_at(self).item();
    tp.accum_grad(aid, Tensor::full(rows, cols, g));
  });
  return {t, id};
}

Var concat_cols(const std::vector<Var>& vs) {
  if (vs.empty()) throw NumericError("concat_cols: no operands");
  Tape* t = vs[0].tape;
  int rows = t->val(vs[0]).rows();
  int cols = 0;
  std::vector<int> ids;
  std::vector<int> widths;
  for (const Var& v : vs) {
    same_tape("concat_cols", {vs[0], v});
    const Tensor& x = t->val(v);
    if (x.rows() != rows) shape_error("concat_cols", t->val(vs[0]), x);
    ids.push_back(v.id);
    widths.push_back(x.cols());
    cols += x.cols();
  }
  Tensor Y(rows, cols);
  int off = 0;
  for (size_t k = 0; k < ids.size(); ++k) {
    const Tensor& x = t->val(ids[k]);
    for (int r = 0; r < rows; ++r)
      std::memcpy(Y.data() + static_cast<size_t>(r) * cols + off,
                  x.data() + static_cast<size_t>(r) * x.cols(),
                  sizeof(double) * x.cols());
    off += widths[k];
  }
  int id = t->push("concat_cols", std::move(Y), ids, [ids, widths, rows](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    int off = 0;
    for (size_t k = 0; k < ids.size(); ++k) {
      Tensor gx(rows, widths[k]);
      for (int r = 0; r < rows; ++r)
        std::memcpy(gx.data() + static_cast<size_t>(r) * widths[k],
                    g.data() + static_cast<size_t>(r) * g.cols() + off,
                    sizeof(double) * widths[k]);
      tp.accum_grad(ids[k], std::move(gx));
      off += widths[k];
    }
  });
  return {t, id};
}

Var concat_rows(const std::vector<Var>& vs) {
  if (vs.empty()) throw NumericError("concat_rows: no operands");
  Tape* t = vs[0].tape;
  int cols = t->val(vs[0]).cols();
  int rows = 0;
  std::vector<int> ids;
  std::vector<int> heights;
  for (const Var& v : vs) {
    same_tape("concat_rows", {vs[0], v});
    const Tensor& x = t->val(v);
    if (x.cols() != cols) shape_error("concat_rows", t->val(vs[0]), x);
    ids.push_back(v.id);
    heights.push_back(x.rows());
    rows += x.rows();
  }
  Tensor Y(rows, cols);
  int off = 0;
  for (size_t k = 0; k < ids.size(); ++k) {
    const Tensor& x = t->val(ids[k]);
    std::memcpy(Y.data() + static_cast<size_t>(off) * cols, x.data(),
                sizeof(double) * x.size());
    off += heights[k];
  }
  int id = t->push("concat_rows", std::move(Y), ids, [ids, heights, cols](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    int off = 0;
    for (size_t k = 0; k < ids.size(); ++k) {
      Tensor gx(heights[k], cols);
      std::memcpy(gx.data(), g.data() + static_cast<size_t>(off) * cols,
                  sizeof(double) * gx.size());
      tp.accum_grad(ids[k], std::move(gx));
      off += heights[k];
    }
  });
  return {t, id};
}

Var slice_cols(Var a, int lo, int len) {
  Tape* t = same_tape("slice_cols", {a});
  const Tensor& A = t->val(a);
  if (lo < 0 || len < 0 || lo + len > A.cols()) shape_error("slice_cols", A);
  Tensor Y(A.rows(), len);
  for (int r = 0; r < A.rows(); ++r)
    std::memcpy(Y.data() + static_cast<size_t>(r) * len,
                A.data() + static_cast<size_t>(r) * A.cols() + lo, sizeof(double) * len);
  int aid = a.id, rows = A.rows(), cols = A.cols();
  int id = t->push("slice_cols", std::move(Y), {aid},
                   [aid, lo, len, rows, cols](Tape& tp, int self) {
                     const Tensor& g = tp.grad_at(self);
                     Tensor gx(rows, cols);
                     for (int r = 0; r < rows; ++r)
                       std::memcpy(gx.data() + static_cast<size_t>(r) * cols + lo,
                                   g.data() + static_cast<size_t>(r) * len,
                                   sizeof(double) * len);
                     tp.accum_grad(aid, std::move(gx));
                   });
  return {t, id};
}

Var slice_rows(Var a, int lo, int len) {
  Tape* t = same_tape("slice_rows", {a});
  const Tensor& A = t->val(a);
  if (lo < 0 || len < 0 || lo + len > A.rows()) shape_error("slice_rows", A);
  Tensor Y(len, A.cols());
  std::memcpy(Y.data(), A.data() + static_cast<size_t>(lo) * A.cols(),
              sizeof(double) * Y.size());
  int aid = a.id, rows = A.rows(), cols = A.cols();
  int id = t->push("slice_rows", std::move(Y), {aid},
                   [aid, lo, rows, cols](Tape& tp, int self) {
                     const Tensor& g = tp.grad_at(self);
                     Tensor gx(rows, cols);
                     std::memcpy(gx.data() + static_cast<size_t>(lo) * cols, g.data(),
                                 sizeof(double) * g.size());
                     tp.accum_grad(aid, std::move(gx));
                   });
  return {t, id};
}

Var reshape(Var a, int rows, int cols) {
  Tape* t = same_tape("reshape", {a});
  const Tensor& A = t->val(a);
  if (static_cast<int64_t>(rows) * cols != A.size()) shape_error("reshape", A);
  Tensor Y(rows, cols);
  std::memcpy(Y.data(), A.data(), sizeof(double) * A.size());
  int aid = a.id, ar = A.rows(), ac = A.cols();
  int id = t->push("reshape", std::move(Y), {aid}, [aid, ar, ac](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    Tensor gx(ar, ac);
    std::memcpy(gx.data(), g.data(), sizeof(double) * g.size());
    tp.accum_grad(aid, std::move(gx));
  });
  return {t, id};
}

Var gather_rows(Var a, std::vector<int> idx) {
  Tape* t = same_tape("gather_rows", {a});
  const Tensor& A = t->val(a);
  Tensor Y(static_cast<int>(idx.size()), A.cols());
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= A.rows())
      throw NumericError("gather_rows: index out of range");
    std::memcpy(Y.data() + r * A.cols(), A.data() + static_cast<size_t>(idx[r]) * A.cols(),
                sizeof(double) * A.cols());
  }
  int aid = a.id, rows = A.rows(), cols = A.cols();
  int id = t->push("gather_rows", std::move(Y), {aid},
                   [aid, idx = std::move(idx), rows, cols](Tape& tp, int self) {
                     const Tensor& g = tp.grad_at(self);
                     Tensor gx(rows, cols);
                     for (size_t r = 0; r < idx.size(); ++r)
                       for (int c = 0; c < cols; ++c)
                         gx.at(idx[r], c) += g.at(static_cast<int>(r), c);
                     tp.accum_grad(aid, std::move(gx));
                   });
  return {t, id};
}

Var replace_rows(Var base, Var repl, std::vector<int> idx) {
  Tape* t = same_tape("replace_rows", {base, repl});
  const Tensor& A = t->val(base);
  const Tensor& R = t->val(repl);
  if (R.cols() != A.cols() || R.rows() != static_cast<int>(idx.size()))
    shape_error("replace_rows", A, R);
  Tensor Y = A;
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= A.rows())
      throw NumericError("replace_rows: index out of range");
    std::memcpy(Y.data() + static_cast<size_t>(idx[r]) * A.cols(), R.data() + r * R.cols(),
                sizeof(double) * A.cols());
  }
  int aid = base.id, rid = repl.id, cols = A.cols();
  int id = t->push("replace_rows", std::move(Y), {aid, rid},
                   [aid, rid, idx = std::move(idx), cols](Tape& tp, int self) {
                     const Tensor& g = tp.grad_at(self);
                     Tensor ga = g;
                     Tensor gr(static_cast<int>(idx.size()), cols);
                     for (size_t r = 0; r < idx.size(); ++r) {
                       for (int c = 0; c < cols; ++c) {
                         gr.at(static_cast<int>(r), c) = g.at(idx[r], c);
                         ga.at(idx[r], c) = 0.0;
                       }
                     }
                     tp.accum_grad(aid, std::move(ga));
                     tp.accum_grad(rid, std::move(gr));
                   });
  return {t, id};
}

Var broadcast_row(Var row, int m) {
  Tape* t = same_tape("broadcast_row", {row});
  const Tensor& R = t->val(row);
  if (R.rows() != 1) shape_error("broadcast_row", R);
  Tensor Y(m, R.cols());
  for (int r = 0; r < m; ++r)
    std::memcpy(Y.data() + static_cast<size_t>(r) * R.cols(), R.data(),
                sizeof(double) * R.cols());
  int rid = row.id;
  int id = t->push("broadcast_row", std::move(Y), {rid}, [rid](Tape& tp, int self) {
    const Tensor& g = tp.grad_at(self);
    Tensor gr(1, g.cols());
    mmap(gr) = cmap(g).colwise().sum();
    tp.accum_grad(rid, std::move(gr));
  });
  return {t, id};
}

Var segment_mean_rows(Var a, std::vector<int> seg, int nseg) {
  Tape* t = same_tape("segment_mean_rows", {a});
  const Tensor& A = t->val(a);
  if (static_cast<int>(seg.size()) != A.rows())
    throw NumericError("segment_mean_rows: segment list length != rows");
  std::vector<int> count(nseg, 0);
  for (int s : seg) {
    if (s < 0 || s >= nseg) throw NumericError("segment_mean_rows: segment out of range");
    ++count[s];
  }
  Tensor Y(nseg, A.cols());
  for (int r = 0; r < A.rows(); ++r)
    for (int c = 0; c < A.cols(); ++c) Y.at(seg[r], c) += A.at(r, c);
  for (int s = 0; s < nseg; ++s)
    if (count[s] > 0)
      for (int c = 0; c < A.cols(); ++c) Y.at(s, c) /= count[s];
  int aid = a.id, rows = A.rows(), cols = A.cols();
  int id = t->push("segment_mean_rows", std::move(Y), {aid},
                   [aid, seg = std::move(seg), count = std::move(count), rows,
                    cols](Tape& tp, int self) {
                     const Tensor& g = tp.grad_at(self);
                     Tensor gx(rows, cols);
                     for (int r = 0; r < rows; ++r)
                       for (int c = 0; c < cols; ++c)
                         gx.at(r, c) = g.at(seg[r], c) / count[seg[r]];
                     tp.accum_grad(aid, std::move(gx));
                   });
  return {t, id};
}

Var scatter_pairs_symmetric(Var vals, std::vector<std::pair<int, int>> pairs, int n,
                            double fill) {
  Tape* t = same_tape("scatter_pairs_symmetric", {vals});
  const Tensor& V = t->val(vals);
  if (V.cols() != 1 || V.rows() != static_cast<int>(pairs.size()))
    shape_error("scatter_pairs_symmetric", V);
  Tensor Y = Tensor::full(n, n, fill);
  for (size_t p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs[p];
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
      throw NumericError("scatter_pairs_symmetric: bad pair");
    Y.at(i, j) = V.at(static_cast<int>(p), 0);
    Y.at(j, i) = V.at(static_cast<int>(p), 0);
  }
  int vid = vals.id;
  int id = t->push("scatter_pairs_symmetric", std::move(Y), {vid},
                   [vid, pairs = std::move(pairs)](Tape& tp, int self) {
                     const Tensor& g = tp.grad_at(self);
                     Tensor gv(static_cast<int>(pairs.size()), 1);
                     for (size_t p = 0; p < pairs.size(); ++p)
                       gv.at(static_cast<int>(p), 0) =
                           g.at(pairs[p].first, pairs[p].second) +
                           g.at(pairs[p].second, pairs[p].first);
                     tp.accum_grad(vid, std::move(gv));
                   });
  return {t, id};
}

}  // namespace gtpn
