// Dense 2-D double tensor. Row-major, contiguous. Scalars are 1x1 and row
// vectors are 1xN so every value in the autodiff graph has one shape type.
#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace gtpn {

// Raised when an operation produces NaN/Inf or is called with bad shapes.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// 64-byte-aligned allocator for tensor buffers. Vectorized kernels split a
// loop into scalar/vector parts based on the buffer's alignment, and that
// split changes floating-point rounding; pinning every buffer to the same
// alignment makes results bit-identical regardless of heap history.
template <typename T>
struct AlignedAlloc {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAlloc() = default;
  template <typename U>
  AlignedAlloc(const AlignedAlloc<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), alignment));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    ::operator delete(p, n * sizeof(T), alignment);
  }
  bool operator==(const AlignedAlloc&) const noexcept { return true; }
  bool operator!=(const AlignedAlloc&) const noexcept { return false; }
};

class Tensor {
 public:
  using Storage = std::vector<double, AlignedAlloc<double>>;

  Tensor() = default;
  Tensor(int rows, int cols)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw NumericError("Tensor: negative shape");
  }

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }

  static Tensor full(int rows, int cols, double v) {
    Tensor t(rows, cols);
    for (double& x : t.data_) x = v;
    return t;
  }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data_[0] = v;
    return t;
  }

  static Tensor row(const std::vector<double>& values) {
    Tensor t;
    t.rows_ = 1;
    t.cols_ = static_cast<int>(values.size());
    t.data_.assign(values.begin(), values.end());
    return t;
  }

  static Tensor from(int rows, int cols, const std::vector<double>& values) {
    if (static_cast<size_t>(rows) * cols != values.size())
      throw NumericError("Tensor::from: size mismatch");
    Tensor t;
    t.rows_ = rows;
    t.cols_ = cols;
    t.data_.assign(values.begin(), values.end());
    return t;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int64_t size() const { return static_cast<int64_t>(rows_) * cols_; }
  bool empty() const { return size() == 0; }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  // Value of a 1x1 tensor.
  double item() const {
    if (size() != 1) throw NumericError("Tensor::item: not a scalar");
    return data_[0];
  }

  bool all_finite() const;

  void add_in_place(const Tensor& o);
  void scale_in_place(double c);

  std::string shape_str() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
  }

  const Storage& raw() const { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  Storage data_;
};

}  // namespace gtpn
