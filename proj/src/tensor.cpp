#include "gtpn/tensor.hpp"

#include <cmath>

namespace gtpn {

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::add_in_place(const Tensor& o) {
  if (!same_shape(o))
    throw NumericError("Tensor::add_in_place: shape mismatch " + shape_str() + " vs " +
                       o.shape_str());
  for (int64_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
}

void Tensor::scale_in_place(double c) {
  for (double& x : data_) x *= c;
}

}  // namespace gtpn
