#include "canvolve/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != element_count(shape_)) {
    throw std::invalid_argument("tensor " + to_string(shape_) + " given " +
                                std::to_string(data_.size()) + " values");
  }
}

Real Tensor::item() const {
  if (data_.size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + to_string(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (Real v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::size_t Tensor::spatial_size() const {
  if (shape_.size() < 2) return 1;
  std::size_t n = 1;
  for (std::size_t i = 2; i < shape_.size(); ++i) n *= shape_[i];
  return n;
}

void accumulate(Tensor& into, const Tensor& from) {
  if (into.shape() != from.shape()) {
    throw std::invalid_argument("accumulate shape mismatch " +
                                to_string(into.shape()) + " vs " +
                                to_string(from.shape()));
  }
  Real* a = into.data();
  const Real* b = from.data();
  for (std::size_t i = 0; i < into.size(); ++i) a[i] += b[i];
}

void require_shape(const Tensor& t, const Shape& shape, const char* what) {
  if (t.shape() != shape) {
    throw std::invalid_argument(std::string(what) + ": expected shape " +
                                to_string(shape) + ", got " +
                                to_string(t.shape()));
  }
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
