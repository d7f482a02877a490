#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "canvolve/precision.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Raised when a forward result contains NaN or Inf, or a gradient does.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major array. Volumetric activations use N x C x D x H x W.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real{0});
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor scalar(Real v) { return Tensor({1}, std::vector<Real>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const Real> values() const { return data_; }
  std::span<Real> values() { return data_; }
  const Real* data() const { return data_.data(); }
  Real* data() { return data_.data(); }

  Real operator[](std::size_t i) const { return data_[i]; }
  Real& operator[](std::size_t i) { return data_[i]; }

  /// Value of a single-element tensor.
  Real item() const;

  bool all_finite() const;

  /// Spatial element count (product of extents after N and C).
  std::size_t spatial_size() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

/// Elementwise a += b; shapes must match.
void accumulate(Tensor& into, const Tensor& from);

void require_shape(const Tensor& t, const Shape& shape, const char* what);

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
