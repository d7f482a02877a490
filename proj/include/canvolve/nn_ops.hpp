#pragma once

#include <cstdint>

#include "canvolve/tape.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

enum class Initializer { glorot_uniform, identity };

const char* to_string(Initializer init);

/// Cubic-kernel 3D convolution geometry.
struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t padding = 0;
  Initializer initializer = Initializer::glorot_uniform;

  /// Zero padding of dilation*(kernel-1)/2 so stride 1 preserves extents and
  /// stride 2 halves them.
  static ConvSpec same(std::size_t in, std::size_t out, std::size_t kernel = 3,
                       std::size_t dilation = 1, std::size_t stride = 1,
                       Initializer init = Initializer::glorot_uniform);

  /// Throws std::invalid_argument on an even kernel, zero dilation or a
  /// stride outside {1, 2}.
  void validate() const;

  /// (out, in, k, k, k) for convolution.
  Shape weight_shape() const;
  /// (in, out, k, k, k) for the transposed convolution.
  Shape transposed_weight_shape() const;

  std::size_t parameter_count() const;
};

/// Extent of a dilated kernel: u + (u - 1)(d - 1).
std::size_t dilated_kernel_extent(std::size_t u, std::size_t d);

/// Dilated 3D convolution, output(p) = bias + sum_{s + d t = p} in(s) w(t),
/// on N x C x D x H x W input with zero padding.
Var conv3d(Tape& tape, Var x, Var weight, Var bias, const ConvSpec& spec);

/// Stride-2 transposed convolution: the adjoint of conv3d with the same
/// kernel. Each spatial extent doubles. Weight shape (in, out, k, k, k).
Var transposed_conv3d(Tape& tape, Var x, Var weight, Var bias,
                      const ConvSpec& spec);

/// a * x + b * IN(x); IN normalizes each (instance, channel) over its voxels.
/// `a` and `b` are single-element tensors.
Var adain(Tape& tape, Var x, Var a, Var b, Real epsilon);

/// max(alpha x, x); the slope at exactly 0 is alpha.
Var leaky_relu(Tape& tape, Var x, Real alpha = Real(0.1));

/// Max-subtracted softmax over the channel axis at every voxel.
Var softmax_channels(Tape& tape, Var x);

Var add(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, Real factor);
Var square(Tape& tape, Var x);
Var sum(Tape& tape, Var x);
Var mean(Tape& tape, Var x);

struct ConvBlockVars {
  Var weight;
  Var bias;
  Var adain_a;
  Var adain_b;
};

/// LReLU(AdaIN(conv(x) + bias)). With `transposed` the convolution is the
/// stride-2 transposed convolution.
Var conv_block(Tape& tape, Var x, const ConvSpec& spec, const ConvBlockVars& v,
               Real epsilon, Real alpha, bool transposed = false);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)); fans from (out, in, k...) shape.
Tensor init_glorot_uniform(const Shape& shape, std::uint64_t seed);

/// Centre tap 1 where output channel == input channel, 0 elsewhere.
/// Throws std::invalid_argument for non-square channels or even extents.
Tensor init_identity(const Shape& shape);

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
