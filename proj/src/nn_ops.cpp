#include "canvolve/nn_ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Geometry of a forward convolution from a C x D x H x W grid onto an
// OD x OH x OW grid.
struct ConvGeometry {
  long c, d, h, w;
  long k, stride, dilation, pad;
  long od, oh, ow;

  long rows() const { return c * k * k * k; }
  long cols() const { return od * oh * ow; }
  long in_voxels() const { return d * h * w; }
};

long conv_output_extent(long in, const ConvSpec& s) {
  const long span = static_cast<long>(s.dilation * (s.kernel - 1));
  const long num = in + 2 * static_cast<long>(s.padding) - span - 1;
  if (num < 0) return 0;
  return num / static_cast<long>(s.stride) + 1;
}

ConvGeometry geometry(long c, long d, long h, long w, const ConvSpec& s) {
  ConvGeometry g{c, d, h, w,
                 static_cast<long>(s.kernel), static_cast<long>(s.stride),
                 static_cast<long>(s.dilation), static_cast<long>(s.padding),
                 conv_output_extent(d, s), conv_output_extent(h, s),
                 conv_output_extent(w, s)};
  return g;
}

// Unfolds receptive fields into a (C k^3) x (OD OH OW) row-major matrix.
void im2col(const Real* x, const ConvGeometry& g, Real* col) {
  const long k = g.k;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < g.c; ++c) {
    const Real* xc = x + c * g.in_voxels();
    for (long kz = 0; kz < k; ++kz) {
      for (long ky = 0; ky < k; ++ky) {
        for (long kx = 0; kx < k; ++kx) {
          Real* row = col + (((c * k + kz) * k + ky) * k + kx) * g.cols();
          for (long oz = 0; oz < g.od; ++oz) {
            const long iz = oz * g.stride - g.pad + kz * g.dilation;
            for (long oy = 0; oy < g.oh; ++oy) {
              const long iy = oy * g.stride - g.pad + ky * g.dilation;
              Real* out = row + (oz * g.oh + oy) * g.ow;
              if (iz < 0 || iz >= g.d || iy < 0 || iy >= g.h) {
                for (long ox = 0; ox < g.ow; ++ox) out[ox] = Real{0};
                continue;
              }
              const Real* in = xc + (iz * g.h + iy) * g.w;
              for (long ox = 0; ox < g.ow; ++ox) {
                const long ix = ox * g.stride - g.pad + kx * g.dilation;
                out[ox] = (ix >= 0 && ix < g.w) ? in[ix] : Real{0};
              }
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters columns back onto the grid, accumulating.
void col2im_add(const Real* col, const ConvGeometry& g, Real* x) {
  const long k = g.k;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < g.c; ++c) {
    Real* xc = x + c * g.in_voxels();
    for (long kz = 0; kz < k; ++kz) {
      for (long ky = 0; ky < k; ++ky) {
        for (long kx = 0; kx < k; ++kx) {
          const Real* row = col + (((c * k + kz) * k + ky) * k + kx) * g.cols();
          for (long oz = 0; oz < g.od; ++oz) {
            const long iz = oz * g.stride - g.pad + kz * g.dilation;
            if (iz < 0 || iz >= g.d) continue;
            for (long oy = 0; oy < g.oh; ++oy) {
              const long iy = oy * g.stride - g.pad + ky * g.dilation;
              if (iy < 0 || iy >= g.h) continue;
              const Real* src = row + (oz * g.oh + oy) * g.ow;
              Real* dst = xc + (iz * g.h + iy) * g.w;
              for (long ox = 0; ox < g.ow; ++ox) {
                const long ix = ox * g.stride - g.pad + kx * g.dilation;
                if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
              }
            }
          }
        }
      }
    }
  }
}

void require_volumetric(const Tensor& t, const char* what) {
  if (t.rank() != 5) {
    throw std::invalid_argument(std::string(what) +
                                ": expected N x C x D x H x W input, got " +
                                to_string(t.shape()));
  }
}

void add_bias(Real* out, const Tensor& bias, long channels, long voxels) {
  for (long c = 0; c < channels; ++c) {
    const Real b = bias[static_cast<std::size_t>(c)];
    Real* o = out + c * voxels;
    for (long i = 0; i < voxels; ++i) o[i] += b;
  }
}

Tensor bias_grad(const Tensor& g, std::size_t channels) {
  Tensor gb({channels});
  const std::size_t n = g.dim(0);
  const std::size_t vox = g.spatial_size();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const Real* p = g.data() + (b * channels + c) * vox;
      double s = 0.0;
      for (std::size_t i = 0; i < vox; ++i) s += p[i];
      gb[c] += static_cast<Real>(s);
    }
  }
  return gb;
}

}  // namespace

const char* to_string(Initializer init) {
  return init == Initializer::identity ? "identity" : "glorot_uniform";
}

ConvSpec ConvSpec::same(std::size_t in, std::size_t out, std::size_t kernel,
                        std::size_t dilation, std::size_t stride,
                        Initializer init) {
  ConvSpec s{in, out, kernel, stride, dilation, dilation * (kernel - 1) / 2,
             init};
  s.validate();
  return s;
}

void ConvSpec::validate() const {
  if (kernel == 0 || kernel % 2 == 0) {
    throw std::invalid_argument("kernel extent must be odd, got " +
                                std::to_string(kernel));
  }
  if (dilation < 1) throw std::invalid_argument("dilation must be >= 1");
  if (stride != 1 && stride != 2) {
    throw std::invalid_argument("stride must be 1 or 2, got " +
                                std::to_string(stride));
  }
  if (in_channels == 0 || out_channels == 0) {
    throw std::invalid_argument("channel counts must be positive");
  }
}

Shape ConvSpec::weight_shape() const {
  return {out_channels, in_channels, kernel, kernel, kernel};
}

Shape ConvSpec::transposed_weight_shape() const {
  return {in_channels, out_channels, kernel, kernel, kernel};
}

std::size_t ConvSpec::parameter_count() const {
  return out_channels * in_channels * kernel * kernel * kernel + out_channels;
}

std::size_t dilated_kernel_extent(std::size_t u, std::size_t d) {
  return u + (u - 1) * (d - 1);
}

Var conv3d(Tape& tape, Var xv, Var wv, Var bv, const ConvSpec& spec) {
  spec.validate();
  const Tensor& x = tape.value(xv);
  require_volumetric(x, "conv3d");
  require_shape(tape.value(wv), spec.weight_shape(), "conv3d weight");
  require_shape(tape.value(bv), {spec.out_channels}, "conv3d bias");
  if (x.dim(1) != spec.in_channels) {
    throw std::invalid_argument("conv3d: input has " + std::to_string(x.dim(1)) +
                                " channels, spec expects " +
                                std::to_string(spec.in_channels));
  }
  if (spec.stride == 2) {
    for (std::size_t a = 2; a < 5; ++a) {
      if (x.dim(a) % 2 != 0) {
        throw std::invalid_argument("conv3d: stride 2 needs even extents, got " +
                                    to_string(x.shape()));
      }
    }
  }
  const std::size_t n = x.dim(0);
  const auto g = geometry(static_cast<long>(spec.in_channels),
                          static_cast<long>(x.dim(2)), static_cast<long>(x.dim(3)),
                          static_cast<long>(x.dim(4)), spec);
  if (g.od <= 0 || g.oh <= 0 || g.ow <= 0) {
    throw std::invalid_argument("conv3d: input " + to_string(x.shape()) +
                                " smaller than the dilated kernel");
  }
  const long co = static_cast<long>(spec.out_channels);
  Tensor out({n, spec.out_channels, static_cast<std::size_t>(g.od),
              static_cast<std::size_t>(g.oh), static_cast<std::size_t>(g.ow)});
  std::vector<Real> col(static_cast<std::size_t>(g.rows() * g.cols()));
  const ConstMapMat w(tape.value(wv).data(), co, g.rows());
  for (std::size_t b = 0; b < n; ++b) {
    im2col(x.data() + b * spec.in_channels * g.in_voxels(), g, col.data());
    MapMat o(out.data() + b * co * g.cols(), co, g.cols());
    o.noalias() = w * ConstMapMat(col.data(), g.rows(), g.cols());
    add_bias(o.data(), tape.value(bv), co, g.cols());
  }

  return tape.record(
      "conv3d", std::move(out), {xv, wv, bv}, [spec, g, co](BackwardContext& ctx) {
        const Tensor& x = ctx.input(0);
        const Tensor& gout = ctx.grad_output();
        const std::size_t n = x.dim(0);
        const ConstMapMat w(ctx.input(1).data(), co, g.rows());
        std::vector<Real> col(static_cast<std::size_t>(g.rows() * g.cols()));
        Tensor gw(spec.weight_shape());
        Tensor gx(x.shape());
        MapMat gwm(gw.data(), co, g.rows());
        for (std::size_t b = 0; b < n; ++b) {
          const ConstMapMat go(gout.data() + b * co * g.cols(), co, g.cols());
          if (ctx.needs_grad(1)) {
            im2col(x.data() + b * spec.in_channels * g.in_voxels(), g, col.data());
            gwm.noalias() += go * ConstMapMat(col.data(), g.rows(), g.cols()).transpose();
          }
          if (ctx.needs_grad(0)) {
            MapMat gc(col.data(), g.rows(), g.cols());
            gc.noalias() = w.transpose() * go;
            col2im_add(col.data(), g,
                       gx.data() + b * spec.in_channels * g.in_voxels());
          }
        }
        if (ctx.needs_grad(0)) ctx.accumulate(0, std::move(gx));
        if (ctx.needs_grad(1)) ctx.accumulate(1, std::move(gw));
        if (ctx.needs_grad(2)) ctx.accumulate(2, bias_grad(gout, spec.out_channels));
      });
}

Var transposed_conv3d(Tape& tape, Var xv, Var wv, Var bv, const ConvSpec& spec) {
  spec.validate();
  if (spec.stride != 2) {
    throw std::invalid_argument("transposed_conv3d supports stride 2 only");
  }
  const Tensor& x = tape.value(xv);
  require_volumetric(x, "transposed_conv3d");
  require_shape(tape.value(wv), spec.transposed_weight_shape(),
                "transposed_conv3d weight");
  require_shape(tape.value(bv), {spec.out_channels}, "transposed_conv3d bias");
  if (x.dim(1) != spec.in_channels) {
    throw std::invalid_argument("transposed_conv3d: input has " +
                                std::to_string(x.dim(1)) +
                                " channels, spec expects " +
                                std::to_string(spec.in_channels));
  }
  const std::size_t n = x.dim(0);
  // The forward convolution this op is the adjoint of: out_channels at 2x
  // resolution down to in_channels at 1x.
  const auto g = geometry(static_cast<long>(spec.out_channels),
                          static_cast<long>(2 * x.dim(2)),
                          static_cast<long>(2 * x.dim(3)),
                          static_cast<long>(2 * x.dim(4)), spec);
  if (g.od != static_cast<long>(x.dim(2)) || g.oh != static_cast<long>(x.dim(3)) ||
      g.ow != static_cast<long>(x.dim(4))) {
    throw std::invalid_argument(
        "transposed_conv3d: padding does not give exact doubling");
  }
  const long ci = static_cast<long>(spec.in_channels);
  const long co = static_cast<long>(spec.out_channels);
  Tensor out({n, spec.out_channels, 2 * x.dim(2), 2 * x.dim(3), 2 * x.dim(4)});
  std::vector<Real> col(static_cast<std::size_t>(g.rows() * g.cols()));
  const ConstMapMat w(tape.value(wv).data(), ci, g.rows());
  for (std::size_t b = 0; b < n; ++b) {
    const ConstMapMat xm(x.data() + b * ci * g.cols(), ci, g.cols());
    MapMat cm(col.data(), g.rows(), g.cols());
    cm.noalias() = w.transpose() * xm;
    Real* o = out.data() + b * co * g.in_voxels();
    col2im_add(col.data(), g, o);
    add_bias(o, tape.value(bv), co, g.in_voxels());
  }

  return tape.record(
      "transposed_conv3d", std::move(out), {xv, wv, bv},
      [spec, g, ci, co](BackwardContext& ctx) {
        const Tensor& x = ctx.input(0);
        const Tensor& gout = ctx.grad_output();
        const std::size_t n = x.dim(0);
        const ConstMapMat w(ctx.input(1).data(), ci, g.rows());
        std::vector<Real> col(static_cast<std::size_t>(g.rows() * g.cols()));
        Tensor gw(spec.transposed_weight_shape());
        Tensor gx(x.shape());
        MapMat gwm(gw.data(), ci, g.rows());
        for (std::size_t b = 0; b < n; ++b) {
          if (!ctx.needs_grad(0) && !ctx.needs_grad(1)) break;
          im2col(gout.data() + b * co * g.in_voxels(), g, col.data());
          const ConstMapMat cm(col.data(), g.rows(), g.cols());
          if (ctx.needs_grad(0)) {
            MapMat gxm(gx.data() + b * ci * g.cols(), ci, g.cols());
            gxm.noalias() = w * cm;
          }
          if (ctx.needs_grad(1)) {
            const ConstMapMat xm(x.data() + b * ci * g.cols(), ci, g.cols());
            gwm.noalias() += xm * cm.transpose();
          }
        }
        if (ctx.needs_grad(0)) ctx.accumulate(0, std::move(gx));
        if (ctx.needs_grad(1)) ctx.accumulate(1, std::move(gw));
        if (ctx.needs_grad(2)) ctx.accumulate(2, bias_grad(gout, spec.out_channels));
      });
}

Var adain(Tape& tape, Var xv, Var av, Var bv, Real epsilon) {
  if (!(epsilon > Real{0})) throw std::invalid_argument("adain epsilon must be > 0");
  const Tensor& x = tape.value(xv);
  if (x.rank() < 3) {
    throw std::invalid_argument("adain: expected N x C x spatial input, got " +
                                to_string(x.shape()));
  }
  require_shape(tape.value(av), {1}, "adain a");
  require_shape(tape.value(bv), {1}, "adain b");
  const Real a = tape.value(av)[0];
  const Real b = tape.value(bv)[0];
  const std::size_t groups = x.dim(0) * x.dim(1);
  const std::size_t m = x.spatial_size();

  Tensor out(x.shape());
  // Per (instance, channel): normalized values and 1/sqrt(var + eps).
  auto xhat = std::make_shared<Tensor>(x.shape());
  auto inv_std = std::make_shared<std::vector<double>>(groups);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const Real* p = x.data() + gi * m;
    double mu = 0.0;
    for (std::size_t i = 0; i < m; ++i) mu += p[i];
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) var += (p[i] - mu) * (p[i] - mu);
    var /= static_cast<double>(m);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(epsilon));
    (*inv_std)[gi] = inv;
    Real* h = xhat->data() + gi * m;
    Real* o = out.data() + gi * m;
    for (std::size_t i = 0; i < m; ++i) {
      h[i] = static_cast<Real>((p[i] - mu) * inv);
      o[i] = a * p[i] + b * h[i];
    }
  }

  return tape.record(
      "adain", std::move(out), {xv, av, bv},
      [xhat, inv_std, groups, m](BackwardContext& ctx) {
        const Tensor& x = ctx.input(0);
        const Tensor& g = ctx.grad_output();
        const Real a = ctx.input(1)[0];
        const Real b = ctx.input(2)[0];
        Tensor gx(x.shape());
        double ga = 0.0, gb = 0.0;
        for (std::size_t gi = 0; gi < groups; ++gi) {
          const Real* gp = g.data() + gi * m;
          const Real* xp = x.data() + gi * m;
          const Real* hp = xhat->data() + gi * m;
          double sum_g = 0.0, sum_gh = 0.0, sum_gx = 0.0;
          for (std::size_t i = 0; i < m; ++i) {
            sum_g += gp[i];
            sum_gh += gp[i] * hp[i];
            sum_gx += gp[i] * xp[i];
          }
          ga += sum_gx;
          gb += sum_gh;
          const double mean_g = sum_g / static_cast<double>(m);
          const double mean_gh = sum_gh / static_cast<double>(m);
          const double k = static_cast<double>(b) * (*inv_std)[gi];
          Real* out = gx.data() + gi * m;
          for (std::size_t i = 0; i < m; ++i) {
            out[i] = static_cast<Real>(a * gp[i] +
                                       k * (gp[i] - mean_g - hp[i] * mean_gh));
          }
        }
        if (ctx.needs_grad(0)) ctx.accumulate(0, std::move(gx));
        if (ctx.needs_grad(1)) ctx.accumulate(1, Tensor::scalar(static_cast<Real>(ga)));
        if (ctx.needs_grad(2)) ctx.accumulate(2, Tensor::scalar(static_cast<Real>(gb)));
      });
}

Var leaky_relu(Tape& tape, Var xv, Real alpha) {
  if (!(alpha >= Real{0} && alpha < Real{1})) {
    throw std::invalid_argument("leaky_relu alpha must lie in [0, 1)");
  }
  const Tensor& x = tape.value(xv);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] > Real{0} ? x[i] : alpha * x[i];
  }
  return tape.record("leaky_relu", std::move(out), {xv},
                     [alpha](BackwardContext& ctx) {
                       const Tensor& x = ctx.input(0);
                       const Tensor& g = ctx.grad_output();
                       Tensor gx(x.shape());
                       for (std::size_t i = 0; i < x.size(); ++i) {
                         gx[i] = x[i] > Real{0} ? g[i] : alpha * g[i];
                       }
                       ctx.accumulate(0, std::move(gx));
                     });
}

Var softmax_channels(Tape& tape, Var xv) {
  const Tensor& x = tape.value(xv);
  if (x.rank() < 2) {
    throw std::invalid_argument("softmax_channels: expected N x C x ... input");
  }
  const std::size_t n = x.dim(0), c = x.dim(1), m = x.spatial_size();
  Tensor out(x.shape());
  for (std::size_t b = 0; b < n; ++b) {
    const Real* xp = x.data() + b * c * m;
    Real* op = out.data() + b * c * m;
    for (std::size_t i = 0; i < m; ++i) {
      Real mx = xp[i];
      for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, xp[k * m + i]);
      Real total{0};
      for (std::size_t k = 0; k < c; ++k) {
        const Real e = std::exp(xp[k * m + i] - mx);
        op[k * m + i] = e;
        total += e;
      }
      for (std::size_t k = 0; k < c; ++k) op[k * m + i] /= total;
    }
  }
  return tape.record("softmax_channels", std::move(out), {xv},
                     [n, c, m](BackwardContext& ctx) {
                       const Tensor& p = ctx.output();
                       const Tensor& g = ctx.grad_output();
                       Tensor gx(p.shape());
                       for (std::size_t b = 0; b < n; ++b) {
                         const std::size_t base = b * c * m;
                         for (std::size_t i = 0; i < m; ++i) {
                           Real dot{0};
                           for (std::size_t k = 0; k < c; ++k) {
                             dot += g[base + k * m + i] * p[base + k * m + i];
                           }
                           for (std::size_t k = 0; k < c; ++k) {
                             const auto j = base + k * m + i;
                             gx[j] = p[j] * (g[j] - dot);
                           }
                         }
                       }
                       ctx.accumulate(0, std::move(gx));
                     });
}

Var add(Tape& tape, Var av, Var bv) {
  const Tensor& a = tape.value(av);
  const Tensor& b = tape.value(bv);
  require_shape(b, a.shape(), "add");
  Tensor out = a;
  accumulate(out, b);
  return tape.record("add", std::move(out), {av, bv}, [](BackwardContext& ctx) {
    if (ctx.needs_grad(0)) ctx.accumulate(0, ctx.grad_output());
    if (ctx.needs_grad(1)) ctx.accumulate(1, ctx.grad_output());
  });
}

Var mul(Tape& tape, Var av, Var bv) {
  const Tensor& a = tape.value(av);
  const Tensor& b = tape.value(bv);
  require_shape(b, a.shape(), "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return tape.record("mul", std::move(out), {av, bv}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    for (std::size_t side = 0; side < 2; ++side) {
      if (!ctx.needs_grad(side)) continue;
      const Tensor& other = ctx.input(1 - side);
      Tensor gi(other.shape());
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] = g[i] * other[i];
      ctx.accumulate(side, std::move(gi));
    }
  });
}

Var scale(Tape& tape, Var xv, Real factor) {
  Tensor out = tape.value(xv);
  for (Real& v : out.values()) v *= factor;
  return tape.record("scale", std::move(out), {xv}, [factor](BackwardContext& ctx) {
    Tensor g = ctx.grad_output();
    for (Real& v : g.values()) v *= factor;
    ctx.accumulate(0, std::move(g));
  });
}

Var square(Tape& tape, Var xv) {
  Tensor out = tape.value(xv);
  for (Real& v : out.values()) v *= v;
  return tape.record("square", std::move(out), {xv}, [](BackwardContext& ctx) {
    const Tensor& x = ctx.input(0);
    Tensor g = ctx.grad_output();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= Real{2} * x[i];
    ctx.accumulate(0, std::move(g));
  });
}

Var sum(Tape& tape, Var xv) {
  double s = 0.0;
  for (Real v : tape.value(xv).values()) s += v;
  return tape.record("sum", Tensor::scalar(static_cast<Real>(s)), {xv},
                     [](BackwardContext& ctx) {
                       ctx.accumulate(0, Tensor(ctx.input(0).shape(),
                                                ctx.grad_output()[0]));
                     });
}

Var mean(Tape& tape, Var xv) {
  const auto n = static_cast<double>(tape.value(xv).size());
  return scale(tape, sum(tape, xv), static_cast<Real>(1.0 / n));
}

Var conv_block(Tape& tape, Var x, const ConvSpec& spec, const ConvBlockVars& v,
               Real epsilon, Real alpha, bool transposed) {
  const Var conv = transposed ? transposed_conv3d(tape, x, v.weight, v.bias, spec)
                              : conv3d(tape, x, v.weight, v.bias, spec);
  return leaky_relu(tape, adain(tape, conv, v.adain_a, v.adain_b, epsilon), alpha);
}

Tensor init_glorot_uniform(const Shape& shape, std::uint64_t seed) {
  if (shape.size() < 2) {
    throw std::invalid_argument("glorot init needs at least (out, in) dims");
  }
  std::size_t receptive = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) receptive *= shape[i];
  const std::size_t fan_out = shape[0] * receptive;
  const std::size_t fan_in = shape[1] * receptive;
  if (fan_in == 0 || fan_out == 0) {
    throw std::invalid_argument("glorot init with zero fan for shape " +
                                to_string(shape));
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(shape);
  for (Real& v : t.values()) v = static_cast<Real>(dist(rng));
  return t;
}

Tensor init_identity(const Shape& shape) {
  if (shape.size() != 5) {
    throw std::invalid_argument("identity init expects (C, C, u, u, u)");
  }
  if (shape[0] != shape[1]) {
    throw std::invalid_argument(
        "identity init undefined for non-square channels " + to_string(shape));
  }
  const std::size_t u = shape[2];
  if (u % 2 == 0 || shape[3] != u || shape[4] != u) {
    throw std::invalid_argument("identity init needs an odd cubic kernel");
  }
  Tensor t(shape);
  const std::size_t taps = u * u * u;
  const std::size_t centre = taps / 2;
  for (std::size_t c = 0; c < shape[0]; ++c) {
    t[(c * shape[1] + c) * taps + centre] = Real{1};
  }
  return t;
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
