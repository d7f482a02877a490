#include "canvolve/model.hpp"

#include <zlib.h>

#include <algorithm>
#include <sstream>

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct LayerParams {
  std::size_t weight, bias, adain_a = 0, adain_b = 0;
};

}  // namespace

const char* to_string(LayerRole role) {
  switch (role) {
    case LayerRole::standard: return "standard";
    case LayerRole::cam: return "cam";
    case LayerRole::deconv: return "deconv";
    case LayerRole::shortcut: return "shortcut";
    case LayerRole::seghead: return "seghead";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (num_classes < 2 || num_classes > 256) {
    throw std::invalid_argument("num_classes must be in [2, 256]");
  }
  if (base_channels == 0 || cam_channels == 0 || latent_channels == 0) {
    throw std::invalid_argument("channel counts must be positive");
  }
  if (downsample_stages != 1 && downsample_stages != 2) {
    throw std::invalid_argument("downsample_stages must be 1 or 2");
  }
  if (cam_dilations.empty()) {
    throw std::invalid_argument("cam_dilations needs at least the latent block");
  }
  for (auto d : cam_dilations) {
    if (d < 1) throw std::invalid_argument("cam dilations must be >= 1");
  }
  if (!(lrelu_alpha >= 0.0 && lrelu_alpha < 1.0)) {
    throw std::invalid_argument("lrelu_alpha must lie in [0, 1)");
  }
  if (!(adain_epsilon > 0.0)) throw std::invalid_argument("adain_epsilon must be > 0");
}

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "num_classes=" << num_classes << "\n"
     << "base_channels=" << base_channels << "\n"
     << "cam_channels=" << cam_channels << "\n"
     << "latent_channels=" << latent_channels << "\n"
     << "downsample_stages=" << downsample_stages << "\n"
     << "cam_dilations=";
  for (std::size_t i = 0; i < cam_dilations.size(); ++i) {
    os << (i ? "," : "") << cam_dilations[i];
  }
  os << "\n"
     << "lrelu_alpha=" << lrelu_alpha << "\n"
     << "adain_epsilon=" << adain_epsilon << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_canonical(const std::string& text) {
  ModelConfig c;
  c.cam_dilations.clear();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad config line: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    static const char* const kKeys[] = {"num_classes",       "base_channels",
                                        "cam_channels",      "latent_channels",
                                        "downsample_stages", "cam_dilations",
                                        "lrelu_alpha",       "adain_epsilon"};
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw std::invalid_argument("unknown config key: " + key);
    }
    try {
      if (key == "num_classes") c.num_classes = std::stoi(value);
      else if (key == "base_channels") c.base_channels = std::stoul(value);
      else if (key == "cam_channels") c.cam_channels = std::stoul(value);
      else if (key == "latent_channels") c.latent_channels = std::stoul(value);
      else if (key == "downsample_stages") c.downsample_stages = std::stoi(value);
      else if (key == "lrelu_alpha") c.lrelu_alpha = std::stod(value);
      else if (key == "adain_epsilon") c.adain_epsilon = std::stod(value);
      else {
        std::istringstream ds(value);
        std::string tok;
        while (std::getline(ds, tok, ',')) c.cam_dilations.push_back(std::stoul(tok));
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad value for " + key + ": " + value);
    }
  }
  c.validate();
  return c;
}

std::uint32_t ModelConfig::hash() const {
  const auto text = canonical();
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()),
            static_cast<uInt>(text.size())));
}

std::vector<LayerSpec> ModelConfig::ledger() const {
  validate();
  std::vector<LayerSpec> out;
  auto unique_name = [&out](std::string name) {
    const std::string base = name;
    for (int i = 2; std::any_of(out.begin(), out.end(),
                                [&](const LayerSpec& l) { return l.name == name; });
         ++i) {
      name = base + "-" + std::to_string(i);
    }
    return name;
  };
  const auto glorot = Initializer::glorot_uniform;
  const auto identity = Initializer::identity;

  out.push_back({"ConvB1", LayerRole::standard,
                 ConvSpec::same(1, base_channels, 3, 1, 1, glorot), true});
  out.push_back({"ConvB2-down", LayerRole::standard,
                 ConvSpec::same(base_channels, cam_channels, 3, 1, 2, glorot), true});
  for (std::size_t i = 0; i + 1 < cam_dilations.size(); ++i) {
    const auto d = cam_dilations[i];
    out.push_back({unique_name("CAM-d" + std::to_string(d)), LayerRole::cam,
                   ConvSpec::same(cam_channels, cam_channels, 3, d, 1, identity),
                   true});
  }
  // Identity is undefined for a non-square latent block.
  const bool square_latent = cam_channels == latent_channels;
  out.push_back({"ConvB4-latent", LayerRole::cam,
                 ConvSpec::same(cam_channels, latent_channels, 3,
                                cam_dilations.back(), downsample_stages == 2 ? 2 : 1,
                                square_latent ? identity : glorot),
                 true});
  if (downsample_stages == 2) {
    out.push_back({"DeconvB2", LayerRole::deconv,
                   ConvSpec::same(latent_channels, cam_channels, 3, 1, 2, glorot),
                   true});
    out.push_back({"Shortcut2", LayerRole::shortcut,
                   ConvSpec::same(cam_channels, cam_channels, 1, 1, 1, glorot),
                   false});
  }
  const std::size_t deconv_in = downsample_stages == 2 ? cam_channels : latent_channels;
  out.push_back({"DeconvB", LayerRole::deconv,
                 ConvSpec::same(deconv_in, base_channels, 3, 1, 2, glorot), true});
  out.push_back({"Shortcut", LayerRole::shortcut,
                 ConvSpec::same(base_channels, base_channels, 1, 1, 1, glorot), false});
  out.push_back({"SegHead", LayerRole::seghead,
                 ConvSpec::same(base_channels,
                                static_cast<std::size_t>(num_classes), 1, 1, 1, glorot),
                 false});
  return out;
}

std::vector<ReceptiveFieldStep> receptive_field_table(const ModelConfig& config) {
  std::vector<ReceptiveFieldStep> out;
  std::size_t rf = 1, jump = 1;
  for (const auto& layer : config.ledger()) {
    if (layer.role != LayerRole::standard && layer.role != LayerRole::cam) break;
    const auto u_hat = dilated_kernel_extent(layer.conv.kernel, layer.conv.dilation);
    ReceptiveFieldStep step{layer.name, u_hat, layer.conv.stride, jump, 0};
    rf += (u_hat - 1) * jump;
    jump *= layer.conv.stride;
    step.field = rf;
    out.push_back(step);
  }
  return out;
}

std::size_t receptive_field(const ModelConfig& config) {
  return receptive_field_table(config).back().field;
}

ParameterCount count_parameters(const ModelConfig& config) {
  ParameterCount pc;
  for (const auto& layer : config.ledger()) {
    LayerParameterCount l{layer.name, layer.conv.parameter_count(),
                          layer.has_adain ? std::size_t{2} : std::size_t{0}};
    pc.total += l.total();
    pc.layers.push_back(l);
  }
  return pc;
}

Tensor to_input_tensor(const Volume& volume) {
  const auto& e = volume.extents;
  Tensor t({1, 1, e.d, e.h, e.w});
  for (std::size_t i = 0; i < volume.data.size(); ++i) {
    t[i] = static_cast<Real>(volume.data[i]);
  }
  return t;
}

Network Network::build(const ModelConfig& config, std::uint64_t seed) {
  Network net;
  net.config_ = config;
  net.layers_ = config.ledger();
  std::uint64_t stream = seed;
  for (std::size_t li = 0; li < net.layers_.size(); ++li) {
    const auto& layer = net.layers_[li];
    stream = splitmix64(stream ^ (li + 1));
    const Shape wshape = layer.role == LayerRole::deconv
                             ? layer.conv.transposed_weight_shape()
                             : layer.conv.weight_shape();
    Tensor w = layer.conv.initializer == Initializer::identity
                   ? init_identity(wshape)
                   : init_glorot_uniform(wshape, stream);
    net.params_.push_back({layer.name + ".weight", std::move(w)});
    net.params_.push_back({layer.name + ".bias", Tensor({layer.conv.out_channels})});
    if (layer.has_adain) {
      net.params_.push_back({layer.name + ".adain_a", Tensor::scalar(Real{1})});
      net.params_.push_back({layer.name + ".adain_b", Tensor::scalar(Real{0})});
    }
  }
  return net;
}

void Network::set_parameters(std::vector<Parameter> params) {
  if (params.size() != params_.size()) {
    throw ShapeError("expected " + std::to_string(params_.size()) +
                     " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != params_[i].name ||
        params[i].value.shape() != params_[i].value.shape()) {
      throw ShapeError("parameter " + std::to_string(i) + " '" + params[i].name +
                       "' " + to_string(params[i].value.shape()) +
                       " does not match ledger entry '" + params_[i].name + "' " +
                       to_string(params_[i].value.shape()));
    }
  }
  params_ = std::move(params);
}

ForwardResult Network::forward(Tape& tape, const Tensor& input) const {
  std::vector<Var> params;
  params.reserve(params_.size());
  for (const auto& p : params_) params.push_back(tape.parameter(p.value));
  return forward(tape, input, params);
}

ForwardResult Network::forward(Tape& tape, const Tensor& input,
                               const std::vector<Var>& params) const {
  if (params.size() != params_.size()) {
    throw std::invalid_argument("expected " + std::to_string(params_.size()) +
                                " parameter handles, got " +
                                std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tape.value(params[i]).shape() != params_[i].value.shape()) {
      throw ShapeError("parameter " + params_[i].name + " has shape " +
                       to_string(tape.value(params[i]).shape()) + ", expected " +
                       to_string(params_[i].value.shape()));
    }
  }
  if (input.rank() != 5 || input.dim(0) != 1 || input.dim(1) != 1) {
    throw ShapeError("network input must be 1 x 1 x D x H x W, got " +
                     to_string(input.shape()));
  }
  const std::size_t div = config_.spatial_divisor();
  for (std::size_t a = 2; a < 5; ++a) {
    if (input.dim(a) % div != 0 || input.dim(a) == 0) {
      throw ShapeError("input extents " + to_string(input.shape()) +
                       " must be positive multiples of " + std::to_string(div));
    }
  }

  ForwardResult r;
  r.params = params;

  const Real eps = static_cast<Real>(config_.adain_epsilon);
  const Real alpha = static_cast<Real>(config_.lrelu_alpha);
  std::size_t pi = 0;
  struct BlockOut {
    Var pre;   // after AdaIN, before LReLU
    Var post;
  };
  auto run_block = [&](const LayerSpec& layer, Var x) {
    const Var w = r.params[pi++];
    const Var b = r.params[pi++];
    const Var a = r.params[pi++];
    const Var bn = r.params[pi++];
    const Var conv = layer.role == LayerRole::deconv
                         ? transposed_conv3d(tape, x, w, b, layer.conv)
                         : conv3d(tape, x, w, b, layer.conv);
    const Var pre = adain(tape, conv, a, bn, eps);
    const Var post = leaky_relu(tape, pre, alpha);
    r.activations.emplace_back(layer.name, post);
    return BlockOut{pre, post};
  };
  auto run_plain = [&](const LayerSpec& layer, Var x) {
    const Var w = r.params[pi++];
    const Var b = r.params[pi++];
    const Var out = conv3d(tape, x, w, b, layer.conv);
    r.activations.emplace_back(layer.name, out);
    return out;
  };

  const Var x = tape.constant(input);
  std::size_t li = 0;
  const auto b1 = run_block(layers_[li++], x);
  r.activations.emplace_back("ConvB1.pre", b1.pre);
  auto h = run_block(layers_[li++], b1.post);
  while (layers_[li].role == LayerRole::cam && layers_[li].name != "ConvB4-latent") {
    h = run_block(layers_[li++], h.post);
  }
  const Var cam_pre = h.pre;
  h = run_block(layers_[li++], h.post);  // ConvB4-latent

  Var up = h.post;
  if (config_.downsample_stages == 2) {
    const auto deconv2 = run_block(layers_[li++], up);
    const Var sc2 = run_plain(layers_[li++], cam_pre);
    up = add(tape, deconv2.post, sc2);
  }
  const auto deconv = run_block(layers_[li++], up);
  const Var sc = run_plain(layers_[li++], b1.pre);
  const Var fused = add(tape, deconv.post, sc);
  r.logits = run_plain(layers_[li++], fused);
  r.probs = softmax_channels(tape, r.logits);
  return r;
}

Tensor Network::predict_probs(const Tensor& input) const {
  Tape tape;
  const auto r = forward(tape, input);
  return tape.value(r.probs);
}

ParameterCount Network::count_parameters() const {
  ParameterCount pc;
  std::size_t pi = 0;
  for (const auto& layer : layers_) {
    LayerParameterCount l{layer.name, 0, 0};
    l.conv = params_[pi].value.size() + params_[pi + 1].value.size();
    pi += 2;
    if (layer.has_adain) {
      l.adain = params_[pi].value.size() + params_[pi + 1].value.size();
      pi += 2;
    }
    pc.total += l.total();
    pc.layers.push_back(l);
  }
  return pc;
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
