#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "canvolve/volio.hpp"

namespace canvolve::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw std::invalid_argument("'" + text + "' is not a valid number");
  }
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw std::invalid_argument("'" + text + "' is not a boolean");
}

// Shortest text that reads back as the same value.
template <typename T>
std::string fmt(T v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

std::vector<Real> parse_reals(const std::string& text) {
  std::vector<Real> out;
  for (const auto& item : split_list(text)) out.push_back(static_cast<Real>(parse_number<double>(item)));
  return out;
}

std::string augment_text(const AugmentOps& ops) {
  std::vector<std::string> names;
  if (ops.shift) names.push_back("shift");
  if (ops.rotation) names.push_back("rotation");
  if (ops.affine) names.push_back("affine");
  if (ops.elastic) names.push_back("elastic");
  if (names.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
  return out;
}

AugmentOps parse_augment(const std::string& text) {
  AugmentOps ops;
  if (text == "none") return ops;
  for (const auto& name : split_list(text)) {
    if (name == "shift") ops.shift = true;
    else if (name == "rotation") ops.rotation = true;
    else if (name == "affine") ops.affine = true;
    else if (name == "elastic") ops.elastic = true;
    else throw std::invalid_argument("unknown augmentation '" + name + "'");
  }
  return ops;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table{
      {"model",
       {{"num_classes", [](RunConfig& c, const std::string& v) { c.model.num_classes = parse_number<int>(v); }},
        {"base_channels", [](RunConfig& c, const std::string& v) { c.model.base_channels = parse_number<std::size_t>(v); }},
        {"cam_channels", [](RunConfig& c, const std::string& v) { c.model.cam_channels = parse_number<std::size_t>(v); }},
        {"latent_channels", [](RunConfig& c, const std::string& v) { c.model.latent_channels = parse_number<std::size_t>(v); }},
        {"downsample_stages", [](RunConfig& c, const std::string& v) { c.model.downsample_stages = parse_number<int>(v); }},
        {"cam_dilations",
         [](RunConfig& c, const std::string& v) {
           c.model.cam_dilations.clear();
           for (const auto& d : split_list(v)) c.model.cam_dilations.push_back(parse_number<std::size_t>(d));
         }},
        {"lrelu_alpha", [](RunConfig& c, const std::string& v) { c.model.lrelu_alpha = parse_number<double>(v); }},
        {"adain_epsilon", [](RunConfig& c, const std::string& v) { c.model.adain_epsilon = parse_number<double>(v); }}}},
      {"loss",
       {{"kind", [](RunConfig& c, const std::string& v) { c.train.loss = parse_loss_kind(v); }},
        {"gamma", [](RunConfig& c, const std::string& v) { c.train.loss_config.gamma = static_cast<Real>(parse_number<double>(v)); }},
        {"lambda_fl", [](RunConfig& c, const std::string& v) { c.train.loss_config.lambda_fl = static_cast<Real>(parse_number<double>(v)); }},
        {"clamp_eps", [](RunConfig& c, const std::string& v) { c.train.loss_config.clamp_eps = static_cast<Real>(parse_number<double>(v)); }},
        {"weights",
         [](RunConfig& c, const std::string& v) {
           c.train.loss_config.weights.values.clear();
           if (v == "inverse_frequency") {
             c.weight_mode = WeightMode::inverse_frequency;
           } else if (v == "uniform") {
             c.weight_mode = WeightMode::uniform;
           } else {
             c.weight_mode = WeightMode::explicit_values;
             c.train.loss_config.weights.values = parse_reals(v);
           }
         }},
        {"alpha",
         [](RunConfig& c, const std::string& v) {
           c.train.loss_config.alpha.clear();
           if (v != "auto") c.train.loss_config.alpha = parse_reals(v);
         }}}},
      {"train",
       {{"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_number<int>(v); }},
        {"seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(v); }},
        {"initial_lr", [](RunConfig& c, const std::string& v) { c.train.initial_lr = parse_number<double>(v); }},
        {"lr_power", [](RunConfig& c, const std::string& v) { c.train.lr_power = parse_number<double>(v); }},
        {"val_fraction", [](RunConfig& c, const std::string& v) { c.train.val_fraction = parse_number<double>(v); }},
        {"validate", [](RunConfig& c, const std::string& v) { c.train.validate_each_epoch = parse_bool(v); }},
        {"augment", [](RunConfig& c, const std::string& v) { c.train.augment_ops = parse_augment(v); }},
        {"max_shift_voxels", [](RunConfig& c, const std::string& v) { c.train.augment_ranges.max_shift_voxels = parse_number<double>(v); }},
        {"max_rotation_degrees", [](RunConfig& c, const std::string& v) { c.train.augment_ranges.max_rotation_degrees = parse_number<double>(v); }},
        {"record_wall_clock", [](RunConfig& c, const std::string& v) { c.train.record_wall_clock = parse_bool(v); }},
        {"checkpoint_every", [](RunConfig& c, const std::string& v) { c.checkpoint_every = parse_number<int>(v); }},
        {"folds", [](RunConfig& c, const std::string& v) { c.folds = parse_number<int>(v); }}}},
      {"data",
       {{"train", [](RunConfig& c, const std::string& v) { c.train_data = v; }},
        {"test", [](RunConfig& c, const std::string& v) { c.test_data = v; }}}},
  };
  return table;
}

}  // namespace

RunConfig::RunConfig() = default;

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig cfg;
  const auto& table = setters();
  std::string section;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!table.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ConfigError(where + "expected 'key: value'");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    const auto& keys = table.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(section + "." + key).second) {
      throw ConfigError(where + "duplicate key '" + key + "' in [" + section + "]");
    }
    if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrorCode::io, "cannot open config " + path.string());
  return parse(in, path.string());
}

void RunConfig::validate() const {
  model.validate();
  const auto k = static_cast<std::size_t>(model.num_classes);
  if (weight_mode == WeightMode::explicit_values) {
    train.loss_config.weights.validate(k);
  }
  LossConfig probe = train.loss_config;
  if (probe.weights.values.empty()) probe.weights = ClassWeights::uniform(model.num_classes);
  probe.validate(k);
  if (train.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(train.initial_lr > 0.0)) throw std::invalid_argument("initial_lr must be positive");
  if (!(train.lr_power > 0.0)) throw std::invalid_argument("lr_power must be positive");
  if (!(train.val_fraction >= 0.0 && train.val_fraction < 1.0)) {
    throw std::invalid_argument("val_fraction must lie in [0, 1)");
  }
  if (train.augment_ranges.max_shift_voxels < 0.0 || train.augment_ranges.max_rotation_degrees < 0.0) {
    throw std::invalid_argument("augmentation ranges must be non-negative");
  }
  if (checkpoint_every < 1) throw std::invalid_argument("checkpoint_every must be >= 1");
  if (folds < 1) throw std::invalid_argument("folds must be >= 1");
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  const auto& lc = train.loss_config;
  o << "[model]\n"
    << "num_classes: " << model.num_classes << '\n'
    << "base_channels: " << model.base_channels << '\n'
    << "cam_channels: " << model.cam_channels << '\n'
    << "latent_channels: " << model.latent_channels << '\n'
    << "downsample_stages: " << model.downsample_stages << '\n'
    << "cam_dilations: " << fmt_list(model.cam_dilations) << '\n'
    << "lrelu_alpha: " << fmt(model.lrelu_alpha) << '\n'
    << "adain_epsilon: " << fmt(model.adain_epsilon) << '\n'
    << "\n[loss]\n"
    << "kind: " << to_string(train.loss) << '\n'
    << "gamma: " << fmt(lc.gamma) << '\n'
    << "lambda_fl: " << fmt(lc.lambda_fl) << '\n'
    << "clamp_eps: " << fmt(lc.clamp_eps) << '\n'
    << "weights: ";
  switch (weight_mode) {
    case WeightMode::inverse_frequency: o << "inverse_frequency"; break;
    case WeightMode::uniform: o << "uniform"; break;
    case WeightMode::explicit_values: o << fmt_list(lc.weights.values); break;
  }
  o << '\n'
    << "alpha: " << (lc.alpha.empty() ? std::string("auto") : fmt_list(lc.alpha)) << '\n'
    << "\n[train]\n"
    << "epochs: " << train.epochs << '\n'
    << "seed: " << train.seed << '\n'
    << "initial_lr: " << fmt(train.initial_lr) << '\n'
    << "lr_power: " << fmt(train.lr_power) << '\n'
    << "val_fraction: " << fmt(train.val_fraction) << '\n'
    << "validate: " << (train.validate_each_epoch ? "true" : "false") << '\n'
    << "augment: " << augment_text(train.augment_ops) << '\n'
    << "max_shift_voxels: " << fmt(train.augment_ranges.max_shift_voxels) << '\n'
    << "max_rotation_degrees: " << fmt(train.augment_ranges.max_rotation_degrees) << '\n'
    << "record_wall_clock: " << (train.record_wall_clock ? "true" : "false") << '\n'
    << "checkpoint_every: " << checkpoint_every << '\n'
    << "folds: " << folds << '\n'
    << "\n[data]\n";
  // Data paths have no default; absent ones are left out.
  if (!train_data.empty()) o << "train: " << train_data.string() << '\n';
  if (!test_data.empty()) o << "test: " << test_data.string() << '\n';
  return o.str();
}

}  // namespace canvolve::cli
