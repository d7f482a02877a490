#include "canvolve/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace canvolve {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

inline namespace CANVOLVE_PRECISION_NS {

namespace {

constexpr char kStateTag[4] = {'T', 'R', 'S', 'T'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const Tensor& t) {
    put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(d);
    bytes(t.data(), t.size() * sizeof(Real));
  }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}

  void need(std::size_t n) const {
    if (pos_ + n > end_) {
      throw CheckpointError(CheckpointErrorCode::truncated, "checkpoint is truncated");
    }
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor tensor() {
    const auto rank = get<std::uint8_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>());
    const std::size_t n = element_count(shape);
    need(n * sizeof(Real));
    std::vector<Real> values(n);
    bytes(values.data(), n * sizeof(Real));
    return Tensor(shape, std::move(values));
  }
  std::size_t position() const { return pos_; }

 private:
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_params(Writer& w, const std::vector<Parameter>& params) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.tensor(p.value);
  }
}

std::vector<Parameter> read_params(Reader& r) {
  const auto n = r.get<std::uint32_t>();
  std::vector<Parameter> params;
  for (std::uint32_t i = 0; i < n; ++i) {
    Parameter p;
    p.name = r.str();
    p.value = r.tensor();
    params.push_back(std::move(p));
  }
  return params;
}

void write_tensors(Writer& w, const std::vector<Tensor>& ts) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) w.tensor(t);
}

std::vector<Tensor> read_tensors(Reader& r) {
  const auto n = r.get<std::uint32_t>();
  std::vector<Tensor> ts;
  for (std::uint32_t i = 0; i < n; ++i) ts.push_back(r.tensor());
  return ts;
}

void write_state(Writer& w, const TrainState& s, const Network* best) {
  w.bytes(kStateTag, 4);
  w.put(s.adam.beta1);
  w.put(s.adam.beta2);
  w.put(s.adam.epsilon);
  w.put<std::uint64_t>(s.adam.t);
  write_tensors(w, s.adam.m);
  write_tensors(w, s.adam.v);
  w.put(s.schedule.initial_lr);
  w.put<std::int32_t>(s.schedule.total_epochs);
  w.put(s.schedule.power);
  w.put<std::int32_t>(s.epoch);
  w.put<std::uint64_t>(s.step);
  w.put<std::uint64_t>(s.seed);
  w.put<std::uint64_t>(s.history.size());
  for (const auto& h : s.history) {
    w.put<std::uint64_t>(h.step);
    w.put<std::int32_t>(h.epoch);
    w.put(h.lr);
    w.put(h.loss);
    w.put(h.wall_ms);
  }
  w.put<std::uint64_t>(s.validation.size());
  for (const auto& v : s.validation) {
    w.put<std::int32_t>(v.epoch);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v.val_dsc.size()));
    for (double d : v.val_dsc) w.put(d);
    w.put(v.mean_dsc);
  }
  w.put(s.best_score);
  w.put<std::int32_t>(s.best_epoch);
  w.put<std::uint8_t>(best ? 1 : 0);
  if (best) write_params(w, best->parameters());
}

TrainState read_state(Reader& r, std::optional<std::vector<Parameter>>& best) {
  char tag[4];
  r.bytes(tag, 4);
  if (std::memcmp(tag, kStateTag, 4) != 0) {
    throw CheckpointError(CheckpointErrorCode::corrupt, "missing train-state section");
  }
  TrainState s;
  s.adam.beta1 = r.get<double>();
  s.adam.beta2 = r.get<double>();
  s.adam.epsilon = r.get<double>();
  s.adam.t = r.get<std::uint64_t>();
  s.adam.m = read_tensors(r);
  s.adam.v = read_tensors(r);
  s.schedule.initial_lr = r.get<double>();
  s.schedule.total_epochs = r.get<std::int32_t>();
  s.schedule.power = r.get<double>();
  s.epoch = r.get<std::int32_t>();
  s.step = r.get<std::uint64_t>();
  s.seed = r.get<std::uint64_t>();
  const auto nh = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < nh; ++i) {
    StepRecord h;
    h.step = r.get<std::uint64_t>();
    h.epoch = r.get<std::int32_t>();
    h.lr = r.get<double>();
    h.loss = r.get<double>();
    h.wall_ms = r.get<double>();
    s.history.push_back(h);
  }
  const auto nv = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < nv; ++i) {
    EpochRecord v;
    v.epoch = r.get<std::int32_t>();
    const auto nd = r.get<std::uint32_t>();
    for (std::uint32_t j = 0; j < nd; ++j) v.val_dsc.push_back(r.get<double>());
    v.mean_dsc = r.get<double>();
    s.validation.push_back(std::move(v));
  }
  s.best_score = r.get<double>();
  s.best_epoch = r.get<std::int32_t>();
  if (r.get<std::uint8_t>()) best = read_params(r);
  return s;
}

std::uint32_t crc_of(const char* p, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(p), static_cast<uInt>(n)));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const TrainState& state, const Network* best) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint32_t>(net.config().hash());
  w.put<std::uint8_t>(sizeof(Real));
  w.str(net.config().canonical());
  write_params(w, net.parameters());
  write_state(w, state, best);
  const std::uint32_t crc = crc_of(w.buffer().data(), w.buffer().size());
  w.put(crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError(CheckpointErrorCode::io, "cannot write " + path.string());
  }
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) {
    throw CheckpointError(CheckpointErrorCode::io, "write failed: " + path.string());
  }
}

namespace {

Checkpoint load_impl(const std::filesystem::path& path, const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrorCode::io, "cannot open " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(buf.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw CheckpointError(CheckpointErrorCode::bad_magic,
                          path.string() + ": not a checkpoint (bad magic)");
  }
  Reader head(buf, buf.size());
  char magic[sizeof(kCheckpointMagic)];
  head.bytes(magic, sizeof magic);
  const auto version = head.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrorCode::bad_version,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  const auto hash = head.get<std::uint32_t>();
  const auto elem = head.get<std::uint8_t>();
  if (expected && expected->hash() != hash) {
    throw CheckpointError(CheckpointErrorCode::config_mismatch,
                          "checkpoint was saved for a different model configuration");
  }
  if (elem != sizeof(Real)) {
    throw CheckpointError(CheckpointErrorCode::precision_mismatch,
                          "checkpoint stores " + std::to_string(elem * 8) +
                              "-bit values, this build uses " +
                              std::to_string(sizeof(Real) * 8));
  }
  if (buf.size() < head.position() + 4) {
    throw CheckpointError(CheckpointErrorCode::truncated, "checkpoint is truncated");
  }

  // Parse everything before the trailing CRC; a short file reports truncation
  // before the CRC gets a chance to.
  const std::size_t body = buf.size() - 4;
  Reader r(buf, body);
  r.bytes(magic, sizeof magic);
  r.get<std::uint16_t>();
  r.get<std::uint32_t>();
  r.get<std::uint8_t>();
  const std::string text = r.str();
  ModelConfig config;
  try {
    config = ModelConfig::from_canonical(text);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointErrorCode::corrupt,
                          std::string("bad stored configuration: ") + e.what());
  }
  if (config.hash() != hash) {
    throw CheckpointError(CheckpointErrorCode::corrupt, "configuration hash mismatch");
  }
  auto params = read_params(r);
  std::optional<std::vector<Parameter>> best;
  TrainState state = read_state(r, best);
  if (r.position() != body) {
    throw CheckpointError(CheckpointErrorCode::corrupt, "trailing bytes in checkpoint");
  }
  std::uint32_t stored;
  std::memcpy(&stored, buf.data() + body, 4);
  if (stored != crc_of(buf.data(), body)) {
    throw CheckpointError(CheckpointErrorCode::corrupt, "checkpoint checksum mismatch");
  }

  Network net = Network::build(config, state.seed);
  try {
    net.set_parameters(std::move(params));
    if (best) {
      Network check = net;
      check.set_parameters(*best);
    }
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointErrorCode::corrupt, e.what());
  }
  return {std::move(net), std::move(state), std::move(best)};
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return load_impl(path, nullptr);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  return load_impl(path, &expected);
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
