#include "canvolve/volio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace canvolve {

static_assert(std::endian::native == std::endian::little,
              "volume I/O assumes a little-endian host");

const char* to_string(FormatErrorCode code) {
  switch (code) {
    case FormatErrorCode::io: return "io error";
    case FormatErrorCode::bad_magic: return "bad magic";
    case FormatErrorCode::bad_version: return "unsupported version";
    case FormatErrorCode::bad_dtype: return "bad dtype code";
    case FormatErrorCode::truncated: return "truncated file";
    case FormatErrorCode::bad_header: return "bad header field";
    case FormatErrorCode::wrong_kind: return "wrong payload kind";
    case FormatErrorCode::unsupported_variant: return "unsupported variant";
    case FormatErrorCode::compressed: return "compressed not supported";
    case FormatErrorCode::unsupported_datatype: return "unsupported datatype";
    case FormatErrorCode::unsupported_dims: return "unsupported dims";
    case FormatErrorCode::checksum: return "checksum mismatch";
  }
  return "format error";
}

namespace {

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError(FormatErrorCode::io, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T load(const std::vector<char>& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void write_bytes(const std::filesystem::path& path, const std::string& header,
                 const void* payload, std::size_t payload_bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError(FormatErrorCode::io, "cannot write " + path.string());
  }
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(payload),
            static_cast<std::streamsize>(payload_bytes));
  if (!out) {
    throw FormatError(FormatErrorCode::io, "write failed " + path.string());
  }
}

std::string vol3d_header(Vol3dDtype dtype, const Extents& e, const Spacing& s) {
  std::string h("VOL3");
  put<std::uint16_t>(h, kVol3dVersion);
  put<std::uint8_t>(h, static_cast<std::uint8_t>(dtype));
  put<std::uint8_t>(h, 0);
  put<std::uint32_t>(h, static_cast<std::uint32_t>(e.d));
  put<std::uint32_t>(h, static_cast<std::uint32_t>(e.h));
  put<std::uint32_t>(h, static_cast<std::uint32_t>(e.w));
  for (float v : s) put<float>(h, v);
  return h;
}

struct Vol3dHeader {
  Vol3dDtype dtype;
  Extents extents;
  Spacing spacing;
};

Vol3dHeader parse_vol3d(const std::vector<char>& bytes,
                        const std::filesystem::path& path) {
  const auto where = " (" + path.string() + ")";
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "VOL3", 4) != 0) {
    throw FormatError(FormatErrorCode::bad_magic, "expected VOL3" + where);
  }
  if (bytes.size() < kVol3dHeaderBytes) {
    throw FormatError(FormatErrorCode::truncated, "short header" + where);
  }
  const auto version = load<std::uint16_t>(bytes, 4);
  if (version != kVol3dVersion) {
    throw FormatError(FormatErrorCode::bad_version,
                      "version " + std::to_string(version) + where);
  }
  const auto dtype = load<std::uint8_t>(bytes, 6);
  if (dtype > 1) {
    throw FormatError(FormatErrorCode::bad_dtype,
                      "dtype code " + std::to_string(dtype) + where);
  }
  Vol3dHeader h;
  h.dtype = static_cast<Vol3dDtype>(dtype);
  h.extents = {load<std::uint32_t>(bytes, 8), load<std::uint32_t>(bytes, 12),
               load<std::uint32_t>(bytes, 16)};
  for (int i = 0; i < 3; ++i) h.spacing[i] = load<float>(bytes, 20 + 4 * i);
  for (float s : h.spacing) {
    if (!(s > 0.0f) || !std::isfinite(s)) {
      throw FormatError(FormatErrorCode::bad_header,
                        "non-positive spacing" + where);
    }
  }
  const std::size_t elem = h.dtype == Vol3dDtype::f32 ? 4 : 1;
  const std::size_t need = kVol3dHeaderBytes + h.extents.voxels() * elem;
  if (bytes.size() < need) {
    throw FormatError(FormatErrorCode::truncated,
                      "header declares " + std::to_string(need) +
                          " bytes, file has " + std::to_string(bytes.size()) +
                          where);
  }
  return h;
}

}  // namespace

void write_vol3d(const Volume& volume, const std::filesystem::path& path) {
  if (volume.data.size() != volume.extents.voxels()) {
    throw std::invalid_argument("volume payload does not match extents");
  }
  write_bytes(path, vol3d_header(Vol3dDtype::f32, volume.extents, volume.spacing),
              volume.data.data(), volume.data.size() * sizeof(float));
}

void write_vol3d(const LabelMap& labels, const std::filesystem::path& path) {
  validate(labels);
  write_bytes(path,
              vol3d_header(Vol3dDtype::u8, labels.extents(), labels.spacing()),
              labels.grid.data.data(), labels.grid.data.size());
}

Vol3dDtype peek_vol3d_dtype(const std::filesystem::path& path) {
  return parse_vol3d(read_all(path), path).dtype;
}

Volume read_vol3d_volume(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const auto h = parse_vol3d(bytes, path);
  Volume v(h.extents, h.spacing);
  if (h.dtype == Vol3dDtype::f32) {
    std::memcpy(v.data.data(), bytes.data() + kVol3dHeaderBytes,
                v.data.size() * sizeof(float));
  } else {
    for (std::size_t i = 0; i < v.data.size(); ++i) {
      v.data[i] = static_cast<std::uint8_t>(bytes[kVol3dHeaderBytes + i]);
    }
  }
  return v;
}

LabelMap read_vol3d_labels(const std::filesystem::path& path, int num_classes) {
  const auto bytes = read_all(path);
  const auto h = parse_vol3d(bytes, path);
  if (h.dtype != Vol3dDtype::u8) {
    throw FormatError(FormatErrorCode::wrong_kind,
                      "expected u8 labels in " + path.string());
  }
  LabelMap labels{Grid<std::uint8_t>(h.extents, h.spacing), num_classes};
  std::memcpy(labels.grid.data.data(), bytes.data() + kVol3dHeaderBytes,
              labels.grid.data.size());
  if (num_classes == 0) {
    const auto mx = labels.grid.data.empty()
                        ? 0
                        : *std::max_element(labels.grid.data.begin(),
                                            labels.grid.data.end());
    labels.num_classes = mx + 1;
  }
  validate(labels);
  return labels;
}

// ---------------------------------------------------------------------------
// NIfTI-1

namespace {

constexpr std::size_t kNiftiHeaderBytes = 348;

template <typename T>
T byteswap_value(T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  std::reverse(buf, buf + sizeof(T));
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

struct NiftiReader {
  const std::vector<char>& bytes;
  bool swap = false;

  template <typename T>
  T get(std::size_t offset) const {
    const T v = load<T>(bytes, offset);
    return swap ? byteswap_value(v) : v;
  }
};

}  // namespace

Volume read_nifti1(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const auto where = " (" + path.string() + ")";
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
      static_cast<unsigned char>(bytes[1]) == 0x8b) {
    throw FormatError(FormatErrorCode::compressed, "gzip stream" + where);
  }
  if (bytes.size() < kNiftiHeaderBytes) {
    throw FormatError(FormatErrorCode::truncated, "short header" + where);
  }
  NiftiReader r{bytes};
  auto sizeof_hdr = r.get<std::int32_t>(0);
  if (sizeof_hdr != 348) {
    r.swap = true;
    sizeof_hdr = r.get<std::int32_t>(0);
    if (sizeof_hdr != 348) {
      throw FormatError(FormatErrorCode::bad_magic, "sizeof_hdr != 348" + where);
    }
  }
  const char* magic = bytes.data() + 344;
  if (std::memcmp(magic, "ni1\0", 4) == 0) {
    throw FormatError(FormatErrorCode::unsupported_variant,
                      "detached header/image pair" + where);
  }
  if (std::memcmp(magic, "n+1\0", 4) != 0) {
    throw FormatError(FormatErrorCode::bad_magic, "expected n+1" + where);
  }

  std::int16_t dim[8];
  for (int i = 0; i < 8; ++i) dim[i] = r.get<std::int16_t>(40 + 2 * i);
  if (dim[0] < 3 || dim[0] > 7) {
    throw FormatError(FormatErrorCode::unsupported_dims,
                      "dim[0]=" + std::to_string(dim[0]) + where);
  }
  for (int i = 1; i <= 3; ++i) {
    if (dim[i] < 1) {
      throw FormatError(FormatErrorCode::unsupported_dims,
                        "non-positive extent" + where);
    }
  }
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[i] > 1) {
      throw FormatError(FormatErrorCode::unsupported_dims,
                        "only single 3D volumes are supported" + where);
    }
  }

  const auto datatype = r.get<std::int16_t>(70);
  std::size_t elem = 0;
  switch (datatype) {
    case 2: elem = 1; break;    // uint8
    case 4: elem = 2; break;    // int16
    case 16: elem = 4; break;   // float32
    default:
      throw FormatError(FormatErrorCode::unsupported_datatype,
                        "datatype " + std::to_string(datatype) + where);
  }

  float pixdim[8];
  for (int i = 0; i < 8; ++i) pixdim[i] = r.get<float>(76 + 4 * i);
  const auto vox_offset = static_cast<std::size_t>(r.get<float>(108));
  const float slope = r.get<float>(112);
  const float inter = r.get<float>(116);

  // NIfTI stores i (x) fastest, which maps onto our W axis.
  const Extents ext{static_cast<std::size_t>(dim[3]),
                    static_cast<std::size_t>(dim[2]),
                    static_cast<std::size_t>(dim[1])};
  Spacing spacing{std::fabs(pixdim[3]), std::fabs(pixdim[2]),
                  std::fabs(pixdim[1])};
  for (auto& s : spacing) {
    if (!(s > 0.0f)) s = 1.0f;
  }
  const std::size_t offset = std::max(vox_offset, std::size_t{352});
  if (bytes.size() < offset + ext.voxels() * elem) {
    throw FormatError(FormatErrorCode::truncated,
                      "payload shorter than header declares" + where);
  }

  Volume v(ext, spacing);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    const std::size_t at = offset + i * elem;
    float value = 0.0f;
    switch (datatype) {
      case 2: value = static_cast<std::uint8_t>(bytes[at]); break;
      case 4: value = r.get<std::int16_t>(at); break;
      case 16: value = r.get<float>(at); break;
    }
    v.data[i] = slope != 0.0f ? slope * value + inter : value;
  }
  return v;
}

LabelMap read_nifti1_labels(const std::filesystem::path& path,
                            int num_classes) {
  const Volume v = read_nifti1(path);
  LabelMap labels{Grid<std::uint8_t>(v.extents, v.spacing), num_classes};
  int mx = 0;
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    const float f = v.data[i];
    if (f != std::round(f) || f < 0.0f || f > 255.0f) {
      throw FormatError(FormatErrorCode::unsupported_datatype,
                        "non-integral label value in " + path.string());
    }
    labels.grid.data[i] = static_cast<std::uint8_t>(f);
    mx = std::max(mx, static_cast<int>(f));
  }
  if (num_classes == 0) labels.num_classes = mx + 1;
  validate(labels);
  return labels;
}

Volume normalize_zscore(const Volume& volume) {
  const auto n = static_cast<double>(volume.data.size());
  if (volume.data.empty()) throw std::domain_error("empty volume");
  double mean = 0.0;
  for (float v : volume.data) mean += v;
  mean /= n;
  double var = 0.0;
  for (float v : volume.data) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) {
    throw std::domain_error("cannot z-score a constant volume (zero variance)");
  }
  const double inv = 1.0 / std::sqrt(var);
  Volume out = volume;
  for (auto& v : out.data) v = static_cast<float>((v - mean) * inv);
  return out;
}

}  // namespace canvolve
