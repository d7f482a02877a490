#include "doctest.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>

#include "canvolve/volio.hpp"
#include "golden_nifti.hpp"
#include "temp_dir.hpp"

using namespace canvolve;

namespace {

FormatErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.code();
  }
  FAIL("expected FormatError");
  return FormatErrorCode::io;
}

Volume random_volume(Extents e, Spacing s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(3.0f, 2.0f);
  Volume v(e, s);
  for (auto& x : v.data) x = n(rng);
  return v;
}

}  // namespace

TEST_CASE("grid indexing is W-fastest") {
  Extents e{2, 3, 4};
  CHECK(e.voxels() == 24);
  CHECK(e.index(0, 0, 1) == 1);
  CHECK(e.index(0, 1, 0) == 4);
  CHECK(e.index(1, 0, 0) == 12);
  CHECK(e.contains(1, 2, 3));
  CHECK_FALSE(e.contains(2, 0, 0));
  CHECK_FALSE(e.contains(0, -1, 0));
}

TEST_CASE("label validation and class masks") {
  LabelMap l{Grid<std::uint8_t>({1, 1, 4}, {1, 1, 1}), 3};
  l.grid.data = {0, 1, 2, 1};
  CHECK_NOTHROW(validate(l));
  const Mask m = class_mask(l, 1);
  CHECK(m.data == std::vector<std::uint8_t>{0, 1, 0, 1});
  CHECK(count_foreground(m) == 2);
  l.grid.data[0] = 3;
  CHECK_THROWS_AS(validate(l), std::invalid_argument);
  CHECK_THROWS_AS(require_same_grid({1, 2, 3}, {1, 2, 4}, "x"), GridMismatch);
}

TEST_CASE("VOL3D volume round trip is bit-identical") {
  testing::TempDir dir("vol3d");
  const Volume v = random_volume({5, 6, 7}, {1.6f, 1.6f, 1.6f}, 4);
  write_vol3d(v, dir / "a.vol3d");
  const Volume r = read_vol3d_volume(dir / "a.vol3d");
  CHECK(r.extents == v.extents);
  CHECK(r.spacing == v.spacing);
  CHECK(std::memcmp(r.data.data(), v.data.data(), v.data.size() * sizeof(float)) == 0);
  CHECK(peek_vol3d_dtype(dir / "a.vol3d") == Vol3dDtype::f32);
  CHECK(std::filesystem::file_size(dir / "a.vol3d") == kVol3dHeaderBytes + 5 * 6 * 7 * 4);
}

TEST_CASE("VOL3D label round trip keeps spacing and class count") {
  testing::TempDir dir("vol3d");
  LabelMap l{Grid<std::uint8_t>({3, 4, 5}, {0.5f, 1.25f, 3.0f}), 4};
  for (std::size_t i = 0; i < l.grid.data.size(); ++i) l.grid.data[i] = static_cast<std::uint8_t>(i % 4);
  write_vol3d(l, dir / "l.vol3d");
  const LabelMap r = read_vol3d_labels(dir / "l.vol3d", 4);
  CHECK(r.grid.data == l.grid.data);
  CHECK(r.spacing() == l.spacing());
  CHECK(r.num_classes == 4);
  CHECK(read_vol3d_labels(dir / "l.vol3d").num_classes == 4);
  CHECK(peek_vol3d_dtype(dir / "l.vol3d") == Vol3dDtype::u8);
  CHECK_THROWS_AS(read_vol3d_labels(dir / "l.vol3d", 3), std::invalid_argument);

  // A label file read as a volume widens to float.
  const Volume asv = read_vol3d_volume(dir / "l.vol3d");
  CHECK(asv.data[3] == 3.0f);
  // A float file is not a label map.
  write_vol3d(random_volume({2, 2, 2}, {1, 1, 1}, 1), dir / "f.vol3d");
  CHECK(code_of([&] { read_vol3d_labels(dir / "f.vol3d"); }) == FormatErrorCode::wrong_kind);
}

TEST_CASE("VOL3D malformed files produce distinct errors") {
  testing::TempDir dir("vol3d");
  const Volume v = random_volume({4, 4, 4}, {1, 1, 1}, 2);
  const auto good = dir / "good.vol3d";
  write_vol3d(v, good);
  std::string bytes;
  {
    std::ifstream f(good, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), {});
  }
  auto write_variant = [&](const std::string& name, std::string b) {
    std::ofstream f(dir / name, std::ios::binary);
    f.write(b.data(), static_cast<std::streamsize>(b.size()));
    return dir / name;
  };

  auto truncated = write_variant("trunc.vol3d", bytes.substr(0, bytes.size() - 1));
  CHECK(code_of([&] { read_vol3d_volume(truncated); }) == FormatErrorCode::truncated);

  auto short_header = write_variant("short.vol3d", bytes.substr(0, 10));
  CHECK(code_of([&] { read_vol3d_volume(short_header); }) == FormatErrorCode::truncated);

  std::string b = bytes;
  b[0] = 'X';
  auto magic = write_variant("magic.vol3d", b);
  CHECK(code_of([&] { read_vol3d_volume(magic); }) == FormatErrorCode::bad_magic);

  b = bytes;
  b[4] = 9;
  auto version = write_variant("version.vol3d", b);
  CHECK(code_of([&] { read_vol3d_volume(version); }) == FormatErrorCode::bad_version);

  b = bytes;
  b[6] = 7;
  auto dtype = write_variant("dtype.vol3d", b);
  CHECK(code_of([&] { read_vol3d_volume(dtype); }) == FormatErrorCode::bad_dtype);

  // Header claims more voxels than the file holds.
  b = bytes;
  b[8] = 5;
  auto big = write_variant("big.vol3d", b);
  CHECK(code_of([&] { read_vol3d_volume(big); }) == FormatErrorCode::truncated);

  CHECK(code_of([&] { read_vol3d_volume(dir / "missing.vol3d"); }) == FormatErrorCode::io);
}

TEST_CASE("NIfTI golden float32 cube reads in header order") {
  testing::TempDir dir("nii");
  golden::write_file(dir / "a.nii", golden::float_cube());
  const Volume v = read_nifti1(dir / "a.nii");
  CHECK(v.extents == Extents{2, 2, 2});
  CHECK(v.spacing == Spacing{1.0f, 1.0f, 1.0f});
  for (std::size_t i = 0; i < 8; ++i) CHECK(v.data[i] == 0.5f * static_cast<float>(i + 1));
  // File index i = x + 2y + 4z; (z=1, y=0, x=1) is file index 5.
  CHECK(v.at(1, 0, 1) == 3.0f);
}

TEST_CASE("NIfTI golden int16 applies scl_slope and scl_inter") {
  testing::TempDir dir("nii");
  golden::write_file(dir / "b.nii", golden::scaled_int16());
  const Volume v = read_nifti1(dir / "b.nii");
  CHECK(v.extents == Extents{2, 2, 3});
  for (std::size_t i = 0; i < 12; ++i) {
    const float raw = static_cast<float>(static_cast<int>(i) - 6);
    CHECK(v.data[i] == 2.0f * raw + 1.0f);
  }
}

TEST_CASE("NIfTI golden uint8 labels keep anisotropic spacing") {
  testing::TempDir dir("nii");
  golden::write_file(dir / "c.nii", golden::anisotropic_labels());
  const LabelMap l = read_nifti1_labels(dir / "c.nii");
  CHECK(l.extents() == Extents{2, 3, 4});
  CHECK(l.spacing() == Spacing{2.5f, 0.9f, 0.8f});
  CHECK(l.num_classes == 3);
  for (std::size_t i = 0; i < 24; ++i) CHECK(l.grid.data[i] == i % 3);
}

TEST_CASE("NIfTI big-endian header is byte-swapped") {
  testing::TempDir dir("nii");
  golden::NiftiSpec s;
  s.big_endian = true;
  std::vector<float> vals{1, 2, 3, 4, 5, 6, 7, 8};
  golden::write_file(dir / "be.nii", golden::nifti_bytes(s, golden::le_payload(vals, true)));
  const Volume v = read_nifti1(dir / "be.nii");
  for (std::size_t i = 0; i < 8; ++i) CHECK(v.data[i] == vals[i]);
}

TEST_CASE("NIfTI malformed headers produce distinct errors") {
  testing::TempDir dir("nii");
  auto write = [&](const std::string& name, const std::vector<unsigned char>& b) {
    golden::write_file(dir / name, b);
    return dir / name;
  };
  auto bytes = golden::float_cube();

  golden::NiftiSpec detached;
  detached.magic = std::string("ni1\0", 4);
  auto p = write("ni1.nii", golden::nifti_bytes(detached, golden::le_payload(std::vector<float>(8, 1))));
  CHECK(code_of([&] { read_nifti1(p); }) == FormatErrorCode::unsupported_variant);

  auto bad_magic = bytes;
  bad_magic[345] = 'X';
  p = write("magic.nii", bad_magic);
  CHECK(code_of([&] { read_nifti1(p); }) == FormatErrorCode::bad_magic);

  auto bad_size = bytes;
  bad_size[0] = 0;
  p = write("size.nii", bad_size);
  CHECK(code_of([&] { read_nifti1(p); }) == FormatErrorCode::bad_magic);

  p = write("trunc.nii", std::vector<unsigned char>(bytes.begin(), bytes.end() - 1));
  CHECK(code_of([&] { read_nifti1(p); }) == FormatErrorCode::truncated);

  p = write("short.nii", std::vector<unsigned char>(bytes.begin(), bytes.begin() + 100));
  CHECK(code_of([&] { read_nifti1(p); }) == FormatErrorCode::truncated);

  golden::NiftiSpec f64;
  f64.datatype = 64;
  f64.bitpix = 64;
  p = write("f64.nii", golden::nifti_bytes(f64, golden::le_payload(std::vector<double>(8, 1))));
  CHECK(code_of([&] { read_nifti1(p); }) == FormatErrorCode::unsupported_datatype);

  golden::NiftiSpec two_d;
  two_d.dim0 = 2;
  p = write("2d.nii", golden::nifti_bytes(two_d, golden::le_payload(std::vector<float>(8, 1))));
  CHECK(code_of([&] { read_nifti1(p); }) == FormatErrorCode::unsupported_dims);

  p = write("gz.nii.gz", {0x1f, 0x8b, 0x08, 0x00});
  CHECK(code_of([&] { read_nifti1(p); }) == FormatErrorCode::compressed);
}

TEST_CASE("z-score normalization") {
  const Volume v = random_volume({6, 5, 4}, {1, 1, 1}, 9);
  const Volume n = normalize_zscore(v);
  double mean = 0, var = 0;
  for (float x : n.data) mean += x;
  mean /= static_cast<double>(n.size());
  for (float x : n.data) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n.size());
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(var - 1.0) < 1e-5);

  const Volume again = normalize_zscore(n);
  for (std::size_t i = 0; i < n.size(); ++i) CHECK(std::abs(again.data[i] - n.data[i]) < 1e-6);

  Volume affine = v;
  for (auto& x : affine.data) x = 2.5f * x + 7.0f;
  const Volume na = normalize_zscore(affine);
  for (std::size_t i = 0; i < n.size(); ++i) CHECK(std::abs(na.data[i] - n.data[i]) < 1e-5);

  Volume flat({2, 2, 2}, {1, 1, 1}, 3.0f);
  CHECK_THROWS_AS(normalize_zscore(flat), std::domain_error);
}
