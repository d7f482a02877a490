#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "canvolve/grid.hpp"

namespace canvolve {

enum class FormatErrorCode {
  io,
  bad_magic,
  bad_version,
  bad_dtype,
  truncated,
  bad_header,
  wrong_kind,
  unsupported_variant,
  compressed,
  unsupported_datatype,
  unsupported_dims,
  checksum,
};

const char* to_string(FormatErrorCode code);

/// Raised by every volume reader/writer; `code()` distinguishes the failure.
class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}
  FormatErrorCode code() const { return code_; }

 private:
  FormatErrorCode code_;
};

// VOL3D: little-endian "VOL3", u16 version, u8 dtype (0=f32, 1=u8 labels),
// u8 reserved, 3 x u32 extents (D,H,W), 3 x f32 spacing, W-fastest payload.
inline constexpr std::uint16_t kVol3dVersion = 1;
inline constexpr std::size_t kVol3dHeaderBytes = 4 + 2 + 1 + 1 + 12 + 12;

enum class Vol3dDtype : std::uint8_t { f32 = 0, u8 = 1 };

void write_vol3d(const Volume& volume, const std::filesystem::path& path);
void write_vol3d(const LabelMap& labels, const std::filesystem::path& path);

/// Reads either dtype; u8 payloads are widened to float.
Volume read_vol3d_volume(const std::filesystem::path& path);

/// Reads a u8 label file. With num_classes == 0 the class count is inferred
/// as max label + 1.
LabelMap read_vol3d_labels(const std::filesystem::path& path,
                           int num_classes = 0);

Vol3dDtype peek_vol3d_dtype(const std::filesystem::path& path);

/// Single-file uncompressed NIfTI-1 ("n+1\0"), datatypes uint8/int16/float32.
/// scl_slope/scl_inter are applied when scl_slope is nonzero.
Volume read_nifti1(const std::filesystem::path& path);

/// NIfTI-1 label image; values must be integral and within range.
LabelMap read_nifti1_labels(const std::filesystem::path& path,
                            int num_classes = 0);

/// Zero-mean, unit-variance intensity normalization.
/// Throws std::domain_error for a constant volume.
Volume normalize_zscore(const Volume& volume);

}  // namespace canvolve
