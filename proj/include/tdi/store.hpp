#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>

#include "tdi/dataset.hpp"
#include "tdi/metrics.hpp"
#include "tdi/mlp.hpp"

namespace tdi {

// Dataset file ("TDID"), little-endian:
//   magic[4] | version u32 | bins u32 | img_w u32 | img_h u32 | N u32
//   N x { bins x f32 histogram | img_w·img_h x f32 image }
// Model file ("TDIM"), little-endian:
//   magic[4] | version u32 | layer count L u32 | L+1 dims u32
//   L x { weights f32 row-major (fan_out x fan_in) | biases f32 }
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 24;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};
class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};
/// Header dimensions disagree with the payload (or with each other).
class ShapeMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};
class InvalidValueError : public FormatError {
 public:
  using FormatError::FormatError;
};
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

void write_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel read_model(const std::filesystem::path& path);

/// 16-bit binary graymap, value = round(v·65535) for v in [0,1].
void export_depth_pgm(std::span<const float> normalized, int width, int height, const std::filesystem::path& path);

/// 8-bit binary graymap of an SSIM map, [-1,1] mapped affinely onto [0,255].
void export_ssim_pgm(const SsimResult& r, const std::filesystem::path& path);
/// One row per image row, comma-separated.
void export_ssim_csv(const SsimResult& r, const std::filesystem::path& path);

/// Write `bytes` to `path` through a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace tdi
