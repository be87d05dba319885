#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tdi {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Bin width used by the idealised single-photon simulations (also their IRF).
inline constexpr double kPaperBinWidthS = 2.3e-12;

enum class TimeConvention { RoundTrip, OneWay };
enum class BackgroundKind { Structured, Uniform };

std::string to_string(TimeConvention c);
std::string to_string(BackgroundKind b);

/// Everything that shapes scene synthesis and the forward model.
struct SimConfig {
  double fov_deg = 52.0;  // full horizontal angle
  int img_w = 64;
  int img_h = 64;
  double z_min = 1.0;
  double z_max = 4.0;
  int bins = 8000;
  double bin_width_s = 0.0;  // 0 = derive from span coverage
  double margin_m = 1.0;
  double p0 = 1.0;
  TimeConvention time_convention = TimeConvention::RoundTrip;
  double irf_dt_s = 0.0;
  int noise_level = 0;
  std::uint64_t seed = 0;

  // augmentation
  int silhouettes = 10;
  int n_depths = 10;
  int n_lateral = 20;
  double floor_y_m = -1.0;
  BackgroundKind background = BackgroundKind::Structured;
  double wall_depth_m = 4.0;
  double reflectivity = 1.0;      // fixed silhouette/background ratio
  double reflectivity_lo = 0.0;   // lo < hi enables log-uniform sampling
  double reflectivity_hi = 0.0;

  /// Bin width actually used: explicit value, or the smallest one whose span
  /// covers z_max + margin under the configured time convention.
  double effective_bin_width() const;
  bool varied_reflectivity() const { return reflectivity_lo > 0.0 && reflectivity_hi > reflectivity_lo; }
  void validate() const;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int batch_size = 64;
  int epochs = 200;
  double validation_fraction = 0.07;
  AdamConfig adam;
  std::vector<int> hidden = {1024, 512, 256};
  std::uint64_t seed = 0;
  bool deterministic = false;

  void validate() const;
};

enum class Preset { Desk, Paper };

/// Sizes for a named preset. Desk: 32x32 images, 2000 bins, 2000 pairs, 50 epochs.
struct PresetValues {
  SimConfig sim;
  TrainConfig train;
  int count;
};
PresetValues preset(Preset p);
Preset parse_preset(const std::string& name);

/// Parsed `key = value` file; `#` starts a comment.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(const std::string& text);

/// Apply known keys; unknown keys raise ConfigError.
void apply(const KeyValues& kv, SimConfig& sim, TrainConfig& train, int* count = nullptr);

/// Flat key/value view of a resolved configuration (manifest material).
KeyValues to_key_values(const SimConfig& sim);
KeyValues to_key_values(const TrainConfig& train);

}  // namespace tdi
