#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tdi/config.hpp"
#include "tdi/scene.hpp"

namespace tdi {

/// Photon counts in fixed-width time bins; bin k covers [t0 + k·w, t0 + (k+1)·w).
struct Histogram {
  double bin_width_s = 0.0;
  double t0_s = 0.0;
  std::vector<double> counts;

  std::size_t size() const { return counts.size(); }
  double total() const;
};

struct NoiseSpec {
  int level = 0;
  double fractional_expectation = 0.0;
};

/// Levels 0-3 carry expected relative perturbations of 0, 3.2%, 10% and 33%.
NoiseSpec noise_spec(int level);

double pixel_time(double x, double y, double z, TimeConvention convention);

/// Expected photons returned by a surface element at range d: reflectivity·P0/d⁴.
double pixel_photons(double d, double reflectivity, double p0);

/// Noiseless expected-count histogram of a depth image.
/// Per-bin sums are independent of pixel order, so an image and its exact
/// horizontal flip produce bit-identical histograms.
Histogram simulate_histogram(const DepthImage& img, const SimConfig& cfg);

/// Convolution with exp(-t²/dt²), sampled every bin, truncated at ±4·dt and normalised to unit sum.
Histogram convolve_irf(const Histogram& h, double dt_s);

/// Shot-noise scale and read-noise width chosen so the mean absolute
/// perturbation of nonzero bins is fractional_expectation · mean(nonzero bins).
/// The Gaussian term alone accounts for half of that target; the Poisson
/// scale supplies the rest.
struct NoiseCalibration {
  double poisson_scale = 0.0;  // counts are drawn as Poisson(scale·b)/scale; 0 disables
  double sigma = 0.0;
};
NoiseCalibration calibrate_noise(const Histogram& h, double fractional_expectation);

Histogram add_noise(const Histogram& h, const NoiseSpec& spec, std::uint64_t seed);

/// Counts divided by the maximum count; all-zero stays all-zero.
std::vector<float> normalize_histogram(const Histogram& h);

/// Full per-pair forward chain: render -> histogram -> IRF -> noise.
Histogram forward_model(const DepthImage& img, const SimConfig& cfg, std::uint64_t noise_seed);

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path);
Histogram read_histogram_csv(const std::filesystem::path& path);

}  // namespace tdi
