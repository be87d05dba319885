#pragma once

#include <span>
#include <vector>

namespace tdi {

/// Structural similarity constants: 11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03, L 1.
struct SsimParams {
  static constexpr int kRadius = 5;
  static constexpr double kSigma = 1.5;
  static constexpr double kK1 = 0.01;
  static constexpr double kK2 = 0.03;
  static constexpr double kDynamicRange = 1.0;
};

struct SsimResult {
  int width = 0;
  int height = 0;
  std::vector<double> map;  // row-major, values in [-1, 1]
  double mean = 0.0;
};

/// Windowed SSIM of two normalized images with symmetric edge padding; the map matches the image size.
SsimResult ssim(std::span<const float> a, std::span<const float> b, int width, int height);

/// Normalized 1-D Gaussian window taps (length 2·kRadius+1).
std::vector<double> ssim_window();

/// Index into [0, n) with symmetric (edge-repeating) reflection.
int reflect_index(int i, int n);

struct ImagePair {
  std::span<const float> prediction;
  std::span<const float> truth;
};

struct BatchSsim {
  std::vector<double> means;  // per pair, input order
  double overall = 0.0;
};
BatchSsim batch_ssim(std::span<const ImagePair> pairs, int width, int height);

/// Smallest transverse separation resolvable at range d with timing resolution dt:
/// c·dt·sqrt(2d/(c·dt) + 1), i.e. sqrt((d + c·dt)² - d²).
double lateral_resolution(double d, double dt);

/// Axial resolution c·dt.
double depth_resolution(double dt);

}  // namespace tdi
