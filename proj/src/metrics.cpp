#include "tdi/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tdi/config.hpp"
#include "tdi/errors.hpp"

namespace tdi {

std::vector<double> ssim_window() {
  std::vector<double> w(2 * SsimParams::kRadius + 1);
  for (int k = -SsimParams::kRadius; k <= SsimParams::kRadius; ++k)
    w[static_cast<std::size_t>(k + SsimParams::kRadius)] = std::exp(-0.5 * k * k / (SsimParams::kSigma * SsimParams::kSigma));
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= sum;
  return w;
}

int reflect_index(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

namespace {

// Separable blur with symmetric padding.
std::vector<double> blur(const std::vector<double>& img, int w, int h, const std::vector<double>& win) {
  const int r = SsimParams::kRadius;
  std::vector<double> tmp(img.size()), out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += win[static_cast<std::size_t>(k + r)] * img[static_cast<std::size_t>(y) * w + reflect_index(x + k, w)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += win[static_cast<std::size_t>(k + r)] * tmp[static_cast<std::size_t>(reflect_index(y + k, h)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  return out;
}

}  // namespace

SsimResult ssim(std::span<const float> a, std::span<const float> b, int width, int height) {
  if (width < 1 || height < 1) throw DomainError("ssim: image dimensions must be positive");
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (a.size() != n || b.size() != n)
    throw DomainError("ssim: expected two " + std::to_string(width) + "x" + std::to_string(height) + " images");

  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end()), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto win = ssim_window();
  const auto mx = blur(x, width, height, win), my = blur(y, width, height, win);
  const auto exx = blur(xx, width, height, win), eyy = blur(yy, width, height, win), exy = blur(xy, width, height, win);

  const double c1 = std::pow(SsimParams::kK1 * SsimParams::kDynamicRange, 2);
  const double c2 = std::pow(SsimParams::kK2 * SsimParams::kDynamicRange, 2);
  SsimResult r;
  r.width = width;
  r.height = height;
  r.map.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vx = exx[i] - mx[i] * mx[i];
    const double vy = eyy[i] - my[i] * my[i];
    const double cov = exy[i] - mx[i] * my[i];
    r.map[i] = ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  r.mean = std::accumulate(r.map.begin(), r.map.end(), 0.0) / static_cast<double>(n);
  return r;
}

BatchSsim batch_ssim(std::span<const ImagePair> pairs, int width, int height) {
  if (pairs.empty()) throw DomainError("batch_ssim: no pairs");
  BatchSsim out;
  out.means.reserve(pairs.size());
  for (const auto& p : pairs) out.means.push_back(ssim(p.prediction, p.truth, width, height).mean);
  out.overall = std::accumulate(out.means.begin(), out.means.end(), 0.0) / static_cast<double>(out.means.size());
  return out;
}

double lateral_resolution(double d, double dt) {
  if (!(dt > 0.0)) throw DomainError("lateral_resolution: dt must be > 0");
  if (!(d >= 0.0)) throw DomainError("lateral_resolution: distance must be >= 0");
  const double cdt = kSpeedOfLight * dt;
  return cdt * std::sqrt(2.0 * d / cdt + 1.0);
}

double depth_resolution(double dt) {
  if (!(dt > 0.0)) throw DomainError("depth_resolution: dt must be > 0");
  return kSpeedOfLight * dt;
}

}  // namespace tdi
