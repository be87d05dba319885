#include "tdi/forward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "tdi/camera.hpp"
#include "tdi/errors.hpp"
#include "tdi/rng.hpp"

namespace tdi {

double Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

NoiseSpec noise_spec(int level) {
  static constexpr double kExpectation[] = {0.0, 0.032, 0.10, 0.33};
  if (level < 0 || level > 3) throw DomainError("noise level must be 0..3");
  return {level, kExpectation[level]};
}

double pixel_time(double x, double y, double z, TimeConvention convention) {
  const double r = std::sqrt(x * x + y * y + z * z);
  if (!(r > 0.0)) throw DomainError("pixel_time: zero-length position");
  return (convention == TimeConvention::RoundTrip ? 2.0 : 1.0) * r / kSpeedOfLight;
}

double pixel_photons(double d, double reflectivity, double p0) {
  if (!(d > 0.0)) throw DomainError("pixel_photons: distance must be > 0");
  const double d2 = d * d;
  return reflectivity * p0 / (d2 * d2);
}

Histogram simulate_histogram(const DepthImage& img, const SimConfig& cfg) {
  if (img.width != cfg.img_w || img.height != cfg.img_h)
    throw DomainError("simulate_histogram: image is " + std::to_string(img.width) + "x" +
                      std::to_string(img.height) + ", config expects " + std::to_string(cfg.img_w) + "x" +
                      std::to_string(cfg.img_h));
  const PinholeCamera cam(cfg.fov_deg, cfg.img_w, cfg.img_h);
  Histogram h;
  h.bin_width_s = cfg.effective_bin_width();
  h.counts.assign(static_cast<std::size_t>(cfg.bins), 0.0);
  const double span = h.bin_width_s * cfg.bins;

  struct Hit {
    std::size_t bin;
    double photons;
    auto operator<=>(const Hit&) const = default;
  };
  std::vector<Hit> hits;
  hits.reserve(img.depth_m.size());
  for (int row = 0; row < img.height; ++row) {
    const double ty = cam.tangent_y(row);
    for (int col = 0; col < img.width; ++col) {
      const double z = img.depth(row, col);
      if (z <= 0.0) continue;
      const double x = z * cam.tangent_x(col);
      const double y = z * ty;
      const double t = pixel_time(x, y, z, cfg.time_convention);
      if (t >= span) {
        std::ostringstream msg;
        msg << "surface at depth " << z << " m (pixel " << row << "," << col << ") arrives at " << t
            << " s, beyond the histogram span of " << span << " s";
        throw SpanError(msg.str());
      }
      const double r = std::sqrt(x * x + y * y + z * z);
      hits.push_back({static_cast<std::size_t>(t / h.bin_width_s), pixel_photons(r, img.reflectance[img.index(row, col)], cfg.p0)});
    }
  }
  // Sorting fixes the summation order per bin.
  std::sort(hits.begin(), hits.end());
  for (const auto& hit : hits) h.counts[hit.bin] += hit.photons;
  return h;
}

Histogram convolve_irf(const Histogram& h, double dt_s) {
  if (dt_s < 0.0) throw DomainError("convolve_irf: width must be >= 0");
  if (dt_s == 0.0) return h;
  const auto radius = static_cast<std::ptrdiff_t>(std::floor(4.0 * dt_s / h.bin_width_s));
  if (radius == 0) return h;
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double t = static_cast<double>(k) * h.bin_width_s / dt_s;
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-t * t);
  }
  const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& g : kernel) g /= norm;

  Histogram out = h;
  std::fill(out.counts.begin(), out.counts.end(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(h.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double c = h.counts[static_cast<std::size_t>(i)];
    if (c == 0.0) continue;
    const auto lo = std::max<std::ptrdiff_t>(-radius, -i);
    const auto hi = std::min<std::ptrdiff_t>(radius, n - 1 - i);
    for (auto k = lo; k <= hi; ++k) out.counts[static_cast<std::size_t>(i + k)] += c * kernel[static_cast<std::size_t>(k + radius)];
  }
  return out;
}

NoiseCalibration calibrate_noise(const Histogram& h, double f) {
  std::vector<double> nonzero;
  for (double c : h.counts)
    if (c > 0.0) nonzero.push_back(c);
  if (f <= 0.0 || nonzero.empty()) return {};
  const double mean = std::accumulate(nonzero.begin(), nonzero.end(), 0.0) / static_cast<double>(nonzero.size());
  const double target = f * mean;
  const double mad = std::sqrt(2.0 / std::numbers::pi);  // E|N(0,1)|
  const double sigma = 0.5 * target / mad;

  // Expected |perturbation| with Poisson variance b·u (u = 1/scale) plus sigma², Gaussian approximation.
  auto expected = [&](double u) {
    double acc = 0.0;
    for (double b : nonzero) acc += mad * std::sqrt(b * u + sigma * sigma);
    return acc / static_cast<double>(nonzero.size());
  };
  double lo = 0.0, hi = 1.0 / mean;
  while (expected(hi) < target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected(mid) < target ? lo : hi) = mid;
  }
  return {1.0 / hi, sigma};
}

Histogram add_noise(const Histogram& h, const NoiseSpec& spec, std::uint64_t seed) {
  if (spec.level == 0 || spec.fractional_expectation <= 0.0) return h;
  const auto cal = calibrate_noise(h, spec.fractional_expectation);
  auto rng = make_rng(seed, Stream::Noise);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Histogram out = h;
  for (auto& c : out.counts) {
    double v = c;
    if (cal.poisson_scale > 0.0 && c > 0.0) {
      std::poisson_distribution<long long> shot(cal.poisson_scale * c);
      v = static_cast<double>(shot(rng)) / cal.poisson_scale;
    }
    v += cal.sigma * gauss(rng);
    c = std::max(0.0, v);
  }
  return out;
}

std::vector<float> normalize_histogram(const Histogram& h) {
  const double peak = h.counts.empty() ? 0.0 : *std::max_element(h.counts.begin(), h.counts.end());
  std::vector<float> out(h.size(), 0.0f);
  if (peak > 0.0)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(h.counts[i] / peak);
  return out;
}

Histogram forward_model(const DepthImage& img, const SimConfig& cfg, std::uint64_t noise_seed) {
  auto h = simulate_histogram(img, cfg);
  h = convolve_irf(h, cfg.irf_dt_s);
  return add_noise(h, noise_spec(cfg.noise_level), noise_seed);
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.imbue(std::locale::classic());
  out.precision(17);
  out << "bin_start_s,count\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    out << h.t0_s + static_cast<double>(i) * h.bin_width_s << ',' << h.counts[i] << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Histogram read_histogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  in.imbue(std::locale::classic());
  std::string line;
  if (!std::getline(in, line) || line.rfind("bin_start_s,count", 0) != 0)
    throw std::runtime_error(path.string() + ": expected header 'bin_start_s,count'");
  Histogram h;
  std::vector<double> starts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    row.imbue(std::locale::classic());
    double t = 0.0, c = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> c) || comma != ',' || !std::isfinite(c) || c < 0.0)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    starts.push_back(t);
    h.counts.push_back(c);
  }
  if (h.counts.size() < 2) throw std::runtime_error(path.string() + ": need at least two bins");
  h.t0_s = starts.front();
  h.bin_width_s = starts[1] - starts[0];
  if (!(h.bin_width_s > 0.0)) throw std::runtime_error(path.string() + ": bin starts must increase");
  return h;
}

}  // namespace tdi
