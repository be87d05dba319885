#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace tdi {

/// Pairs of (normalized histogram, normalized depth image), stored contiguously.
struct Dataset {
  std::uint32_t bins = 0;
  std::uint32_t img_w = 0;
  std::uint32_t img_h = 0;
  std::vector<float> histograms;  // size() x bins
  std::vector<float> images;      // size() x pixels()

  Dataset() = default;
  Dataset(std::uint32_t b, std::uint32_t w, std::uint32_t h) : bins(b), img_w(w), img_h(h) {}

  std::size_t pixels() const { return static_cast<std::size_t>(img_w) * img_h; }
  std::size_t size() const { return bins == 0 ? 0 : histograms.size() / bins; }
  bool empty() const { return size() == 0; }

  std::span<const float> histogram(std::size_t i) const { return {histograms.data() + i * bins, bins}; }
  std::span<const float> image(std::size_t i) const { return {images.data() + i * pixels(), pixels()}; }

  void push_back(std::span<const float> h, std::span<const float> img) {
    if (h.size() != bins || img.size() != pixels()) throw std::invalid_argument("Dataset::push_back: record shape mismatch");
    histograms.insert(histograms.end(), h.begin(), h.end());
    images.insert(images.end(), img.begin(), img.end());
  }

  /// Records [first, last).
  Dataset slice(std::size_t first, std::size_t last) const {
    Dataset out(bins, img_w, img_h);
    out.histograms.assign(histograms.begin() + static_cast<std::ptrdiff_t>(first * bins),
                          histograms.begin() + static_cast<std::ptrdiff_t>(last * bins));
    out.images.assign(images.begin() + static_cast<std::ptrdiff_t>(first * pixels()),
                      images.begin() + static_cast<std::ptrdiff_t>(last * pixels()));
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

}  // namespace tdi
