#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tdi/config.hpp"

namespace tdi {

/// Binary raster of a flat human-like figure. Row 0 is the top of the figure.
struct Silhouette {
  int id = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;  // row-major, 1 = object
  double native_height_m = 1.7;    // physical height; projects to S(d)·h/2 on the tangent plane

  bool at(int row, int col) const { return mask[static_cast<std::size_t>(row) * width + col] != 0; }
  std::size_t area() const;
};

struct Placement {
  int silhouette_id = 0;
  double x = 0.0;
  double y = 0.0;
  double z = 2.0;
  bool mirrored = false;
  double reflectivity = 1.0;

  bool operator==(const Placement&) const = default;
};

/// Flat rectangle facing the camera.
struct Box {
  double center_x = 0.0;
  double center_y = 0.0;
  double depth = 2.0;
  double width = 0.5;
  double height = 0.5;
  double reflectivity = 1.0;

  bool operator==(const Box&) const = default;
};

struct Background {
  double wall_depth_m = 4.0;
  double wall_reflectivity = 1.0;
  std::vector<Box> objects;
  bool uniform = false;  // ignore objects: empty room

  bool operator==(const Background&) const = default;
};

/// Back wall at 4 m plus three boxes at 1.5, 2.5 and 3.2 m in distinct lateral thirds.
Background default_background(const SimConfig& cfg);
Background uniform_background(double wall_depth_m);

struct Scene {
  Background background;
  std::vector<Placement> placements;

  bool operator==(const Scene&) const = default;
};

/// Per-pixel depth along the optical axis (0 = no return) with a parallel reflectance grid.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth_m;
  std::vector<double> reflectance;

  DepthImage() = default;
  DepthImage(int w, int h)
      : width(w), height(h), depth_m(static_cast<std::size_t>(w) * h, 0.0), reflectance(depth_m.size(), 0.0) {}

  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }
  double depth(int row, int col) const { return depth_m[index(row, col)]; }
};

/// Procedural figures: head disc, torso and two-segment limbs with seeded joint angles.
std::vector<Silhouette> generate_silhouettes(int count, std::uint64_t seed);

/// Binary 8-bit portable graymap; pixels >= 128 belong to the figure.
Silhouette read_silhouette_pgm(const std::filesystem::path& path, int id, double native_height_m);

/// Apparent size factor 2/d relative to a figure seen at 2 m.
double scale_factor(double d);

/// Rasterize a scene. `library[p.silhouette_id]` supplies each placement's mask.
DepthImage render(const Scene& scene, std::span<const Silhouette> library, const SimConfig& cfg);

/// Same scene seen in a horizontal mirror: every placement's x negated and mirror flag toggled.
/// The background is left untouched.
Scene mirror_placements(const Scene& scene);

/// Every silhouette at every depth x lateral position x {plain, mirrored}, in that nesting order.
/// Reflectivity is the configured ratio, or log-uniform per scene when a range is configured.
std::vector<Scene> augment(std::span<const Silhouette> silhouettes, const Background& background, const SimConfig& cfg);

/// Depth divided by z_max, flattened row-major; no-return pixels stay 0.
std::vector<float> normalize_image(const DepthImage& img, double z_max);

}  // namespace tdi
