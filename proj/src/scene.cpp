#include "tdi/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "tdi/camera.hpp"
#include "tdi/errors.hpp"
#include "tdi/rng.hpp"

namespace tdi {

std::size_t Silhouette::area() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

namespace {

constexpr int kMaskHeight = 64;
constexpr int kMaskWidth = 48;

struct Point {
  double x, y;
};

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double len2 = vx * vx + vy * vy;
  const double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
  const double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

struct Capsule {
  Point a, b;
  double radius;
};

// Angles measured from straight down; positive swings away from the body.
Point limb_end(Point from, double length, double angle, double side) {
  return {from.x + side * length * std::sin(angle), from.y + length * std::cos(angle)};
}

Silhouette make_figure(int id, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  constexpr double deg = std::numbers::pi / 180.0;

  // Figure coordinates: height 1, width kMaskWidth/kMaskHeight, y down.
  const double cx = 0.5 * kMaskWidth / kMaskHeight;
  const double head_r = range(0.055, 0.07);
  const Point head{cx + range(-0.01, 0.01), 0.13 - head_r};
  const double torso_w = range(0.15, 0.21);
  const double torso_top = 0.15, torso_bottom = range(0.48, 0.53);

  std::vector<Capsule> limbs;
  for (double side : {-1.0, 1.0}) {
    const Point shoulder{cx + side * (torso_w / 2 - 0.02), torso_top + 0.04};
    const double a1 = range(5.0, 70.0) * deg;
    const double a2 = a1 + range(-40.0, 50.0) * deg;
    const Point elbow = limb_end(shoulder, range(0.14, 0.17), a1, side);
    const Point wrist = limb_end(elbow, range(0.13, 0.16), a2, side);
    limbs.push_back({shoulder, elbow, 0.028});
    limbs.push_back({elbow, wrist, 0.025});

    const Point hip{cx + side * range(0.035, 0.06), torso_bottom - 0.02};
    const double l1 = range(-8.0, 30.0) * deg;
    const double l2 = l1 + range(-25.0, 20.0) * deg;
    const Point knee = limb_end(hip, range(0.21, 0.24), l1, side);
    const Point ankle = limb_end(knee, range(0.2, 0.23), l2, side);
    limbs.push_back({hip, knee, 0.04});
    limbs.push_back({knee, ankle, 0.032});
  }

  Silhouette s;
  s.id = id;
  s.width = kMaskWidth;
  s.height = kMaskHeight;
  s.native_height_m = range(1.5, 1.9);
  s.mask.assign(static_cast<std::size_t>(kMaskWidth) * kMaskHeight, 0);
  for (int r = 0; r < kMaskHeight; ++r) {
    for (int c = 0; c < kMaskWidth; ++c) {
      const Point p{(c + 0.5) / kMaskHeight, (r + 0.5) / kMaskHeight};
      bool in = std::hypot(p.x - head.x, p.y - head.y) <= head_r;
      in = in || (std::abs(p.x - cx) <= 0.035 && p.y >= head.y && p.y <= torso_top + 0.02);  // neck
      in = in || (std::abs(p.x - cx) <= torso_w / 2 && p.y >= torso_top && p.y <= torso_bottom);
      for (const auto& l : limbs) in = in || segment_distance(p, l.a, l.b) <= l.radius;
      s.mask[static_cast<std::size_t>(r) * kMaskWidth + c] = in ? 1 : 0;
    }
  }
  return s;
}

}  // namespace

std::vector<Silhouette> generate_silhouettes(int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("generate_silhouettes: count must be >= 1");
  std::vector<Silhouette> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto rng = make_rng(seed, Stream::Silhouette, static_cast<std::uint64_t>(i));
    out.push_back(make_figure(i, rng));
  }
  return out;
}

Silhouette read_silhouette_pgm(const std::filesystem::path& path, int id, double native_height_m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open silhouette " + path.string());
  auto token = [&]() {
    std::string t;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(ch);
    }
    return t;
  };
  if (token() != "P5") throw std::runtime_error(path.string() + ": not a binary graymap (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": malformed graymap header");
  }
  if (w < 1 || h < 1 || w > 16384 || h > 16384 || maxval < 1 || maxval > 255)
    throw std::runtime_error(path.string() + ": unsupported graymap dimensions or depth");
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h);
  if (!in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw std::runtime_error(path.string() + ": truncated graymap");

  Silhouette s;
  s.id = id;
  s.width = w;
  s.height = h;
  s.native_height_m = native_height_m;
  s.mask.resize(pixels.size());
  std::transform(pixels.begin(), pixels.end(), s.mask.begin(), [](std::uint8_t v) { return v >= 128 ? 1 : 0; });
  if (s.area() == 0) throw std::runtime_error(path.string() + ": mask has no foreground pixels");
  return s;
}

double scale_factor(double d) {
  if (!(d > 0.0)) throw DomainError("scale_factor: distance must be > 0");
  return 2.0 / d;
}

Background default_background(const SimConfig& cfg) {
  const double t = std::tan(cfg.fov_deg * std::numbers::pi / 360.0);
  Background bg;
  bg.wall_depth_m = cfg.wall_depth_m;
  // One floor-standing box per lateral third of the view, each covering most of its third.
  const double third = 2.0 * t / 3.0;
  // `shift` moves a box off the centre of its third, in units of the third's width.
  auto box = [&](int k, double depth, double height, double shift) {
    const double centre = -t + third * (k + 0.5 + shift);
    return Box{centre * depth, cfg.floor_y_m + height / 2.0, depth, 0.8 * third * depth, height, 1.0};
  };
  bg.objects = {box(0, 1.5, 0.55, 0.0), box(1, 2.5, 1.1, -0.1), box(2, 3.2, 1.6, 0.05)};
  for (auto& b : bg.objects) b.depth = std::min(b.depth, cfg.wall_depth_m);
  return bg;
}

Background uniform_background(double wall_depth_m) {
  Background bg;
  bg.wall_depth_m = wall_depth_m;
  bg.uniform = true;
  return bg;
}

DepthImage render(const Scene& scene, std::span<const Silhouette> library, const SimConfig& cfg) {
  if (!(cfg.fov_deg > 0.0)) throw DomainError("render: field of view must be > 0");
  if (cfg.img_w < 8 || cfg.img_h < 8) throw DomainError("render: resolution must be at least 8x8");
  const PinholeCamera cam(cfg.fov_deg, cfg.img_w, cfg.img_h);
  DepthImage img(cfg.img_w, cfg.img_h);

  struct Projected {
    const Silhouette* sil;
    double cx, cy, half_w, half_h, z, reflectivity;
    bool mirrored;
  };
  std::vector<Projected> figures;
  for (const auto& p : scene.placements) {
    if (p.silhouette_id < 0 || static_cast<std::size_t>(p.silhouette_id) >= library.size())
      throw DomainError("render: unknown silhouette id " + std::to_string(p.silhouette_id));
    if (!(p.z > 0.0)) throw DomainError("render: placement depth must be > 0");
    const Silhouette& s = library[static_cast<std::size_t>(p.silhouette_id)];
    const double d = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    // At d = 2 m the figure spans native_height/2 on the tangent plane; S scales it.
    const double half_h = 0.25 * s.native_height_m * scale_factor(d);
    const double half_w = half_h * s.width / s.height;
    figures.push_back({&s, p.x / p.z, p.y / p.z, half_w, half_h, p.z, p.reflectivity, p.mirrored});
  }

  const auto& bg = scene.background;
  for (int row = 0; row < img.height; ++row) {
    const double ty = cam.tangent_y(row);
    for (int col = 0; col < img.width; ++col) {
      const double tx = cam.tangent_x(col);
      double depth = bg.wall_depth_m;
      double refl = bg.wall_reflectivity;
      if (!bg.uniform) {
        for (const auto& b : bg.objects) {
          if (b.depth >= depth) continue;
          if (std::abs(tx - b.center_x / b.depth) <= 0.5 * b.width / b.depth &&
              std::abs(ty - b.center_y / b.depth) <= 0.5 * b.height / b.depth) {
            depth = b.depth;
            refl = b.reflectivity;
          }
        }
      }
      for (const auto& f : figures) {
        if (f.z >= depth) continue;
        double sx = (tx - f.cx) / f.half_w;
        if (f.mirrored) sx = -sx;
        const double sy = (f.cy - ty) / f.half_h;
        if (sx < -1.0 || sx >= 1.0 || sy < -1.0 || sy >= 1.0) continue;
        const int mc = std::min(f.sil->width - 1, static_cast<int>((sx + 1.0) * 0.5 * f.sil->width));
        const int mr = std::min(f.sil->height - 1, static_cast<int>((sy + 1.0) * 0.5 * f.sil->height));
        if (f.sil->at(mr, mc)) {
          depth = f.z;
          refl = f.reflectivity;
        }
      }
      const auto i = img.index(row, col);
      img.depth_m[i] = depth;
      img.reflectance[i] = refl;
    }
  }
  return img;
}

Scene mirror_placements(const Scene& scene) {
  Scene out = scene;
  for (auto& p : out.placements) {
    p.x = -p.x;
    p.mirrored = !p.mirrored;
  }
  return out;
}

std::vector<Scene> augment(std::span<const Silhouette> silhouettes, const Background& background,
                           const SimConfig& cfg) {
  if (silhouettes.empty()) throw DomainError("augment: silhouette list is empty");
  const double t = std::tan(cfg.fov_deg * std::numbers::pi / 360.0);
  auto grid = [](int n, double lo, double hi, int k) { return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (n - 1); };

  std::vector<Scene> scenes;
  scenes.reserve(silhouettes.size() * static_cast<std::size_t>(cfg.n_depths) * cfg.n_lateral * 2);
  for (const auto& s : silhouettes) {
    const double y = cfg.floor_y_m + 0.5 * s.native_height_m;
    for (int k = 0; k < cfg.n_depths; ++k) {
      const double z = cfg.n_depths == 1 ? cfg.z_min : grid(cfg.n_depths, cfg.z_min, cfg.z_max, k);
      for (int j = 0; j < cfg.n_lateral; ++j) {
        const double x = z * t * grid(cfg.n_lateral, -1.0, 1.0, j);
        for (bool mirrored : {false, true}) {
          double refl = cfg.reflectivity;
          if (cfg.varied_reflectivity()) {
            auto rng = make_rng(cfg.seed, Stream::Reflectivity, scenes.size());
            std::uniform_real_distribution<double> u(std::log(cfg.reflectivity_lo), std::log(cfg.reflectivity_hi));
            refl = std::exp(u(rng));
          }
          scenes.push_back({background, {{s.id, x, y, z, mirrored, refl}}});
        }
      }
    }
  }
  return scenes;
}

std::vector<float> normalize_image(const DepthImage& img, double z_max) {
  if (!(z_max > 0.0)) throw DomainError("normalize_image: z_max must be > 0");
  std::vector<float> out(img.depth_m.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = img.depth_m[i];
    if (d > z_max) throw DomainError("normalize_image: depth " + std::to_string(d) + " m exceeds z_max");
    out[i] = d > 0.0 ? static_cast<float>(d / z_max) : 0.0f;
  }
  return out;
}

}  // namespace tdi
