#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdi/config.hpp"
#include "tdi/dataset.hpp"
#include "tdi/metrics.hpp"
#include "tdi/mlp.hpp"
#include "tdi/scene.hpp"

namespace tdi {

inline constexpr const char* kToolVersion = "0.1.0";

using LogFn = std::function<void(const std::string&)>;

/// Scenes a dataset of `total` pairs is drawn from: the augmentation of
/// max(cfg.silhouettes, ceil(total / scenes-per-silhouette)) figures, in a seeded
/// order that depends only on (seed, total, geometry), never on IRF, noise or reflectivity.
struct ScenePool {
  std::vector<Silhouette> silhouettes;
  std::vector<Scene> scenes;  // already in selection order, size >= total
};
ScenePool make_scene_pool(const SimConfig& cfg, int total);

/// Records [first, last) of the `total`-pair dataset for `cfg`.
/// Record k is rendered from pool scene k with noise seed cfg.seed + k.
Dataset generate_dataset(const SimConfig& cfg, int total, int first, int last, const LogFn& log = {});
inline Dataset generate_dataset(const SimConfig& cfg, int count) { return generate_dataset(cfg, count, 0, count); }

struct Evaluation {
  std::vector<double> ssim;  // per pair
  double mean = 0.0;
};
Evaluation evaluate(const MlpModel& model, const Dataset& data);

enum class SweepKind { Irf, Noise, DatasetSize, Reflectivity };
SweepKind parse_sweep_kind(const std::string& s);
std::string to_string(SweepKind k);

struct SweepOptions {
  SweepKind kind = SweepKind::Irf;
  SimConfig sim;
  TrainConfig train;
  int n_train = 1800;
  int n_test = 200;
  std::vector<double> points;  // empty = default grid for the kind
  bool fixed_training = true;   // reflectivity: train at R = 1
  bool varied_training = true;  // reflectivity: train over R in [0.25, 4]
};

/// Default grids: IRF {2.3, 25, 250, 1000} ps; noise {0..3}; N {500, 1000, 2000, 4000}; R {0.5, 1, 1.5, 2}.
std::vector<double> default_sweep_points(SweepKind k);

struct SweepPoint {
  std::string label;
  bool ok = false;
  double mean_ssim = 0.0;
  std::string error;
};

/// Retrains from scratch at each point, except the noise study which trains once
/// on noiseless data and evaluates noisy test sets.
std::vector<SweepPoint> run_sweep(const SweepOptions& opt, const LogFn& log = {});
void write_sweep_csv(const std::vector<SweepPoint>& points, const std::filesystem::path& path);

// --- command layer: each writes its artifacts plus manifest.json into `out` ---

struct Manifest {
  std::string command;
  std::optional<SimConfig> sim;
  std::optional<TrainConfig> train;
  std::vector<std::pair<std::string, std::string>> extra;
  std::string started_at;
};
std::string utc_timestamp();
void write_manifest(const std::filesystem::path& dir, const Manifest& m);

void cmd_gen(const SimConfig& sim, int count, const std::filesystem::path& out, const LogFn& log = {});
TrainHistory cmd_train(const std::filesystem::path& dataset, const TrainConfig& cfg, const std::filesystem::path& out,
                       const LogFn& log = {});
double cmd_eval(const std::filesystem::path& model, const std::filesystem::path& dataset, const std::filesystem::path& out,
                int gallery = 8);
void cmd_predict(const std::filesystem::path& model, const std::filesystem::path& histogram_csv, const SimConfig& sim,
                 const std::filesystem::path& out);
std::vector<SweepPoint> cmd_sweep(const SweepOptions& opt, const std::filesystem::path& out, const LogFn& log = {});

/// Lateral and depth resolution for one point, or the default table
/// (d in {2, 4, 10, 20} m x dt in {2.3, 25, 250, 670, 1000} ps).
std::string cmd_resolve(std::optional<double> distance_m, std::optional<double> dt_s);

void write_history_csv(const TrainHistory& h, const std::filesystem::path& path);

}  // namespace tdi
