#include "tdi/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "tdi/errors.hpp"
#include "tdi/forward.hpp"
#include "tdi/rng.hpp"
#include "tdi/store.hpp"

namespace tdi {

ScenePool make_scene_pool(const SimConfig& cfg, int total) {
  if (total < 0) throw DomainError("dataset size must be >= 0");
  const int per_figure = cfg.n_depths * cfg.n_lateral * 2;
  const int figures = std::max(cfg.silhouettes, (total + per_figure - 1) / per_figure);
  ScenePool pool;
  pool.silhouettes = generate_silhouettes(figures, cfg.seed);
  const auto bg = cfg.background == BackgroundKind::Uniform ? uniform_background(cfg.wall_depth_m) : default_background(cfg);
  auto scenes = augment(pool.silhouettes, bg, cfg);
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(cfg.seed, Stream::Selection);
  std::shuffle(order.begin(), order.end(), rng);
  pool.scenes.reserve(scenes.size());
  for (auto i : order) pool.scenes.push_back(std::move(scenes[i]));
  return pool;
}

Dataset generate_dataset(const SimConfig& cfg, int total, int first, int last, const LogFn& log) {
  cfg.validate();
  if (first < 0 || last < first || last > total) throw DomainError("generate_dataset: invalid record range");
  const auto pool = make_scene_pool(cfg, total);
  Dataset data(static_cast<std::uint32_t>(cfg.bins), static_cast<std::uint32_t>(cfg.img_w),
               static_cast<std::uint32_t>(cfg.img_h));
  data.histograms.reserve(static_cast<std::size_t>(last - first) * data.bins);
  data.images.reserve(static_cast<std::size_t>(last - first) * data.pixels());
  for (int k = first; k < last; ++k) {
    const auto img = render(pool.scenes[static_cast<std::size_t>(k)], pool.silhouettes, cfg);
    Histogram h;
    try {
      h = forward_model(img, cfg, cfg.seed + static_cast<std::uint64_t>(k));
    } catch (const SpanError& e) {
      throw SpanError("scene " + std::to_string(k) + ": " + e.what());
    }
    data.push_back(normalize_histogram(h), normalize_image(img, cfg.z_max));
    if (log && (k + 1 - first) % 500 == 0) log("generated " + std::to_string(k + 1 - first) + "/" + std::to_string(last - first));
  }
  return data;
}

Evaluation evaluate(const MlpModel& model, const Dataset& data) {
  if (model.input_dim() != static_cast<int>(data.bins) || model.output_dim() != static_cast<int>(data.pixels()))
    throw DomainError("evaluate: model is " + std::to_string(model.input_dim()) + "->" +
                      std::to_string(model.output_dim()) + ", dataset is " + std::to_string(data.bins) + "->" +
                      std::to_string(data.pixels()));
  Evaluation ev;
  ev.ssim.reserve(data.size());
  constexpr std::size_t kChunk = 256;
  MlpModel::Matrix x;
  for (std::size_t first = 0; first < data.size(); first += kChunk) {
    const auto n = std::min(kChunk, data.size() - first);
    x.resize(data.bins, static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < n; ++c) {
      const auto h = data.histogram(first + c);
      std::copy(h.begin(), h.end(), x.col(static_cast<Eigen::Index>(c)).data());
    }
    const MlpModel::Matrix y = forward_batch(model, x).cwiseMax(0.0f).cwiseMin(1.0f);
    for (std::size_t c = 0; c < n; ++c) {
      const std::span<const float> pred(y.col(static_cast<Eigen::Index>(c)).data(), data.pixels());
      ev.ssim.push_back(ssim(pred, data.image(first + c), static_cast<int>(data.img_w), static_cast<int>(data.img_h)).mean);
    }
  }
  ev.mean = ev.ssim.empty() ? 0.0 : std::accumulate(ev.ssim.begin(), ev.ssim.end(), 0.0) / static_cast<double>(ev.ssim.size());
  return ev;
}

SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "irf") return SweepKind::Irf;
  if (s == "noise") return SweepKind::Noise;
  if (s == "dataset-size") return SweepKind::DatasetSize;
  if (s == "reflectivity") return SweepKind::Reflectivity;
  throw ConfigError("unknown sweep kind '" + s + "' (expected irf|noise|dataset-size|reflectivity)");
}

std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::Irf: return "irf";
    case SweepKind::Noise: return "noise";
    case SweepKind::DatasetSize: return "dataset-size";
    case SweepKind::Reflectivity: return "reflectivity";
  }
  return "?";
}

std::vector<double> default_sweep_points(SweepKind k) {
  switch (k) {
    case SweepKind::Irf: return {2.3e-12, 25e-12, 250e-12, 1000e-12};
    case SweepKind::Noise: return {0, 1, 2, 3};
    case SweepKind::DatasetSize: return {500, 1000, 2000, 4000};
    case SweepKind::Reflectivity: return {0.5, 1.0, 1.5, 2.0};
  }
  return {};
}

namespace {

std::string label_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << v;
  return os.str();
}

// Runs `body` for one sweep point, recording failure instead of propagating it.
template <typename Body>
void run_point(std::vector<SweepPoint>& out, std::string label, const LogFn& log, Body&& body) {
  SweepPoint p;
  p.label = std::move(label);
  try {
    p.mean_ssim = body();
    p.ok = true;
    if (log) log("point " + p.label + ": mean SSIM " + label_number(p.mean_ssim));
  } catch (const std::exception& e) {
    p.error = e.what();
    if (log) log("point " + p.label + " failed: " + p.error);
  }
  out.push_back(std::move(p));
}

}  // namespace

std::vector<SweepPoint> run_sweep(const SweepOptions& opt, const LogFn& log) {
  const auto points = opt.points.empty() ? default_sweep_points(opt.kind) : opt.points;
  std::vector<SweepPoint> out;
  const int total = opt.n_train + opt.n_test;
  auto train_eval = [&](const SimConfig& sim, int n_train_used, int pool_total) {
    const auto train_set = generate_dataset(sim, pool_total, 0, n_train_used);
    const auto test_set = generate_dataset(sim, pool_total, pool_total - opt.n_test, pool_total);
    const auto trained = train(train_set, opt.train);
    return evaluate(trained.model, test_set).mean;
  };

  switch (opt.kind) {
    case SweepKind::Irf:
      for (double dt : points) {
        auto sim = opt.sim;
        sim.irf_dt_s = dt;
        run_point(out, label_number(dt * 1e12) + "ps", log, [&] { return train_eval(sim, opt.n_train, total); });
      }
      break;
    case SweepKind::DatasetSize: {
      const int largest = static_cast<int>(*std::max_element(points.begin(), points.end()));
      for (double n : points)
        run_point(out, "N=" + label_number(n), log,
                  [&] { return train_eval(opt.sim, static_cast<int>(n), largest + opt.n_test); });
      break;
    }
    case SweepKind::Noise: {
      auto sim = opt.sim;
      sim.noise_level = 0;
      std::optional<MlpModel> model;
      std::string train_error;
      try {
        model = train(generate_dataset(sim, total, 0, opt.n_train), opt.train).model;
      } catch (const std::exception& e) {
        train_error = e.what();
      }
      for (double level : points) {
        run_point(out, "level=" + label_number(level), log, [&] {
          if (!model) throw TrainingError("training failed: " + train_error);
          auto noisy = opt.sim;
          noisy.noise_level = static_cast<int>(level);
          return evaluate(*model, generate_dataset(noisy, total, opt.n_train, total)).mean;
        });
      }
      break;
    }
    case SweepKind::Reflectivity: {
      std::vector<std::pair<std::string, SimConfig>> regimes;
      if (opt.fixed_training) {
        auto sim = opt.sim;
        sim.reflectivity = 1.0;
        sim.reflectivity_lo = sim.reflectivity_hi = 0.0;
        regimes.emplace_back("fixed", sim);
      }
      if (opt.varied_training) {
        auto sim = opt.sim;
        sim.reflectivity_lo = 0.25;
        sim.reflectivity_hi = 4.0;
        regimes.emplace_back("varied", sim);
      }
      for (const auto& [name, sim] : regimes) {
        std::optional<MlpModel> model;
        std::string train_error;
        try {
          model = train(generate_dataset(sim, total, 0, opt.n_train), opt.train).model;
        } catch (const std::exception& e) {
          train_error = e.what();
        }
        for (double r : points) {
          run_point(out, name + ":R=" + label_number(r), log, [&] {
            if (!model) throw TrainingError("training failed: " + train_error);
            auto test = sim;
            test.reflectivity = r;
            test.reflectivity_lo = test.reflectivity_hi = 0.0;
            return evaluate(*model, generate_dataset(test, total, opt.n_train, total)).mean;
          });
        }
      }
      break;
    }
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::filesystem::path& path) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(9);
  os << "point,mean_ssim\n";
  for (const auto& p : points) {
    os << p.label << ',';
    if (p.ok) os << p.mean_ssim;
    else os << "failed";
    os << '\n';
  }
  const auto s = os.str();
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const std::filesystem::path& dir, const Manifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "tdi";
  j["version"] = kToolVersion;
  j["command"] = m.command;
  if (m.sim) {
    j["seed"] = m.sim->seed;
    j["sim"] = to_key_values(*m.sim);
  }
  if (m.train) {
    if (!m.sim) j["seed"] = m.train->seed;
    j["train"] = to_key_values(*m.train);
  }
  for (const auto& [k, v] : m.extra) j[k] = v;
  j["started_at"] = m.started_at;
  j["finished_at"] = utc_timestamp();
  const auto s = j.dump(2) + "\n";
  write_file_atomic(dir / "manifest.json", {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

void write_history_csv(const TrainHistory& h, const std::filesystem::path& path) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(9);
  os << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < h.train_loss.size(); ++i) os << i + 1 << ',' << h.train_loss[i] << ',' << h.val_loss[i] << '\n';
  const auto s = os.str();
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

void cmd_gen(const SimConfig& sim, int count, const std::filesystem::path& out, const LogFn& log) {
  Manifest m{"gen", sim, std::nullopt, {{"count", std::to_string(count)}, {"dataset", "dataset.tdid"}}, utc_timestamp()};
  std::filesystem::create_directories(out);
  write_dataset(out / "dataset.tdid", generate_dataset(sim, count, 0, count, log));
  write_manifest(out, m);
}

TrainHistory cmd_train(const std::filesystem::path& dataset, const TrainConfig& cfg, const std::filesystem::path& out,
                       const LogFn& log) {
  Manifest m{"train", std::nullopt, cfg, {{"dataset", dataset.string()}, {"model", "model.tdim"}, {"history", "history.csv"}},
             utc_timestamp()};
  const auto data = read_dataset(dataset);
  std::filesystem::create_directories(out);
  auto result = train(data, cfg, [&](int epoch, double tl, double vl) {
    if (log) log("epoch " + std::to_string(epoch) + " train " + label_number(tl) + " val " + label_number(vl));
  });
  write_model(out / "model.tdim", result.model);
  write_history_csv(result.history, out / "history.csv");
  write_manifest(out, m);
  return result.history;
}

namespace {

// Prediction | truth | SSIM map side by side, one column of black between panels.
void export_gallery_panel(std::span<const float> pred, std::span<const float> truth, const SsimResult& s,
                          const std::filesystem::path& path) {
  const int w = s.width, h = s.height, total_w = 3 * w + 2;
  std::vector<float> canvas(static_cast<std::size_t>(total_w) * h, 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      const auto row = static_cast<std::size_t>(y) * total_w;
      canvas[row + x] = pred[i];
      canvas[row + w + 1 + x] = truth[i];
      canvas[row + 2 * w + 2 + x] = static_cast<float>(0.5 * (std::clamp(s.map[i], -1.0, 1.0) + 1.0));
    }
  export_depth_pgm(canvas, total_w, h, path);
}

}  // namespace

double cmd_eval(const std::filesystem::path& model_path, const std::filesystem::path& dataset,
                const std::filesystem::path& out, int gallery) {
  Manifest m{"eval", std::nullopt, std::nullopt,
             {{"model", model_path.string()}, {"dataset", dataset.string()}, {"gallery", std::to_string(gallery)}},
             utc_timestamp()};
  const auto model = read_model(model_path);
  const auto data = read_dataset(dataset);
  const auto ev = evaluate(model, data);
  std::filesystem::create_directories(out);

  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(9);
  os << "index,mean_ssim\n";
  for (std::size_t i = 0; i < ev.ssim.size(); ++i) os << i << ',' << ev.ssim[i] << '\n';
  os << "overall," << ev.mean << '\n';
  const auto csv = os.str();
  write_file_atomic(out / "ssim.csv", {reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()});

  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(gallery, 0)), data.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto pred = predict_normalized(model, data.histogram(i));
    const auto s = ssim(pred, data.image(i), static_cast<int>(data.img_w), static_cast<int>(data.img_h));
    std::ostringstream name;
    name << "pair_" << std::setw(3) << std::setfill('0') << i;
    export_gallery_panel(pred, data.image(i), s, out / (name.str() + ".pgm"));
    export_ssim_pgm(s, out / (name.str() + "_ssim.pgm"));
  }
  m.extra.emplace_back("overall_mean_ssim", label_number(ev.mean));
  write_manifest(out, m);
  return ev.mean;
}

void cmd_predict(const std::filesystem::path& model_path, const std::filesystem::path& histogram_csv,
                 const SimConfig& sim, const std::filesystem::path& out) {
  Manifest m{"predict", sim, std::nullopt, {{"model", model_path.string()}, {"histogram", histogram_csv.string()}},
             utc_timestamp()};
  const auto model = read_model(model_path);
  const auto h = read_histogram_csv(histogram_csv);
  const auto img = predict(model, h, sim);
  std::filesystem::create_directories(out);
  std::vector<float> norm(img.depth_m.size());
  for (std::size_t i = 0; i < norm.size(); ++i) norm[i] = static_cast<float>(img.depth_m[i] / sim.z_max);
  export_depth_pgm(norm, img.width, img.height, out / "prediction.pgm");
  write_manifest(out, m);
}

std::vector<SweepPoint> cmd_sweep(const SweepOptions& opt, const std::filesystem::path& out, const LogFn& log) {
  Manifest m{"sweep", opt.sim, opt.train,
             {{"kind", to_string(opt.kind)}, {"n_train", std::to_string(opt.n_train)}, {"n_test", std::to_string(opt.n_test)}},
             utc_timestamp()};
  std::string pts;
  for (double p : opt.points.empty() ? default_sweep_points(opt.kind) : opt.points) pts += (pts.empty() ? "" : ",") + label_number(p);
  m.extra.emplace_back("points", pts);
  std::filesystem::create_directories(out);
  auto points = run_sweep(opt, log);
  write_sweep_csv(points, out / "summary.csv");
  write_manifest(out, m);
  return points;
}

std::string cmd_resolve(std::optional<double> distance_m, std::optional<double> dt_s) {
  std::vector<double> ds = {2, 4, 10, 20};
  std::vector<double> dts = {2.3e-12, 25e-12, 250e-12, 670e-12, 1000e-12};
  if (distance_m) ds = {*distance_m};
  if (dt_s) dts = {*dt_s};
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::left << std::setw(12) << "distance_m" << std::setw(12) << "irf_ps" << std::setw(14) << "lateral_m"
     << "depth_m\n";
  for (double d : ds)
    for (double dt : dts) {
      const double lat = lateral_resolution(d, dt);
      const double dep = depth_resolution(dt);
      os << std::setw(12) << label_number(d) << std::setw(12) << label_number(dt * 1e12) << std::setw(14)
         << std::setprecision(6) << std::fixed << lat << dep << '\n'
         << std::defaultfloat << std::setprecision(6);
    }
  return os.str();
}

}  // namespace tdi
