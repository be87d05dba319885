// Command-line driver: gen, train, eval, predict, sweep, resolve.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <sstream>

#include "tdi/config.hpp"
#include "tdi/errors.hpp"
#include "tdi/pipeline.hpp"

namespace {

struct Common {
  std::string preset = "paper";
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--preset", c.preset, "Size preset: paper (64x64, 8000 bins) or desk (32x32, 2000 bins)")
      ->check(CLI::IsMember({"paper", "desk"}));
  app->add_option("--config", c.config, "key = value config file; overrides the preset")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Base seed; overrides the config");
  app->add_option("--out", c.out, "Output directory");
}

struct Resolved {
  tdi::SimConfig sim;
  tdi::TrainConfig train;
  int count = 0;
};

Resolved resolve(const Common& c) {
  const auto p = tdi::preset(tdi::parse_preset(c.preset));
  Resolved r{p.sim, p.train, p.count};
  if (!c.config.empty()) tdi::apply(tdi::read_key_values(c.config), r.sim, r.train, &r.count);
  if (c.seed) r.sim.seed = r.train.seed = *c.seed;
  return r;
}

void parse_range(const std::string& text, tdi::SimConfig& sim) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw tdi::ConfigError("--reflectivity-range expects lo:hi");
  try {
    sim.reflectivity_lo = std::stod(text.substr(0, colon));
    sim.reflectivity_hi = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw tdi::ConfigError("--reflectivity-range expects numeric lo:hi, got '" + text + "'");
  }
}

void log_line(const std::string& s) { std::cerr << "tdi: " << s << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth images from single-point time-of-flight histograms"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, predict_c, sweep_c;

  auto* gen = app.add_subcommand("gen", "Synthesize histogram/depth-image pairs");
  add_common(gen, gen_c);
  std::optional<int> gen_count, gen_noise;
  std::optional<std::string> gen_background, gen_range;
  std::optional<double> gen_refl, gen_irf;
  gen->add_option("--count", gen_count, "Number of pairs");
  gen->add_option("--background", gen_background, "structured or uniform")->check(CLI::IsMember({"structured", "uniform"}));
  gen->add_option("--reflectivity-range", gen_range, "Log-uniform silhouette reflectivity ratio lo:hi");
  gen->add_option("--reflectivity", gen_refl, "Fixed silhouette reflectivity ratio");
  gen->add_option("--irf", gen_irf, "Gaussian IRF width in seconds");
  gen->add_option("--noise-level", gen_noise, "Noise level 0-3")->check(CLI::Range(0, 3));

  auto* tr = app.add_subcommand("train", "Train the inverse network on a dataset");
  add_common(tr, train_c);
  std::string train_dataset;
  std::optional<int> train_epochs, train_batch;
  bool train_det = false;
  tr->add_option("--dataset", train_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  tr->add_option("--epochs", train_epochs, "Epochs");
  tr->add_option("--batch", train_batch, "Batch size");
  tr->add_flag("--deterministic", train_det, "Bit-reproducible training");

  auto* ev = app.add_subcommand("eval", "SSIM of a model against a dataset");
  add_common(ev, eval_c);
  std::string eval_model, eval_dataset;
  int eval_k = 8;
  ev->add_option("--model", eval_model, "Model file")->required()->check(CLI::ExistingFile);
  ev->add_option("--dataset", eval_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  ev->add_option("--gallery", eval_k, "Number of pairs exported as graymaps")->check(CLI::NonNegativeNumber);

  auto* pr = app.add_subcommand("predict", "Depth image from one histogram CSV");
  add_common(pr, predict_c);
  std::string pred_model, pred_hist;
  pr->add_option("--model", pred_model, "Model file")->required()->check(CLI::ExistingFile);
  pr->add_option("--histogram", pred_hist, "CSV with header bin_start_s,count")->required()->check(CLI::ExistingFile);

  auto* sw = app.add_subcommand("sweep", "Retrain/evaluate across a parameter grid");
  add_common(sw, sweep_c);
  std::string sweep_kind;
  std::optional<int> sweep_train, sweep_test;
  std::vector<double> sweep_points;
  std::string sweep_training = "both";
  std::optional<int> sweep_epochs;
  sw->add_option("kind", sweep_kind, "irf | noise | dataset-size | reflectivity")
      ->required()
      ->check(CLI::IsMember({"irf", "noise", "dataset-size", "reflectivity"}));
  sw->add_option("--n-train", sweep_train, "Training pairs per point (default: count - n_test)");
  sw->add_option("--n-test", sweep_test, "Held-out test pairs (default 200)");
  sw->add_option("--points", sweep_points, "Override the grid (seconds for irf)")->delimiter(',');
  sw->add_option("--training", sweep_training, "Reflectivity training regime")->check(CLI::IsMember({"fixed", "varied", "both"}));
  sw->add_option("--epochs", sweep_epochs, "Epochs per training");

  auto* rs = app.add_subcommand("resolve", "Lateral and depth resolution limits");
  std::optional<double> rs_d, rs_dt;
  rs->add_option("--distance", rs_d, "Distance in metres")->check(CLI::NonNegativeNumber);
  rs->add_option("--irf", rs_dt, "Temporal resolution in seconds")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto r = resolve(gen_c);
      if (gen_count) r.count = *gen_count;
      if (gen_background) r.sim.background = *gen_background == "uniform" ? tdi::BackgroundKind::Uniform : tdi::BackgroundKind::Structured;
      if (gen_refl) r.sim.reflectivity = *gen_refl;
      if (gen_range) parse_range(*gen_range, r.sim);
      if (gen_irf) r.sim.irf_dt_s = *gen_irf;
      if (gen_noise) r.sim.noise_level = *gen_noise;
      r.sim.validate();
      tdi::cmd_gen(r.sim, r.count, gen_c.out, log_line);
      std::cout << (std::filesystem::path(gen_c.out) / "dataset.tdid").string() << '\n';
    } else if (*tr) {
      auto r = resolve(train_c);
      if (train_epochs) r.train.epochs = *train_epochs;
      if (train_batch) r.train.batch_size = *train_batch;
      if (train_det) r.train.deterministic = true;
      tdi::cmd_train(train_dataset, r.train, train_c.out, log_line);
      std::cout << (std::filesystem::path(train_c.out) / "model.tdim").string() << '\n';
    } else if (*ev) {
      const double mean = tdi::cmd_eval(eval_model, eval_dataset, eval_c.out, eval_k);
      std::cout << "mean_ssim " << mean << '\n';
    } else if (*pr) {
      const auto r = resolve(predict_c);
      tdi::cmd_predict(pred_model, pred_hist, r.sim, predict_c.out);
      std::cout << (std::filesystem::path(predict_c.out) / "prediction.pgm").string() << '\n';
    } else if (*sw) {
      auto r = resolve(sweep_c);
      tdi::SweepOptions opt;
      opt.kind = tdi::parse_sweep_kind(sweep_kind);
      opt.sim = r.sim;
      opt.train = r.train;
      if (sweep_epochs) opt.train.epochs = *sweep_epochs;
      opt.n_test = sweep_test.value_or(200);
      opt.n_train = sweep_train.value_or(std::max(1, r.count - opt.n_test));
      opt.points = sweep_points;
      opt.fixed_training = sweep_training != "varied";
      opt.varied_training = sweep_training != "fixed";
      const auto points = tdi::cmd_sweep(opt, sweep_c.out, log_line);
      bool all_ok = true;
      for (const auto& p : points) all_ok = all_ok && p.ok;
      std::cout << (std::filesystem::path(sweep_c.out) / "summary.csv").string() << '\n';
      if (!all_ok) {
        std::cerr << "tdi: error: one or more sweep points failed (see summary.csv)\n";
        return 1;
      }
    } else if (*rs) {
      std::cout << tdi::cmd_resolve(rs_d, rs_dt);
    }
  } catch (const std::exception& e) {
    std::cerr << "tdi: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
