#include <gtest/gtest.h>

#include "tdi/config.hpp"
#include "tdi/errors.hpp"

namespace tdi {
namespace {

TEST(Config, DefaultsMatchPaperSizes) {
  const SimConfig sim;
  const TrainConfig train;
  EXPECT_DOUBLE_EQ(sim.fov_deg, 52.0);
  EXPECT_EQ(sim.img_w * sim.img_h, 4096);
  EXPECT_EQ(sim.bins, 8000);
  EXPECT_EQ(train.batch_size, 64);
  EXPECT_EQ(train.epochs, 200);
  EXPECT_DOUBLE_EQ(train.validation_fraction, 0.07);
  EXPECT_EQ(train.hidden, (std::vector<int>{1024, 512, 256}));
}

TEST(Config, DerivedBinWidthCoversSceneWithMargin) {
  SimConfig sim;
  EXPECT_DOUBLE_EQ(sim.effective_bin_width(), 2.0 * 5.0 / (kSpeedOfLight * 8000));
  EXPECT_NO_THROW(sim.validate());
  sim.time_convention = TimeConvention::OneWay;
  EXPECT_DOUBLE_EQ(sim.effective_bin_width(), 5.0 / (kSpeedOfLight * 8000));
  sim.bin_width_s = 1e-12;
  EXPECT_DOUBLE_EQ(sim.effective_bin_width(), 1e-12);
}

TEST(Config, PaperBinWidthCannotSpanFourMetres) {
  SimConfig sim;
  sim.bin_width_s = kPaperBinWidthS;
  EXPECT_THROW(sim.validate(), ConfigError);
}

TEST(Config, DeskPreset) {
  const auto p = preset(Preset::Desk);
  EXPECT_EQ(p.sim.img_w, 32);
  EXPECT_EQ(p.sim.img_h, 32);
  EXPECT_EQ(p.sim.bins, 2000);
  EXPECT_EQ(p.count, 2000);
  EXPECT_EQ(p.train.epochs, 50);
  EXPECT_EQ(preset(Preset::Paper).count, 4000);
  EXPECT_THROW(parse_preset("huge"), ConfigError);
}

TEST(Config, KeyValueParsing) {
  const auto kv = parse_key_values("# comment\n img_w = 16 \n\nbackground=uniform # trailing\nhidden = 8,4\n");
  SimConfig sim;
  TrainConfig train;
  int count = 0;
  apply(kv, sim, train, &count);
  EXPECT_EQ(sim.img_w, 16);
  EXPECT_EQ(sim.background, BackgroundKind::Uniform);
  EXPECT_EQ(train.hidden, (std::vector<int>{8, 4}));
  EXPECT_THROW(parse_key_values("no equals sign"), ConfigError);
  EXPECT_THROW(apply(parse_key_values("colour = red"), sim, train), ConfigError);
  EXPECT_THROW(apply(parse_key_values("img_w = 1.5"), sim, train), ConfigError);
}

TEST(Config, ResolvedKeysRoundTrip) {
  SimConfig sim;
  sim.seed = 42;
  sim.reflectivity_lo = 0.25;
  sim.reflectivity_hi = 4.0;
  sim.irf_dt_s = 250e-12;
  TrainConfig train;
  train.epochs = 3;
  train.seed = 42;
  SimConfig sim2;
  TrainConfig train2;
  apply(to_key_values(sim), sim2, train2);
  apply(to_key_values(train), sim2, train2);
  EXPECT_EQ(to_key_values(sim2), to_key_values(sim));
  EXPECT_EQ(to_key_values(train2), to_key_values(train));
}

}  // namespace
}  // namespace tdi
