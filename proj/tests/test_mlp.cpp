#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "tdi/errors.hpp"
#include "tdi/mlp.hpp"

namespace tdi {
namespace {

using Md = BasicMlp<double>;

TEST(Init, ShapesAndGlorotBounds) {
  const std::vector<int> dims{50, 20, 10, 5};
  const auto m = init_mlp<float>(dims, 3);
  ASSERT_EQ(m.layers(), 3u);
  EXPECT_EQ(m.parameter_count(), 50u * 20 + 20 + 20 * 10 + 10 + 10 * 5 + 5);
  for (std::size_t l = 0; l < m.layers(); ++l) {
    EXPECT_EQ(m.weights[l].rows(), dims[l + 1]);
    EXPECT_EQ(m.weights[l].cols(), dims[l]);
    const float bound = std::sqrt(6.0f / static_cast<float>(dims[l] + dims[l + 1]));
    EXPECT_LE(m.weights[l].cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(m.weights[l].cwiseAbs().maxCoeff(), 0.5f * bound);
    EXPECT_TRUE(m.biases[l].isZero());
  }
  const auto again = init_mlp<float>(dims, 3);
  for (std::size_t l = 0; l < m.layers(); ++l) EXPECT_EQ(m.weights[l], again.weights[l]);
  EXPECT_NE(init_mlp<float>(dims, 4).weights[0], m.weights[0]);
  EXPECT_THROW(init_mlp<float>(std::vector<int>{5}, 0), DomainError);
  EXPECT_THROW(init_mlp<float>(std::vector<int>{5, 0, 2}, 0), DomainError);
}

TEST(Forward, TinyNetworkByHand) {
  Md m = init_mlp<double>(std::vector<int>{1, 1, 1}, 0);
  m.weights[0](0, 0) = 1.0;
  m.biases[0](0) = 0.0;
  m.weights[1](0, 0) = 1.0;
  m.biases[1](0) = 0.0;
  const double x = 0.5;
  EXPECT_NEAR(forward<double>(m, std::span(&x, 1))(0), 0.462117157260009758502, 1e-15);

  m.weights[0](0, 0) = 2.0;
  m.biases[0](0) = -0.25;
  m.weights[1](0, 0) = -3.0;
  m.biases[1](0) = 0.1;
  EXPECT_NEAR(forward<double>(m, std::span(&x, 1))(0), -3.0 * std::tanh(0.75) + 0.1, 1e-15);
}

TEST(Forward, BatchMatchesSingle) {
  const auto m = init_mlp<float>(std::vector<int>{30, 16, 8}, 1);
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  MlpModel::Matrix x(30, 5);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = (i % 3 == 0) ? 0.0f : u(rng);
  const auto batch = forward_batch(m, x);
  for (int c = 0; c < 5; ++c) {
    const auto single = forward<float>(m, std::span<const float>(x.col(c).data(), 30));
    for (int r = 0; r < 8; ++r) EXPECT_NEAR(batch(r, c), single(r), 1e-5f);
  }
  std::vector<float> wrong(29, 0.0f);
  EXPECT_THROW(forward<float>(m, wrong), DomainError);
}

TEST(Loss, MeanSquaredError) {
  const std::vector<double> y{1, 2, 3}, s{1, 0, 5};
  EXPECT_DOUBLE_EQ(mse_loss<double>(y, s), (0 + 4 + 4) / 3.0);
  EXPECT_EQ(mse_loss<double>(y, y), 0.0);
  EXPECT_THROW(mse_loss<double>(y, std::vector<double>{1, 2}), DomainError);
}

Md::Matrix random_matrix(int rows, int cols, std::uint64_t seed, double sparsity = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  Md::Matrix out(rows, cols);
  for (int i = 0; i < out.size(); ++i) out.data()[i] = p(rng) < sparsity ? 0.0 : u(rng);
  return out;
}

double loss_at(const Md& m, const Md::Matrix& x, const Md::Matrix& s) {
  const Md::Matrix y = forward_batch(m, x);
  return (y - s).squaredNorm() / static_cast<double>(y.size());
}

void expect_close(double analytic, double numeric, const std::string& what) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  EXPECT_LT(std::abs(analytic - numeric) / denom, 1e-4) << what << " analytic " << analytic << " numeric " << numeric;
}

TEST(Gradients, MatchCentralDifferences) {
  Md m = init_mlp<double>(std::vector<int>{7, 6, 5, 3}, 11);
  for (auto& b : m.biases) b.setRandom();
  const auto x = random_matrix(7, 4, 1, 0.3);
  const auto s = random_matrix(3, 4, 2);
  const auto g = gradients(m, x, s);
  EXPECT_NEAR(g.loss, loss_at(m, x, s), 1e-14);
  const double h = 1e-5;
  for (std::size_t l = 0; l < m.layers(); ++l) {
    for (int i = 0; i < m.weights[l].size(); ++i) {
      Md p = m, q = m;
      p.weights[l].data()[i] += h;
      q.weights[l].data()[i] -= h;
      expect_close(g.weights[l].data()[i], (loss_at(p, x, s) - loss_at(q, x, s)) / (2 * h),
                   "W" + std::to_string(l) + "[" + std::to_string(i) + "]");
    }
    for (int i = 0; i < m.biases[l].size(); ++i) {
      Md p = m, q = m;
      p.biases[l](i) += h;
      q.biases[l](i) -= h;
      expect_close(g.biases[l](i), (loss_at(p, x, s) - loss_at(q, x, s)) / (2 * h),
                   "b" + std::to_string(l) + "[" + std::to_string(i) + "]");
    }
  }
}

TEST(Gradients, RejectShapeMismatch) {
  const Md m = init_mlp<double>(std::vector<int>{4, 3, 2}, 0);
  EXPECT_THROW(gradients(m, random_matrix(5, 2, 0), random_matrix(2, 2, 0)), DomainError);
  EXPECT_THROW(gradients(m, random_matrix(4, 2, 0), random_matrix(2, 3, 0)), DomainError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Md m = init_mlp<double>(std::vector<int>{1, 1}, 0);
  m.weights[0](0, 0) = 0.5;
  Gradients<double> g;
  g.weights = {Md::Matrix::Constant(1, 1, 1.0)};
  g.biases = {Md::Vector::Constant(1, -2.0)};
  auto state = AdamState<double>::zeros_like(m);
  adam_step(m, g, state, 1, AdamConfig{});
  EXPECT_NEAR(0.5 - m.weights[0](0, 0), 9.9999999e-4, 1e-15);
  EXPECT_NEAR(m.biases[0](0), 1e-3 * 2.0 / (2.0 + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Md m = init_mlp<double>(std::vector<int>{3, 2}, 1);
  const Md before = m;
  Gradients<double> g;
  g.weights = {Md::Matrix::Zero(2, 3)};
  g.biases = {Md::Vector::Zero(2)};
  auto state = AdamState<double>::zeros_like(m);
  for (long t = 1; t <= 3; ++t) adam_step(m, g, state, t, AdamConfig{});
  EXPECT_EQ(m.weights[0], before.weights[0]);
  EXPECT_EQ(m.biases[0], before.biases[0]);
}

TEST(Adam, RejectsNonFiniteAndMismatch) {
  Md m = init_mlp<double>(std::vector<int>{2, 2}, 1);
  auto state = AdamState<double>::zeros_like(m);
  Gradients<double> g;
  g.weights = {Md::Matrix::Zero(2, 2)};
  g.biases = {Md::Vector::Zero(2)};
  g.weights[0](1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(adam_step(m, g, state, 1, AdamConfig{}), TrainingError);
  g.weights = {Md::Matrix::Zero(3, 2)};
  EXPECT_THROW(adam_step(m, g, state, 1, AdamConfig{}), DomainError);
}

TEST(Adam, DescendsOnQuadratic) {
  Md m = init_mlp<double>(std::vector<int>{4, 3}, 5);
  const auto x = random_matrix(4, 8, 3);
  const auto s = random_matrix(3, 8, 4);
  auto state = AdamState<double>::zeros_like(m);
  const double start = loss_at(m, x, s);
  AdamConfig cfg;
  cfg.learning_rate = 1e-2;
  for (long t = 1; t <= 500; ++t) adam_step(m, gradients(m, x, s), state, t, cfg);
  EXPECT_LT(loss_at(m, x, s), 0.5 * start);
}

Dataset toy_dataset(std::size_t n, std::uint32_t bins, std::uint32_t w, std::uint32_t h, std::uint64_t seed) {
  Dataset d(bins, w, h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> hist(bins, 0.0f), img(d.pixels());
    // Image is a smooth function of which bin carries the peak.
    const auto peak = static_cast<std::size_t>(u(rng) * static_cast<float>(bins));
    hist[peak] = 1.0f;
    if (peak + 1 < bins) hist[peak + 1] = 0.5f;
    for (std::size_t p = 0; p < img.size(); ++p)
      img[p] = 0.2f + 0.6f * static_cast<float>(peak) / static_cast<float>(bins) * static_cast<float>(p % 2);
    d.push_back(hist, img);
  }
  return d;
}

TEST(Split, ValidationFractionAndPermutation) {
  TrainConfig cfg;
  const auto split = split_for_training(1000, cfg);
  EXPECT_EQ(split.validation.size(), 70u);
  EXPECT_EQ(split.fit.size(), 930u);
  std::set<std::size_t> all(split.fit.begin(), split.fit.end());
  all.insert(split.validation.begin(), split.validation.end());
  EXPECT_EQ(all.size(), 1000u);
  EXPECT_EQ(*all.rbegin(), 999u);
  EXPECT_EQ(split_for_training(3, cfg).validation.size(), 1u);

  const auto e1 = epoch_order(split.fit, cfg.seed, 1);
  const auto e2 = epoch_order(split.fit, cfg.seed, 2);
  EXPECT_NE(e1, e2);
  EXPECT_EQ(e1, epoch_order(split.fit, cfg.seed, 1));
  auto sorted_fit = split.fit, sorted_e1 = e1;
  std::sort(sorted_fit.begin(), sorted_fit.end());
  std::sort(sorted_e1.begin(), sorted_e1.end());
  EXPECT_EQ(sorted_e1, sorted_fit);
}

TrainConfig small_train(int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.hidden = {32, 16};
  cfg.batch_size = 16;
  return cfg;
}

TEST(Train, HistoryAndReproducibility) {
  const auto data = toy_dataset(200, 40, 4, 4, 1);
  const auto cfg = small_train(10);
  std::vector<int> seen;
  const auto a = train(data, cfg, [&](int e, double, double) { seen.push_back(e); });
  ASSERT_EQ(a.history.train_loss.size(), 10u);
  ASSERT_EQ(a.history.val_loss.size(), 10u);
  EXPECT_EQ(seen.front(), 1);
  EXPECT_EQ(seen.back(), 10);
  EXPECT_LT(a.history.val_loss[9], a.history.val_loss[0]);
  EXPECT_TRUE(a.model.all_finite());
  const auto b = train(data, cfg);
  for (std::size_t l = 0; l < a.model.layers(); ++l) EXPECT_EQ(a.model.weights[l], b.model.weights[l]);
  EXPECT_EQ(a.history.val_loss, b.history.val_loss);
}

TEST(Train, MemorizesSinglePair) {
  Dataset one = toy_dataset(1, 20, 2, 2, 4);
  Dataset data(one.bins, one.img_w, one.img_h);
  for (int i = 0; i < 64; ++i) data.push_back(one.histogram(0), one.image(0));
  auto cfg = small_train(60);
  const auto r = train(data, cfg);
  EXPECT_LT(r.history.train_loss.back(), 1e-4);
}

TEST(Train, RejectsBadInput) {
  const auto cfg = small_train(1);
  EXPECT_THROW(train(Dataset(10, 2, 2), cfg), DomainError);
  const auto data = toy_dataset(1, 10, 2, 2, 0);
  EXPECT_THROW(train(data, cfg), DomainError);
  auto bad = toy_dataset(20, 10, 2, 2, 0);
  auto mismatched = init_mlp<float>(std::vector<int>{11, 4, 4}, 0);
  EXPECT_THROW(train(bad, cfg, mismatched), DomainError);
}

TEST(Train, DivergenceRaisesTrainingError) {
  const auto data = toy_dataset(100, 20, 2, 2, 0);
  auto cfg = small_train(5);
  cfg.adam.learning_rate = 1e30;
  EXPECT_THROW(train(data, cfg), TrainingError);
}

TEST(Predict, ClipsAndReshapes) {
  SimConfig cfg;
  cfg.img_w = 3;
  cfg.img_h = 2;
  cfg.bins = 10;
  auto m = init_mlp<float>(std::vector<int>{10, 4, 6}, 0);
  m.biases[1] << -5.0f, 0.25f, 0.5f, 0.75f, 1.0f, 9.0f;
  m.weights[1].setZero();
  Histogram h;
  h.bin_width_s = cfg.effective_bin_width();
  h.counts.assign(10, 0.0);
  h.counts[3] = 42.0;
  const auto img = predict(m, h, cfg);
  ASSERT_EQ(img.width, 3);
  ASSERT_EQ(img.height, 2);
  const std::vector<double> expected{0.0, 1.0, 2.0, 3.0, 4.0, 4.0};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(img.depth_m[i], expected[i], 1e-6);
  Histogram wrong = h;
  wrong.counts.resize(9);
  EXPECT_THROW(predict(m, wrong, cfg), DomainError);
}

TEST(Predict, RangeOverRandomInputs) {
  const auto m = init_mlp<float>(std::vector<int>{64, 32, 16}, 9);
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int t = 0; t < 50; ++t) {
    std::vector<float> x(64);
    for (auto& v : x) v = u(rng);
    for (float y : predict_normalized(m, x)) {
      EXPECT_GE(y, 0.0f);
      EXPECT_LE(y, 1.0f);
    }
  }
}

TEST(LayerDims, Composition) {
  EXPECT_EQ(layer_dims(8000, {1024, 512, 256}, 4096), (std::vector<int>{8000, 1024, 512, 256, 4096}));
}

}  // namespace
}  // namespace tdi
