#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tdi/config.hpp"
#include "tdi/dataset.hpp"
#include "tdi/forward.hpp"
#include "tdi/scene.hpp"

namespace tdi {

/// Fully connected network: tanh after every hidden layer, identity output.
/// Weight l maps dims[l] inputs to dims[l+1] outputs (fan_out x fan_in).
template <typename T>
struct BasicMlp {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  std::vector<int> dims;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::size_t layers() const { return weights.size(); }
  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

using MlpModel = BasicMlp<float>;

/// Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)), zero biases.
template <typename T>
BasicMlp<T> init_mlp(std::span<const int> dims, std::uint64_t seed);

template <typename T>
typename BasicMlp<T>::Vector forward(const BasicMlp<T>& model, std::span<const T> x);

/// Column-per-sample batch forward pass.
template <typename T>
typename BasicMlp<T>::Matrix forward_batch(const BasicMlp<T>& model, const typename BasicMlp<T>::Matrix& x);

/// Mean of (y_i - s_i)² over all entries.
template <typename T>
double mse_loss(std::span<const T> y, std::span<const T> s);

template <typename T>
struct Gradients {
  std::vector<typename BasicMlp<T>::Matrix> weights;
  std::vector<typename BasicMlp<T>::Vector> biases;
  double loss = 0.0;  // mean batch MSE at the evaluation point
};

/// Exact gradients of the mean batch MSE; columns of x and s are paired samples.
template <typename T>
Gradients<T> gradients(const BasicMlp<T>& model, const typename BasicMlp<T>::Matrix& x,
                       const typename BasicMlp<T>::Matrix& s);

template <typename T>
struct AdamState {
  std::vector<typename BasicMlp<T>::Matrix> m_w, v_w;
  std::vector<typename BasicMlp<T>::Vector> m_b, v_b;

  static AdamState zeros_like(const BasicMlp<T>& model);
};

/// One bias-corrected Adam update at step t >= 1.
template <typename T>
void adam_step(BasicMlp<T>& model, const Gradients<T>& grads, AdamState<T>& state, long t, const AdamConfig& cfg);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Held-out validation indices (last validation_fraction of a seeded permutation, at least one)
/// and the remaining fit indices.
struct TrainSplit {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> validation;
};
TrainSplit split_for_training(std::size_t n, const TrainConfig& cfg);

/// Order in which the fit indices are visited during `epoch` (1-based).
std::vector<std::size_t> epoch_order(std::vector<std::size_t> fit, std::uint64_t seed, int epoch);

using EpochCallback = std::function<void(int epoch, double train_loss, double val_loss)>;

/// Mini-batch Adam on mean MSE. The last validation_fraction of a seeded
/// permutation is held out once; the remainder is reshuffled every epoch.
TrainResult train(const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Same as above, continuing from an existing model.
TrainResult train(const Dataset& data, const TrainConfig& cfg, MlpModel initial, const EpochCallback& on_epoch = {});

/// Network output for a normalized histogram, clipped to [0,1].
std::vector<float> predict_normalized(const MlpModel& model, std::span<const float> histogram);

/// Histogram -> depth image: normalize, forward, clip, reshape row-major, scale by z_max.
DepthImage predict(const MlpModel& model, const Histogram& h, const SimConfig& cfg);

std::vector<int> layer_dims(int input, const std::vector<int>& hidden, int output);

}  // namespace tdi
