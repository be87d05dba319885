#include "tdi/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "tdi/errors.hpp"
#include "tdi/rng.hpp"

namespace tdi {

template <typename T>
std::size_t BasicMlp<T>::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layers(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

template <typename T>
bool BasicMlp<T>::all_finite() const {
  for (std::size_t l = 0; l < layers(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

template <typename T>
BasicMlp<T> init_mlp(std::span<const int> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw DomainError("init_mlp: need at least two layer dimensions");
  for (int d : dims)
    if (d < 1) throw DomainError("init_mlp: layer dimensions must be >= 1");
  BasicMlp<T> m;
  m.dims.assign(dims.begin(), dims.end());
  auto rng = make_rng(seed, Stream::Init);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    typename BasicMlp<T>::Matrix w(fan_out, fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<T>(u(rng));
    m.weights.push_back(std::move(w));
    m.biases.push_back(BasicMlp<T>::Vector::Zero(fan_out));
  }
  return m;
}

template <typename T>
typename BasicMlp<T>::Vector forward(const BasicMlp<T>& model, std::span<const T> x) {
  using Vector = typename BasicMlp<T>::Vector;
  if (static_cast<int>(x.size()) != model.input_dim())
    throw DomainError("forward: input length " + std::to_string(x.size()) + " != " + std::to_string(model.input_dim()));
  const auto& w0 = model.weights.front();
  // Histograms are mostly empty bins: accumulate only the columns that matter.
  Vector a = model.biases.front();
  std::size_t nonzero = 0;
  for (T v : x) nonzero += v != T(0);
  if (nonzero * 2 < x.size()) {
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] != T(0)) a.noalias() += x[j] * w0.col(static_cast<Eigen::Index>(j));
  } else {
    const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    a.noalias() += w0 * xv;
  }
  for (std::size_t l = 1; l < model.layers(); ++l) {
    a = a.array().tanh().matrix();
    Vector z = model.biases[l];
    z.noalias() += model.weights[l] * a;
    a = std::move(z);
  }
  return a;
}

template <typename T>
typename BasicMlp<T>::Matrix forward_batch(const BasicMlp<T>& model, const typename BasicMlp<T>::Matrix& x) {
  if (x.rows() != model.input_dim()) throw DomainError("forward_batch: input rows != input dimension");
  typename BasicMlp<T>::Matrix a = x;
  for (std::size_t l = 0; l < model.layers(); ++l) {
    typename BasicMlp<T>::Matrix z = model.weights[l] * a;
    z.colwise() += model.biases[l];
    a = l + 1 < model.layers() ? typename BasicMlp<T>::Matrix(z.array().tanh().matrix()) : std::move(z);
  }
  return a;
}

template <typename T>
double mse_loss(std::span<const T> y, std::span<const T> s) {
  if (y.size() != s.size()) throw DomainError("mse_loss: length mismatch");
  if (y.empty()) throw DomainError("mse_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = static_cast<double>(y[i]) - static_cast<double>(s[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(y.size());
}

template <typename T>
Gradients<T> gradients(const BasicMlp<T>& model, const typename BasicMlp<T>::Matrix& x,
                       const typename BasicMlp<T>::Matrix& s) {
  using Matrix = typename BasicMlp<T>::Matrix;
  if (x.cols() == 0) throw DomainError("gradients: empty batch");
  if (x.rows() != model.input_dim() || s.rows() != model.output_dim() || s.cols() != x.cols())
    throw DomainError("gradients: batch shape does not match the network");
  const std::size_t L = model.layers();

  // activations[l] is the input of layer l; activations[L] is the output.
  std::vector<Matrix> activations;
  activations.reserve(L + 1);
  activations.push_back(x);
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z = model.weights[l] * activations.back();
    z.colwise() += model.biases[l];
    if (l + 1 < L) z = z.array().tanh().matrix();
    activations.push_back(std::move(z));
  }

  const double n = static_cast<double>(s.size());
  Matrix delta = activations[L] - s;
  Gradients<T> g;
  g.loss = static_cast<double>(delta.squaredNorm()) / n;
  delta *= static_cast<T>(2.0 / n);

  g.weights.resize(L);
  g.biases.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    g.weights[l].noalias() = delta * activations[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = model.weights[l].transpose() * delta;
      delta = (back.array() * (T(1) - activations[l].array().square())).matrix();
    }
  }
  return g;
}

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const BasicMlp<T>& model) {
  AdamState<T> s;
  for (std::size_t l = 0; l < model.layers(); ++l) {
    s.m_w.push_back(BasicMlp<T>::Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    s.m_b.push_back(BasicMlp<T>::Vector::Zero(model.biases[l].size()));
  }
  s.v_w = s.m_w;
  s.v_b = s.m_b;
  return s;
}

namespace {

template <typename Param, typename Grad>
void adam_update(Param& p, const Grad& g, Param& m, Param& v, double lr_t, double b1, double b2, double eps_t) {
  using T = typename Param::Scalar;
  m.array() = T(b1) * m.array() + T(1 - b1) * g.array();
  v.array() = T(b2) * v.array() + T(1 - b2) * g.array().square();
  p.array() -= T(lr_t) * m.array() / (v.array().sqrt() + T(eps_t));
}

}  // namespace

template <typename T>
void adam_step(BasicMlp<T>& model, const Gradients<T>& grads, AdamState<T>& state, long t, const AdamConfig& cfg) {
  if (t < 1) throw DomainError("adam_step: step index must be >= 1");
  if (grads.weights.size() != model.layers() || state.m_w.size() != model.layers())
    throw DomainError("adam_step: state does not match the network");
  for (std::size_t l = 0; l < model.layers(); ++l) {
    if (grads.weights[l].rows() != model.weights[l].rows() || grads.weights[l].cols() != model.weights[l].cols() ||
        grads.biases[l].size() != model.biases[l].size())
      throw DomainError("adam_step: gradient shape mismatch in layer " + std::to_string(l));
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite())
      throw TrainingError("non-finite gradient in layer " + std::to_string(l) + " at step " + std::to_string(t));
  }
  // Bias correction folded into the step size: lr·sqrt(1-b2^t)/(1-b1^t), eps·sqrt(1-b2^t).
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = std::sqrt(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  const double lr_t = cfg.learning_rate * c2 / c1;
  const double eps_t = cfg.epsilon * c2;
  for (std::size_t l = 0; l < model.layers(); ++l) {
    adam_update(model.weights[l], grads.weights[l], state.m_w[l], state.v_w[l], lr_t, cfg.beta1, cfg.beta2, eps_t);
    adam_update(model.biases[l], grads.biases[l], state.m_b[l], state.v_b[l], lr_t, cfg.beta1, cfg.beta2, eps_t);
  }
}

std::vector<int> layer_dims(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> dims{input};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  return dims;
}

namespace {

using Matrixf = MlpModel::Matrix;

void gather(const Dataset& data, std::span<const std::size_t> idx, Matrixf& x, Matrixf& s) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  x.resize(data.bins, n);
  s.resize(static_cast<Eigen::Index>(data.pixels()), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto h = data.histogram(idx[static_cast<std::size_t>(c)]);
    const auto img = data.image(idx[static_cast<std::size_t>(c)]);
    std::copy(h.begin(), h.end(), x.col(c).data());
    std::copy(img.begin(), img.end(), s.col(c).data());
  }
}

double mean_loss(const MlpModel& model, const Dataset& data, std::span<const std::size_t> idx) {
  constexpr std::size_t kChunk = 256;
  double acc = 0.0;
  Matrixf x, s;
  for (std::size_t first = 0; first < idx.size(); first += kChunk) {
    const auto part = idx.subspan(first, std::min(kChunk, idx.size() - first));
    gather(data, part, x, s);
    acc += static_cast<double>((forward_batch(model, x) - s).squaredNorm());
  }
  return acc / (static_cast<double>(idx.size()) * static_cast<double>(data.pixels()));
}

}  // namespace

TrainSplit split_for_training(std::size_t n, const TrainConfig& cfg) {
  if (n < 2) throw DomainError("train: need at least two pairs to hold out validation data");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(cfg.seed, Stream::Shuffle, 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n))), 1, n - 1);
  TrainSplit split;
  split.fit.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  split.validation.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  return split;
}

std::vector<std::size_t> epoch_order(std::vector<std::size_t> fit, std::uint64_t seed, int epoch) {
  auto rng = make_rng(seed, Stream::Shuffle, static_cast<std::uint64_t>(epoch));
  std::shuffle(fit.begin(), fit.end(), rng);
  return fit;
}

TrainResult train(const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (data.empty()) throw DomainError("train: empty dataset");
  const auto dims = layer_dims(static_cast<int>(data.bins), cfg.hidden, static_cast<int>(data.pixels()));
  return train(data, cfg, init_mlp<float>(dims, cfg.seed), on_epoch);
}

TrainResult train(const Dataset& data, const TrainConfig& cfg, MlpModel model, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.empty()) throw DomainError("train: empty dataset");
  if (data.histograms.size() != data.size() * data.bins || data.images.size() != data.size() * data.pixels())
    throw DomainError("train: inconsistent record lengths");
  if (model.input_dim() != static_cast<int>(data.bins) || model.output_dim() != static_cast<int>(data.pixels()))
    throw DomainError("train: model dimensions do not match the dataset");
  const std::size_t n = data.size();
  if (n < static_cast<std::size_t>(cfg.batch_size))
    throw DomainError("train: dataset has " + std::to_string(n) + " pairs, fewer than one batch");
  if (cfg.deterministic) Eigen::setNbThreads(1);

  auto [fit, val] = split_for_training(n, cfg);

  auto state = AdamState<float>::zeros_like(model);
  TrainHistory history;
  long step = 0;
  Matrixf x, s;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    fit = epoch_order(std::move(fit), cfg.seed, epoch);
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < fit.size(); first += batch) {
      const auto part = std::span<const std::size_t>(fit).subspan(first, std::min(batch, fit.size() - first));
      gather(data, part, x, s);
      const auto g = gradients(model, x, s);
      adam_step(model, g, state, ++step, cfg.adam);
      epoch_loss += g.loss * static_cast<double>(part.size());
    }
    if (!model.all_finite()) throw TrainingError("parameters became non-finite in epoch " + std::to_string(epoch));
    history.train_loss.push_back(epoch_loss / static_cast<double>(fit.size()));
    history.val_loss.push_back(mean_loss(model, data, val));
    if (on_epoch) on_epoch(epoch, history.train_loss.back(), history.val_loss.back());
  }
  return {std::move(model), std::move(history)};
}

std::vector<float> predict_normalized(const MlpModel& model, std::span<const float> histogram) {
  const auto y = forward(model, histogram);
  std::vector<float> out(static_cast<std::size_t>(y.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(y[static_cast<Eigen::Index>(i)], 0.0f, 1.0f);
  return out;
}

DepthImage predict(const MlpModel& model, const Histogram& h, const SimConfig& cfg) {
  if (model.input_dim() != static_cast<int>(h.size()))
    throw DomainError("predict: model expects " + std::to_string(model.input_dim()) + " bins, histogram has " +
                      std::to_string(h.size()));
  if (model.output_dim() != cfg.img_w * cfg.img_h)
    throw DomainError("predict: model output does not match a " + std::to_string(cfg.img_w) + "x" +
                      std::to_string(cfg.img_h) + " image");
  const auto y = predict_normalized(model, normalize_histogram(h));
  DepthImage img(cfg.img_w, cfg.img_h);
  for (std::size_t i = 0; i < y.size(); ++i) img.depth_m[i] = static_cast<double>(y[i]) * cfg.z_max;
  return img;
}

#define TDI_INSTANTIATE(T)                                                                                    \
  template struct BasicMlp<T>;                                                                                \
  template struct AdamState<T>;                                                                               \
  template BasicMlp<T> init_mlp<T>(std::span<const int>, std::uint64_t);                                      \
  template BasicMlp<T>::Vector forward<T>(const BasicMlp<T>&, std::span<const T>);                            \
  template BasicMlp<T>::Matrix forward_batch<T>(const BasicMlp<T>&, const BasicMlp<T>::Matrix&);              \
  template double mse_loss<T>(std::span<const T>, std::span<const T>);                                        \
  template Gradients<T> gradients<T>(const BasicMlp<T>&, const BasicMlp<T>::Matrix&, const BasicMlp<T>::Matrix&); \
  template void adam_step<T>(BasicMlp<T>&, const Gradients<T>&, AdamState<T>&, long, const AdamConfig&);

TDI_INSTANTIATE(float)
TDI_INSTANTIATE(double)

#undef TDI_INSTANTIATE

}  // namespace tdi
