#pragma once

// The two forecasting architectures and their training loop.
//
//   CNN1D: [b,10,2] -> conv(k=2, 256 filters, relu) -> [b,9,256]
//          -> maxpool(2) -> [b,4,256] -> flatten -> [b,1024]
//          -> dropout -> dense -> [b,K]
//   LSTM:  [b,10,2] -> lstm(128) -> dropout -> lstm(64) -> dropout
//          -> lstm(32, last step) -> dropout -> dense -> [b,K]
//
// K is the distribution parameter count (2/3/4). The dense head is linear;
// raw outputs pass through the NLL link functions. Training is mini-batch
// Adam on the configured NLL with an L2 penalty on weight matrices, global
// gradient-norm clipping, and best-validation-checkpoint retention.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "probcast/autodiff.hpp"
#include "probcast/checkpoint.hpp"
#include "probcast/distributions.hpp"
#include "probcast/errors.hpp"
#include "probcast/nll_losses.hpp"
#include "probcast/optimizer.hpp"
#include "probcast/rng.hpp"
#include "probcast/tensor.hpp"

namespace probcast {

enum class Architecture { CNN1D, LSTM };

inline const char* architecture_name(Architecture a) {
  return a == Architecture::CNN1D ? "cnn" : "lstm";
}

// Defaults are the selected-hyperparameter column; change them only through
// configuration so runs stay reproducible.
struct ModelConfig {
  Architecture architecture = Architecture::LSTM;
  DistKind dist = DistKind::SkewedStudentT;
  std::size_t sequence_length = 10;
  std::array<std::size_t, 3> lstm_units{128, 64, 32};
  std::size_t conv_filters = 256;
  std::size_t conv_kernel = 2;
  std::size_t pool_size = 2;
  double dropout = 0.02;
  double l2 = 0.002;
  double learning_rate = 0.002;
  std::size_t batch_size = 128;
  int max_epochs = 300;
  int patience = 50;
  double clip_norm = 5.0;
  std::size_t vol_window = 21;
  std::uint64_t seed = 0;
};

inline void validate(const ModelConfig& c) {
  if (c.sequence_length < 1 || c.batch_size < 1 || c.conv_kernel < 1 || c.pool_size < 1 ||
      c.conv_filters < 1)
    throw config_error("model config: sizes must be positive");
  if (c.max_epochs < 0 || c.patience < 0) throw config_error("model config: negative epochs");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw config_error("model config: dropout range");
  if (!(c.learning_rate > 0.0)) throw config_error("model config: learning rate");
  if (c.sequence_length < c.conv_kernel)
    throw config_error("model config: sequence shorter than conv kernel");
}

struct Model {
  ModelConfig config;
  std::vector<Parameter> params;

  int head_width() const { return param_count(config.dist); }
};

namespace detail {

inline Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data) v = limit * (2.0 * rng.uniform() - 1.0);
  return t;
}

inline Tensor uniform_scaled(Shape shape, double limit, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = limit * (2.0 * rng.uniform() - 1.0);
  return t;
}

// gate order i,f,g,o; forget-gate bias starts at 1
inline Tensor lstm_bias(std::size_t h) {
  Tensor t({4 * h});
  for (std::size_t j = h; j < 2 * h; ++j) t.data[j] = 1.0;
  return t;
}

}  // namespace detail

inline Model build_model(const ModelConfig& config) {
  validate(config);
  Model m;
  m.config = config;
  Rng rng(mix_seed(config.seed, 0x1a11));
  const std::size_t k = static_cast<std::size_t>(m.head_width());
  if (config.architecture == Architecture::LSTM) {
    std::size_t in = 2;
    for (std::size_t layer = 0; layer < config.lstm_units.size(); ++layer) {
      const std::size_t h = config.lstm_units[layer];
      const std::string base = "lstm" + std::to_string(layer);
      m.params.emplace_back(base + ".wx",
                            detail::glorot_uniform({in, 4 * h}, in, 4 * h, rng), true);
      m.params.emplace_back(base + ".wh",
                            detail::uniform_scaled({h, 4 * h},
                                                   1.0 / std::sqrt(static_cast<double>(h)), rng),
                            true);
      m.params.emplace_back(base + ".b", detail::lstm_bias(h), false);
      in = h;
    }
    m.params.emplace_back("head.w", detail::glorot_uniform({in, k}, in, k, rng), true);
    m.params.emplace_back("head.b", Tensor({k}), false);
  } else {
    const std::size_t c = 2;
    const std::size_t f = config.conv_filters;
    const std::size_t kk = config.conv_kernel;
    m.params.emplace_back("conv.kernel",
                          detail::glorot_uniform({kk, c, f}, kk * c, f, rng), true);
    m.params.emplace_back("conv.bias", Tensor({f}), false);
    const std::size_t tout = config.sequence_length - kk + 1;
    const std::size_t flat = (tout / config.pool_size) * f;
    m.params.emplace_back("head.w", detail::glorot_uniform({flat, k}, flat, k, rng), true);
    m.params.emplace_back("head.b", Tensor({k}), false);
  }
  return m;
}

namespace detail {

inline Parameter& find_param(Model& m, const std::string& name) {
  for (auto& p : m.params)
    if (p.name == name) return p;
  throw config_error("model: missing parameter " + name);
}

// Raw head outputs [b, K] for a batch [b, seq, 2].
inline Graph::NodeId forward_raw(Model& m, Graph& g, Tensor batch, bool training,
                                 Rng* dropout_rng) {
  const ModelConfig& c = m.config;
  Graph::NodeId x = g.input(std::move(batch));
  auto drop = [&](Graph::NodeId n) {
    if (!training || c.dropout == 0.0) return n;
    return g.dropout(n, c.dropout, true, *dropout_rng);
  };
  if (c.architecture == Architecture::LSTM) {
    for (std::size_t layer = 0; layer < c.lstm_units.size(); ++layer) {
      const std::string base = "lstm" + std::to_string(layer);
      const bool last = layer + 1 == c.lstm_units.size();
      x = g.lstm(x, g.param(find_param(m, base + ".wx")), g.param(find_param(m, base + ".wh")),
                 g.param(find_param(m, base + ".b")), !last);
      x = drop(x);
    }
  } else {
    x = g.conv1d(x, g.param(find_param(m, "conv.kernel")), g.param(find_param(m, "conv.bias")),
                 Activation::Relu);
    x = g.maxpool1d(x, c.pool_size);
    x = g.flatten(x);
    x = drop(x);
  }
  return g.dense(x, g.param(find_param(m, "head.w")), g.param(find_param(m, "head.b")),
                 Activation::Linear);
}

}  // namespace detail

// Windowed training data: inputs [n, seq, 2] with aligned targets.
struct Dataset {
  Tensor inputs;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
  std::size_t window_len() const { return size() ? inputs.numel() / size() : 0; }
};

struct EpochLog {
  int epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_nll = std::numeric_limits<double>::infinity();
  int epochs_run = 0;
};

namespace detail {

inline Tensor gather_batch(const Dataset& data, std::span<const std::size_t> idx,
                           std::size_t seq, std::size_t width) {
  Tensor batch({idx.size(), seq, width});
  const std::size_t wlen = seq * width;
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy_n(data.inputs.data.data() + idx[i] * wlen, wlen, batch.data.data() + i * wlen);
  return batch;
}

// mean NLL of the model on a dataset, evaluated in inference mode
inline double eval_nll(Model& m, const Dataset& data) {
  const std::size_t seq = m.config.sequence_length;
  const std::size_t bs = m.config.batch_size;
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += bs) {
    const std::size_t stop = std::min(data.size(), start + bs);
    idx.clear();
    for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
    Graph g;
    const auto raw = detail::forward_raw(m, g, gather_batch(data, idx, seq, 2), false, nullptr);
    const auto& rawv = g.value(raw).data;
    const NllResult res = nll_loss(m.config.dist,
                                   std::span<const double>(rawv.data(), rawv.size()),
                                   std::span<const double>(data.targets.data() + start,
                                                           stop - start));
    total += res.loss * static_cast<double>(stop - start);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace detail

// Runs up to max_epochs of mini-batch Adam, evaluating the validation NLL
// (without the L2 penalty) after each epoch and retaining the parameters of
// the best epoch. Stops early when the best epoch is `patience` epochs old.
inline TrainResult train_model(Model& m, const Dataset& train, const Dataset& val) {
  validate(m.config);
  if (val.size() == 0) throw config_error("train: empty validation set");
  if (train.size() == 0) throw config_error("train: empty training set");
  const std::size_t seq = m.config.sequence_length;

  AdamState adam;
  adam.lr = m.config.learning_rate;
  adam.init(m.params);
  Rng shuffle_rng(mix_seed(m.config.seed, 0x5u));
  Rng dropout_rng(mix_seed(m.config.seed, 0xdu));

  TrainResult result;
  std::vector<Tensor> best;
  for (const auto& p : m.params) best.push_back(p.tensor);
  result.best_val_nll = detail::eval_nll(m, val);
  result.best_epoch = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= m.config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order.data(), order.size());
    double train_total = 0.0;
    for (std::size_t start = 0; start < train.size(); start += m.config.batch_size) {
      const std::size_t stop = std::min(train.size(), start + m.config.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      std::vector<double> targets(stop - start);
      for (std::size_t i = 0; i < idx.size(); ++i) targets[i] = train.targets[idx[i]];
      Graph g;
      const auto raw =
          detail::forward_raw(m, g, detail::gather_batch(train, idx, seq, 2), true, &dropout_rng);
      const auto& rawv = g.value(raw).data;
      NllResult res;
      try {
        res = nll_loss(m.config.dist, std::span<const double>(rawv.data(), rawv.size()),
                       targets);
      } catch (const numeric_error& e) {
        throw numeric_error("train: epoch " + std::to_string(epoch) + ", batch at " +
                            std::to_string(start) + ": " + e.what());
      }
      train_total += res.loss * static_cast<double>(stop - start);
      g.backward_with(raw, res.grad);
      l2_penalty(m.params, m.config.l2);
      clip_global_norm(m.params, m.config.clip_norm);
      adam_step(m.params, adam);
    }
    const double val_nll = detail::eval_nll(m, val);
    result.log.push_back({epoch, train_total / static_cast<double>(train.size()), val_nll});
    result.epochs_run = epoch;
    if (val_nll < result.best_val_nll) {
      result.best_val_nll = val_nll;
      result.best_epoch = epoch;
      for (std::size_t i = 0; i < m.params.size(); ++i) best[i] = m.params[i].tensor;
    }
    if (m.config.patience > 0 && epoch - result.best_epoch >= m.config.patience) break;
  }
  for (std::size_t i = 0; i < m.params.size(); ++i) m.params[i].tensor = best[i];
  return result;
}

// One-step-ahead distribution for a single window [seq, 2].
inline DistributionSpec predict(Model& m, std::span<const double> window) {
  const std::size_t expect = m.config.sequence_length * 2;
  if (window.size() != expect)
    throw shape_error("predict: window has " + std::to_string(window.size()) +
                      " values, expected " + std::to_string(expect));
  Graph g;
  Tensor batch({1, m.config.sequence_length, 2},
               std::vector<double>(window.begin(), window.end()));
  const auto raw = detail::forward_raw(m, g, std::move(batch), false, nullptr);
  const auto& rv = g.value(raw).data;
  RawParamVector r;
  r.a = rv[0];
  r.s = rv[1];
  if (rv.size() > 2) r.d = rv[2];
  if (rv.size() > 3) r.k = rv[3];
  return to_spec(link_transform(r, m.config.dist), m.config.dist);
}

// Batched prediction over a dataset's windows, in input order.
inline std::vector<DistributionSpec> predict_batch(Model& m, const Dataset& data) {
  const std::size_t seq = m.config.sequence_length;
  const int k = m.head_width();
  std::vector<DistributionSpec> out;
  out.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += m.config.batch_size) {
    const std::size_t stop = std::min(data.size(), start + m.config.batch_size);
    idx.clear();
    for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
    Graph g;
    const auto raw =
        detail::forward_raw(m, g, detail::gather_batch(data, idx, seq, 2), false, nullptr);
    const auto& rv = g.value(raw).data;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      RawParamVector r;
      r.a = rv[i * k + 0];
      r.s = rv[i * k + 1];
      if (k > 2) r.d = rv[i * k + 2];
      if (k > 3) r.k = rv[i * k + 3];
      out.push_back(to_spec(link_transform(r, m.config.dist), m.config.dist));
    }
  }
  return out;
}

}  // namespace probcast
