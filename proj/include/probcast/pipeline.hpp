#pragma once

// Walk-forward orchestration: expanding-window training over the feature
// rows, one-step-ahead forecasts over each test block, identical record
// streams for the neural and GARCH routes.

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "probcast/data.hpp"
#include "probcast/distributions.hpp"
#include "probcast/errors.hpp"
#include "probcast/forecaster.hpp"
#include "probcast/garch.hpp"
#include "probcast/rng.hpp"

namespace probcast {

// One out-of-sample step.
struct ForecastRecord {
  std::string date;
  double realized = 0.0;
  DistributionSpec spec;
};

struct WalkForwardSettings {
  std::size_t min_train = 1008;
  std::size_t step = 504;
  double val_frac = 0.33;
  std::size_t workers = 1;  // walk-forward iterations trained in parallel
};

namespace detail {

inline Dataset gather_rows(const FeatureMatrix& fm, std::size_t seq, std::size_t begin,
                           std::size_t end) {
  Dataset ds;
  const std::size_t n = end - begin;
  ds.inputs = Tensor({n, seq, 2});
  ds.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = begin + i;
    std::copy_n(fm.data.data() + (row - seq) * 2, seq * 2, ds.inputs.data.data() + i * seq * 2);
    ds.targets[i] = fm.ret(row);
  }
  return ds;
}

}  // namespace detail

struct NnIterationResult {
  WalkForwardIteration iteration;
  TrainResult train;
  std::vector<ForecastRecord> records;
};

struct NnRunResult {
  std::vector<NnIterationResult> iterations;
  std::vector<ForecastRecord> records;  // concatenated, chronological
};

// Expanding-window run of one (architecture, distribution) model. Each
// iteration trains from scratch with a seed derived from (config.seed,
// iteration index), so results do not depend on the worker count.
inline NnRunResult run_nn_walk_forward(const ReturnSeries& series, const ModelConfig& config,
                                       const WalkForwardSettings& wf = {}) {
  const FeatureMatrix fm = add_vol_feature(series, config.vol_window);
  const WalkForwardPlan plan = plan_walk_forward(fm.rows(), wf.min_train, wf.step, wf.val_frac);
  const std::size_t seq = config.sequence_length;

  NnRunResult out;
  out.iterations.resize(plan.iterations.size());

  auto run_iteration = [&](std::size_t i) {
    const WalkForwardIteration& it = plan.iterations[i];
    if (it.val_begin <= seq)
      throw config_error("walk-forward: training range too short for sequence length");
    Dataset train = detail::gather_rows(fm, seq, seq, it.val_begin);
    Dataset val = detail::gather_rows(fm, seq, it.val_begin, it.train_end);
    Dataset test = detail::gather_rows(fm, seq, it.test_begin, it.test_end);

    ModelConfig cfg = config;
    cfg.seed = mix_seed(config.seed, 0x17e0 + i);
    Model model = build_model(cfg);
    NnIterationResult res;
    res.iteration = it;
    res.train = train_model(model, train, val);
    const auto specs = predict_batch(model, test);
    res.records.reserve(specs.size());
    for (std::size_t j = 0; j < specs.size(); ++j) {
      const std::size_t row = it.test_begin + j;
      res.records.push_back(
          {series.dates[row + fm.offset], fm.ret(row), specs[j]});
    }
    out.iterations[i] = std::move(res);
  };

  const std::size_t workers = std::max<std::size_t>(1, wf.workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < plan.iterations.size(); ++i) run_iteration(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < std::min(workers, plan.iterations.size()); ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < plan.iterations.size();
             i = next.fetch_add(1))
          run_iteration(i);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& itr : out.iterations)
    out.records.insert(out.records.end(), itr.records.begin(), itr.records.end());
  return out;
}

struct GarchIterationResult {
  WalkForwardIteration iteration;
  GarchFit fit;
  std::vector<ForecastRecord> records;
};

struct GarchRunResult {
  std::vector<GarchIterationResult> iterations;
  std::vector<ForecastRecord> records;
};

// Same plan and test blocks as the neural route; the model is refit once
// per iteration on all returns preceding its test block and the variance
// recursion filters forward through the block.
inline GarchRunResult run_garch_walk_forward(const ReturnSeries& series, DistKind kind,
                                             std::uint64_t seed,
                                             const WalkForwardSettings& wf = {},
                                             std::size_t vol_window = 21) {
  const FeatureMatrix fm = add_vol_feature(series, vol_window);
  const WalkForwardPlan plan = plan_walk_forward(fm.rows(), wf.min_train, wf.step, wf.val_frac);
  const std::size_t off = fm.offset;
  GarchRunResult out;
  for (std::size_t i = 0; i < plan.iterations.size(); ++i) {
    const WalkForwardIteration& it = plan.iterations[i];
    GarchIterationResult res;
    res.iteration = it;
    std::span<const double> fit_range(series.returns.data(), it.test_begin + off);
    res.fit = garch_fit(fit_range, kind, mix_seed(seed, 0x6a + i));
    // filter once through the end of the test block; sigma2[t] is the
    // one-step-ahead forecast made from returns [0, t)
    std::span<const double> filter_range(series.returns.data(), it.test_end + off);
    const std::vector<double> sigma2 = garch_filter(res.fit.params, filter_range);
    for (std::size_t row = it.test_begin; row < it.test_end; ++row) {
      const std::size_t t = row + off;
      DistributionSpec spec{kind, res.fit.params.mu, std::sqrt(sigma2[t]), res.fit.params.nu,
                            res.fit.params.xi};
      res.records.push_back({series.dates[t], series.returns[t], spec});
    }
    out.iterations.push_back(std::move(res));
  }
  for (const auto& itr : out.iterations)
    out.records.insert(out.records.end(), itr.records.begin(), itr.records.end());
  return out;
}

// Ground-truth forecast records for a simulated series over the same test
// rows the models forecast; the oracle for calibration-recovery checks.
inline std::vector<ForecastRecord> truth_records(const SimulatedSeries& sim,
                                                 const WalkForwardSettings& wf = {},
                                                 std::size_t vol_window = 21) {
  const FeatureMatrix fm = add_vol_feature(sim.returns, vol_window);
  const WalkForwardPlan plan = plan_walk_forward(fm.rows(), wf.min_train, wf.step, wf.val_frac);
  std::vector<ForecastRecord> out;
  for (const auto& it : plan.iterations)
    for (std::size_t row = it.test_begin; row < it.test_end; ++row) {
      const std::size_t t = row + fm.offset;
      out.push_back({sim.returns.dates[t], sim.returns.returns[t], sim.truth[t]});
    }
  return out;
}

inline std::vector<DistributionSpec> record_specs(std::span<const ForecastRecord> records) {
  std::vector<DistributionSpec> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.spec);
  return out;
}

inline std::vector<double> record_returns(std::span<const ForecastRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.realized);
  return out;
}

}  // namespace probcast
