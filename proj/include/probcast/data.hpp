#pragma once

// Price ingestion, return and feature construction, windowing, walk-forward
// planning, and the synthetic generators used as test oracles.
//
// Returns are percent log-returns, r_t = 100 * ln(P_t / P_{t-1}).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "probcast/distributions.hpp"
#include "probcast/errors.hpp"
#include "probcast/rng.hpp"
#include "probcast/tensor.hpp"

namespace probcast {

struct PriceRow {
  std::string date;  // ISO-8601, so lexicographic order is chronological
  double close = 0.0;
};

struct PriceSeries {
  std::vector<PriceRow> rows;
  std::string symbol;
  bool was_unsorted = false;  // input needed sorting; callers may warn
};

struct ReturnSeries {
  std::vector<std::string> dates;  // date of P_t for each return
  std::vector<double> returns;
  std::string symbol;

  std::size_t size() const { return returns.size(); }
};

namespace detail {

inline bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// days-from-civil (Howard Hinnant's algorithm), for synthetic date grids
inline long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

inline std::string civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04ld-%02u-%02u", y + (m <= 2), m, d);
  return buf;
}

inline std::string date_offset(const std::string& iso, long offset) {
  const int y = std::stoi(iso.substr(0, 4));
  const int m = std::stoi(iso.substr(5, 2));
  const int d = std::stoi(iso.substr(8, 2));
  return civil_from_days(days_from_civil(y, m, d) + offset);
}

}  // namespace detail

// Reads a price CSV with a "date,close" header (extra columns are ignored).
// Lines starting with '#' are skipped. Rows are sorted by date; duplicate
// dates and non-positive prices are errors with row context.
inline PriceSeries load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("load_csv: cannot open " + path);
  PriceSeries series;
  std::string line;
  long line_no = 0;
  int date_col = -1, close_col = -1;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split_csv_line(line);
    if (!header_seen) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string name = detail::trim(fields[i]);
        if (name == "date") date_col = static_cast<int>(i);
        if (name == "close") close_col = static_cast<int>(i);
      }
      if (date_col < 0 || close_col < 0)
        throw data_error("load_csv: " + path + ": header must contain date and close columns");
      header_seen = true;
      continue;
    }
    if (static_cast<int>(fields.size()) <= std::max(date_col, close_col))
      throw data_error("load_csv: " + path + ":" + std::to_string(line_no) + ": short row");
    PriceRow row;
    row.date = detail::trim(fields[date_col]);
    if (!detail::is_iso_date(row.date))
      throw data_error("load_csv: " + path + ":" + std::to_string(line_no) +
                       ": unparseable date '" + row.date + "'");
    try {
      row.close = std::stod(detail::trim(fields[close_col]));
    } catch (const std::exception&) {
      throw data_error("load_csv: " + path + ":" + std::to_string(line_no) + ": bad close value");
    }
    if (!(row.close > 0.0))
      throw data_error("load_csv: " + path + ":" + std::to_string(line_no) +
                       ": non-positive price " + std::to_string(row.close));
    series.rows.push_back(std::move(row));
  }
  if (!header_seen) throw data_error("load_csv: " + path + ": empty file");
  if (series.rows.empty()) throw data_error("load_csv: " + path + ": no data rows");
  if (!std::is_sorted(series.rows.begin(), series.rows.end(),
                      [](const PriceRow& a, const PriceRow& b) { return a.date < b.date; })) {
    std::stable_sort(series.rows.begin(), series.rows.end(),
                     [](const PriceRow& a, const PriceRow& b) { return a.date < b.date; });
    series.was_unsorted = true;
  }
  for (std::size_t i = 1; i < series.rows.size(); ++i)
    if (series.rows[i].date == series.rows[i - 1].date)
      throw data_error("load_csv: " + path + ": duplicate date " + series.rows[i].date);
  return series;
}

inline ReturnSeries to_returns(const PriceSeries& prices) {
  if (prices.rows.size() < 2) throw data_error("to_returns: need at least two prices");
  ReturnSeries out;
  out.symbol = prices.symbol;
  out.dates.reserve(prices.rows.size() - 1);
  out.returns.reserve(prices.rows.size() - 1);
  for (std::size_t i = 1; i < prices.rows.size(); ++i) {
    out.dates.push_back(prices.rows[i].date);
    out.returns.push_back(100.0 * std::log(prices.rows[i].close / prices.rows[i - 1].close));
  }
  return out;
}

// Two-channel feature matrix: the return itself and the rolling sample
// standard deviation of the previous `window` returns. The first `window`
// rows have no volatility estimate and are dropped from the usable range:
// feature row j corresponds to return index j + window.
struct FeatureMatrix {
  std::size_t offset = 0;  // return index of feature row 0
  std::vector<double> data;  // row-major [n, 2]

  std::size_t rows() const { return data.size() / 2; }
  double ret(std::size_t j) const { return data[2 * j]; }
  double vol(std::size_t j) const { return data[2 * j + 1]; }
};

inline FeatureMatrix add_vol_feature(const ReturnSeries& returns, std::size_t window = 21) {
  if (window < 2) throw config_error("add_vol_feature: window must be at least 2");
  if (returns.size() <= window)
    throw data_error("add_vol_feature: series shorter than volatility window");
  FeatureMatrix fm;
  fm.offset = window;
  const auto& r = returns.returns;
  const std::size_t n = r.size() - window;
  fm.data.resize(2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t t = j + window;  // return index
    double mean = 0.0;
    for (std::size_t i = t - window; i < t; ++i) mean += r[i];
    mean /= static_cast<double>(window);
    double ss = 0.0;
    for (std::size_t i = t - window; i < t; ++i) ss += (r[i] - mean) * (r[i] - mean);
    fm.data[2 * j] = r[t];
    fm.data[2 * j + 1] = std::sqrt(ss / static_cast<double>(window - 1));
  }
  return fm;
}

// Windowed training pairs: window row j covers feature rows [j-seq_len, j)
// and its target is the return at feature row j.
struct SequenceDataset {
  std::size_t seq_len = 0;
  std::size_t first_target = 0;  // == seq_len
  const FeatureMatrix* features = nullptr;

  std::size_t count() const { return features->rows() - seq_len; }

  // copy window for target row j into out[seq_len * 2]
  void window_into(std::size_t target_row, double* out) const {
    const double* src = features->data.data() + (target_row - seq_len) * 2;
    std::copy_n(src, seq_len * 2, out);
  }
  double target(std::size_t target_row) const { return features->ret(target_row); }
};

inline SequenceDataset make_sequences(const FeatureMatrix& features, std::size_t seq_len = 10) {
  if (features.rows() <= seq_len)
    throw data_error("make_sequences: fewer usable rows than sequence length");
  SequenceDataset ds;
  ds.seq_len = seq_len;
  ds.first_target = seq_len;
  ds.features = &features;
  return ds;
}

// One walk-forward iteration over feature-row indices: expanding train
// range, chronologically-last validation slice, and the next test block.
struct WalkForwardIteration {
  std::size_t train_begin = 0;  // always 0
  std::size_t train_end = 0;
  std::size_t val_begin = 0;    // inside [train_begin, train_end)
  std::size_t test_begin = 0;
  std::size_t test_end = 0;
};

struct WalkForwardPlan {
  std::size_t n = 0;
  std::vector<WalkForwardIteration> iterations;
};

inline WalkForwardPlan plan_walk_forward(std::size_t n, std::size_t min_train = 1008,
                                         std::size_t step = 504, double val_frac = 0.33) {
  if (n <= min_train)
    throw config_error("plan_walk_forward: series length " + std::to_string(n) +
                       " does not exceed the minimum training window " +
                       std::to_string(min_train));
  if (!(val_frac > 0.0 && val_frac < 1.0))
    throw config_error("plan_walk_forward: val_frac outside (0, 1)");
  WalkForwardPlan plan;
  plan.n = n;
  for (std::size_t train_end = min_train; train_end < n; train_end += step) {
    WalkForwardIteration it;
    it.train_begin = 0;
    it.train_end = train_end;
    const std::size_t val_len =
        std::max<std::size_t>(1, static_cast<std::size_t>(val_frac * train_end));
    it.val_begin = train_end - val_len;
    it.test_begin = train_end;
    it.test_end = std::min(n, train_end + step);
    plan.iterations.push_back(it);
  }
  return plan;
}

// ---- synthetic generators ----

enum class Dgp { IidNormal, GarchNormal, GarchT, GarchSkewT };

struct SimParams {
  double mu = 0.0;
  double sigma = 1.0;   // iid_normal scale
  double omega = 0.05;  // garch recursion
  double alpha = 0.08;
  double beta = 0.88;
  double nu = 7.0;
  double xi = 0.9;
};

struct SimulatedSeries {
  ReturnSeries returns;
  std::vector<DistributionSpec> truth;  // per-step generating distribution
};

inline SimulatedSeries simulate(Dgp dgp, const SimParams& params, std::size_t n,
                                std::uint64_t seed, const std::string& start_date = "2000-01-03") {
  if (n < 1) throw config_error("simulate: n must be at least 1");
  SimulatedSeries out;
  out.returns.symbol = "synthetic";
  out.returns.dates.reserve(n);
  out.returns.returns.reserve(n);
  out.truth.reserve(n);
  Rng rng(seed);
  DistKind kind = DistKind::Normal;
  switch (dgp) {
    case Dgp::IidNormal:
    case Dgp::GarchNormal: kind = DistKind::Normal; break;
    case Dgp::GarchT: kind = DistKind::StudentT; break;
    case Dgp::GarchSkewT: kind = DistKind::SkewedStudentT; break;
  }
  const bool garch = dgp != Dgp::IidNormal;
  if (garch && !(params.omega > 0.0 && params.alpha >= 0.0 && params.beta >= 0.0 &&
                 params.alpha + params.beta < 1.0))
    throw std::domain_error("simulate: garch parameters violate stationarity");
  double sigma2 = garch ? params.omega / (1.0 - params.alpha - params.beta)
                        : params.sigma * params.sigma;
  for (std::size_t t = 0; t < n; ++t) {
    const double sigma = std::sqrt(sigma2);
    DistributionSpec spec{kind, params.mu, sigma, params.nu, params.xi};
    const double z = sample_one(DistributionSpec{kind, 0.0, 1.0, params.nu, params.xi}, rng);
    const double r = params.mu + sigma * z;
    out.returns.dates.push_back(detail::date_offset(start_date, static_cast<long>(t)));
    out.returns.returns.push_back(r);
    out.truth.push_back(spec);
    if (garch) {
      const double eps = r - params.mu;
      sigma2 = params.omega + params.alpha * eps * eps + params.beta * sigma2;
    }
  }
  return out;
}

// Prices reconstructed from percent log-returns, P_0 = base at the day
// before the first return.
inline PriceSeries to_prices(const ReturnSeries& returns, double base = 100.0) {
  PriceSeries prices;
  prices.symbol = returns.symbol;
  if (returns.size() == 0) return prices;
  prices.rows.push_back({detail::date_offset(returns.dates.front(), -1), base});
  double p = base;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    p *= std::exp(returns.returns[t] / 100.0);
    prices.rows.push_back({returns.dates[t], p});
  }
  return prices;
}

}  // namespace probcast
