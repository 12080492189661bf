#pragma once

// Forecast-record stream CSV: "date,return,mu,sigma,nu,xi" with unused
// parameter fields left empty (nu for Normal, xi for t). A leading
// "# config_hash=..." comment ties every artifact to the run that made it.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probcast/data.hpp"
#include "probcast/errors.hpp"
#include "probcast/pipeline.hpp"

namespace probcast {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_forecast_csv(const std::string& path,
                               std::span<const ForecastRecord> records,
                               std::uint64_t config_hash) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("write_forecast_csv: cannot open " + path);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, config_hash);
  os << "# config_hash=" << hash << "\n";
  os << "date,return,mu,sigma,nu,xi\n";
  for (const auto& r : records) {
    os << r.date << ',' << detail::format_double(r.realized) << ','
       << detail::format_double(r.spec.mu) << ',' << detail::format_double(r.spec.sigma) << ',';
    if (r.spec.kind != DistKind::Normal) os << detail::format_double(r.spec.nu);
    os << ',';
    if (r.spec.kind == DistKind::SkewedStudentT) os << detail::format_double(r.spec.xi);
    os << '\n';
  }
  if (!os) throw data_error("write_forecast_csv: write failed for " + path);
}

inline std::vector<ForecastRecord> read_forecast_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("read_forecast_csv: cannot open " + path);
  std::vector<ForecastRecord> out;
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("date,return,mu,sigma,nu,xi", 0) != 0)
        throw data_error("read_forecast_csv: " + path + ": unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 6)
      throw data_error("read_forecast_csv: " + path + ":" + std::to_string(line_no) +
                       ": expected 6 fields");
    ForecastRecord r;
    r.date = detail::trim(fields[0]);
    try {
      r.realized = std::stod(fields[1]);
      r.spec.mu = std::stod(fields[2]);
      r.spec.sigma = std::stod(fields[3]);
      const std::string nu = detail::trim(fields[4]);
      const std::string xi = detail::trim(fields[5]);
      if (nu.empty()) {
        r.spec.kind = DistKind::Normal;
      } else if (xi.empty()) {
        r.spec.kind = DistKind::StudentT;
        r.spec.nu = std::stod(nu);
      } else {
        r.spec.kind = DistKind::SkewedStudentT;
        r.spec.nu = std::stod(nu);
        r.spec.xi = std::stod(xi);
      }
    } catch (const std::invalid_argument&) {
      throw data_error("read_forecast_csv: " + path + ":" + std::to_string(line_no) +
                       ": bad numeric field");
    }
    validate(r.spec);
    out.push_back(std::move(r));
  }
  if (!header_seen) throw data_error("read_forecast_csv: " + path + ": missing header");
  return out;
}

// Simulator output: a price CSV loadable by load_csv, with ground-truth
// per-step distribution columns appended (blank on the base-price row).
inline void write_simulated_csv(const std::string& path, const SimulatedSeries& sim,
                                std::uint64_t config_hash, double base_price = 100.0) {
  const PriceSeries prices = to_prices(sim.returns, base_price);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("write_simulated_csv: cannot open " + path);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, config_hash);
  os << "# config_hash=" << hash << "\n";
  os << "date,close,mu,sigma,nu,xi\n";
  for (std::size_t i = 0; i < prices.rows.size(); ++i) {
    os << prices.rows[i].date << ',' << detail::format_double(prices.rows[i].close);
    if (i == 0) {
      os << ",,,,\n";
      continue;
    }
    const DistributionSpec& spec = sim.truth[i - 1];
    os << ',' << detail::format_double(spec.mu) << ',' << detail::format_double(spec.sigma)
       << ',';
    if (spec.kind != DistKind::Normal) os << detail::format_double(spec.nu);
    os << ',';
    if (spec.kind == DistKind::SkewedStudentT) os << detail::format_double(spec.xi);
    os << '\n';
  }
  if (!os) throw data_error("write_simulated_csv: write failed for " + path);
}

inline void write_training_log_csv(const std::string& path, std::span<const EpochLog> log,
                                   std::uint64_t config_hash) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("write_training_log_csv: cannot open " + path);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, config_hash);
  os << "# config_hash=" << hash << "\n";
  os << "epoch,train_nll,val_nll\n";
  for (const auto& e : log)
    os << e.epoch << ',' << detail::format_double(e.train_nll) << ','
       << detail::format_double(e.val_nll) << '\n';
}

}  // namespace probcast
