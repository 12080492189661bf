#pragma once

// JSON and plain-text artifact emission. Scores are written with 6-decimal
// fixed formatting; p-values keep 7 significant digits. Every artifact
// carries the config hash of the run that produced it.

#include <json.hpp>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "probcast/errors.hpp"
#include "probcast/garch.hpp"
#include "probcast/risk.hpp"
#include "probcast/scoring.hpp"

namespace probcast {

inline std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

// FNV-1a over the canonical config text
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline double fixed6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::stod(buf);
}

inline double sig7(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.7g", v);
  return std::stod(buf);
}

inline nlohmann::json score_summary_to_json(const ScoreSummary& s, std::uint64_t config_hash) {
  nlohmann::json j;
  j["config_hash"] = hash_hex(config_hash);
  j["count"] = s.count;
  j["lps"] = fixed6(s.mean_lps);
  j["crps"] = fixed6(s.mean_crps);
  j["pit_statistic"] = fixed6(s.pit_statistic);
  j["pit_p_value"] = sig7(s.pit_p_value);
  return j;
}

inline nlohmann::json backtest_report_to_json(const BacktestReport& r,
                                              std::uint64_t config_hash) {
  nlohmann::json j;
  j["config_hash"] = hash_hex(config_hash);
  j["alpha"] = r.alpha;
  j["n"] = r.n;
  j["exceedances"] = r.exceedances;
  j["exceed_pct"] = fixed6(r.exceed_pct);
  j["kupiec_lr"] = sig7(r.kupiec_lr);
  j["kupiec_p"] = sig7(r.kupiec_p);
  j["christoffersen_independence_p"] = sig7(r.christoffersen_ind_p);
  j["christoffersen_cc_p"] = sig7(r.christoffersen_cc_p);
  j["christoffersen_degenerate"] = r.christoffersen_degenerate;
  j["es_sufficient"] = r.es_sufficient;
  if (r.es_sufficient) {
    j["es_bootstrap_p"] = sig7(r.es_bootstrap_p);
    j["es_sample_p"] = sig7(r.es_sample_p);
  } else {
    j["es_bootstrap_p"] = nullptr;
    j["es_sample_p"] = nullptr;
  }
  return j;
}

inline nlohmann::json garch_fit_to_json(const GarchFit& fit, std::uint64_t config_hash) {
  nlohmann::json j;
  j["config_hash"] = hash_hex(config_hash);
  j["kind"] = kind_name(fit.params.kind);
  j["mu"] = fit.params.mu;
  j["omega"] = fit.params.omega;
  j["alpha"] = fit.params.alpha;
  j["beta"] = fit.params.beta;
  if (fit.params.kind != DistKind::Normal) j["nu"] = fit.params.nu;
  if (fit.params.kind == DistKind::SkewedStudentT) j["xi"] = fit.params.xi;
  j["nll"] = fit.nll;
  j["iterations"] = fit.iterations;
  return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("write_json: cannot open " + path);
  os << j.dump(2) << "\n";
  if (!os) throw data_error("write_json: write failed for " + path);
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("read_json: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("read_json: " + path + ": " + e.what());
  }
  return j;
}

namespace detail {

inline std::string pfmt(double p) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.7g", p);
  return buf;
}

}  // namespace detail

// Plain-text summary of the VaR/ES backtests at both tolerances, rows in
// the order of the per-index evaluation tables.
inline std::string backtest_text_table(const std::string& label,
                                       std::span<const BacktestReport> reports) {
  std::string out = "Backtest summary: " + label + "\n";
  char line[160];
  auto find = [&](double alpha) -> const BacktestReport* {
    for (const auto& r : reports)
      if (std::fabs(r.alpha - alpha) < 1e-12) return &r;
    return nullptr;
  };
  const BacktestReport* r5 = find(0.05);
  const BacktestReport* r1 = find(0.01);
  auto both = [&](auto get, const char* name, auto fmt) {
    std::string row(name);
    row.resize(20, ' ');
    row += r5 ? fmt(get(*r5)) : std::string("---");
    row += " / ";
    row += r1 ? fmt(get(*r1)) : std::string("---");
    out += row + "\n";
  };
  auto as_count = [](std::size_t v) { return std::to_string(v); };
  auto as_pct = [](double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.2f", v);
    return std::string(b);
  };
  auto as_p = [](double v) { return detail::pfmt(v); };
  both([](const BacktestReport& r) { return r.exceedances; }, "VaR exc.", as_count);
  both([](const BacktestReport& r) { return r.exceed_pct; }, "VaR exc. (%)", as_pct);
  both([](const BacktestReport& r) { return r.kupiec_p; }, "Kupiec", as_p);
  both([](const BacktestReport& r) { return r.christoffersen_cc_p; }, "Christoffersen", as_p);
  auto es_row = [&](const char* name, auto get) {
    std::string row(name);
    row.resize(20, ' ');
    row += (r5 && r5->es_sufficient) ? detail::pfmt(get(*r5)) : std::string("---");
    row += " / ";
    row += (r1 && r1->es_sufficient) ? detail::pfmt(get(*r1)) : std::string("---");
    out += row + "\n";
  };
  es_row("ES bootstrap", [](const BacktestReport& r) { return r.es_bootstrap_p; });
  es_row("ES sample", [](const BacktestReport& r) { return r.es_sample_p; });
  (void)line;
  return out;
}

}  // namespace probcast
