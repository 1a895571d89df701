#pragma once

// Synthetic dimensionality-reduction study: plant W = A (.) B (.) C + sigma E,
// fit sum-of-BD, CP and Tucker models over rank grids, and report SNR against
// the parameter count of each model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "bcast/baselines.hpp"
#include "bcast/broadcast_ops.hpp"
#include "bcast/decomposition.hpp"
#include "bcast/io.hpp"
#include "bcast/random.hpp"
#include "bcast/tensor.hpp"

namespace bcast {

struct ExperimentConfig {
  std::array<std::size_t, 3> dims{16, 16, 16};
  double sigma = 0.1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::size_t> bd_R_grid{1, 2};
  std::vector<std::size_t> cp_R_grid{1, 2, 4, 8, 16, 32, 64};
  std::vector<std::size_t> tucker_rank_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  FitConfig fit;
  std::filesystem::path output_dir;  // empty: compute only, write nothing

  void validate() const {
    for (std::size_t d : dims) {
      if (d < 1) throw error("experiment: dims must be >= 1");
    }
    if (!(sigma >= 0.0)) throw error("experiment: sigma must be >= 0");
    if (seeds.empty()) throw error("experiment: at least one seed is required");
    if (bd_R_grid.empty() || cp_R_grid.empty() || tucker_rank_grid.empty()) {
      throw error("experiment: rank grids must be non-empty");
    }
    fit.validate();
  }
};

struct ReportRow {
  std::string method;  // "sum-bd", "cp" or "tucker"
  std::size_t rank_param = 0;
  std::size_t n_params = 0;
  double snr_signal_db = 0.0;
  double snr_observed_db = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
};

struct SyntheticData {
  BDFactors planted;
  Tensor signal;    // A (.) B (.) C
  Tensor observed;  // signal + sigma * E
};

/// Draws A (I x J x 1), B (I x 1 x K), C (1 x J x K) and the noise E, in that
/// order, i.i.d. standard normal from a generator seeded with `seed`.
inline SyntheticData generate_synthetic(std::array<std::size_t, 3> dims, double sigma,
                                        std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw error("generate_synthetic: sigma must be >= 0");
  Rng rng(seed);
  SyntheticData d;
  d.planted = random_bd_factors(dims[0], dims[1], dims[2], rng);
  d.signal = reconstruct(d.planted);
  const Tensor noise = random_normal(Shape{dims[0], dims[1], dims[2]}, rng);
  d.observed = sigma == 0.0 ? d.signal : sum(d.signal, scaled(noise, sigma));
  return d;
}

inline std::size_t expected_param_count(const std::string& method, std::size_t rank,
                                        std::array<std::size_t, 3> dims) {
  const auto [i, j, k] = dims;
  if (method == "sum-bd") return rank * (i * j + i * k + j * k);
  if (method == "cp") return rank * (i + j + k);
  if (method == "tucker") return rank * rank * rank + rank * (i + j + k);
  throw error("unknown method '" + method + "'");
}

/// Seed of the model initialization for a cell, independent of the data stream.
inline std::uint64_t fit_seed(std::uint64_t data_seed) { return mix_seed(data_seed, 1); }

namespace detail {

struct CellResult {
  ReportRow row;
  std::vector<std::pair<std::string, Tensor>> factors;
};

inline CellResult run_cell(const std::string& method, std::size_t rank, std::uint64_t seed,
                           const SyntheticData& data, const ExperimentConfig& cfg) {
  CellResult cell;
  cell.row.method = method;
  cell.row.rank_param = rank;
  cell.row.seed = seed;
  cell.row.n_params = expected_param_count(method, rank, cfg.dims);
  FitConfig fc = cfg.fit;
  fc.seed = fit_seed(seed);
  try {
    Tensor estimate;
    if (method == "sum-bd") {
      auto fit = sum_bd_hals(data.observed, rank, fc);
      estimate = reconstruct(fit.terms);
      cell.row.iterations = fit.trace.iterations_run;
      cell.row.n_params = param_count(fit.terms);
      for (std::size_t r = 0; r < fit.terms.size(); ++r) {
        const std::string s = std::to_string(r + 1);
        cell.factors.emplace_back("A" + s, fit.terms[r].A);
        cell.factors.emplace_back("B" + s, fit.terms[r].B);
        cell.factors.emplace_back("C" + s, fit.terms[r].C);
      }
    } else if (method == "cp") {
      auto fit = cp_als(data.observed, rank, fc);
      estimate = reconstruct(fit.model);
      cell.row.iterations = fit.trace.iterations_run;
      cell.row.n_params = param_count(fit.model);
      cell.factors = {{"U1", fit.model.U1}, {"U2", fit.model.U2}, {"U3", fit.model.U3}};
    } else {
      auto fit = tucker_hooi(data.observed, {rank, rank, rank}, fc);
      estimate = reconstruct(fit.model);
      cell.row.iterations = fit.trace.iterations_run;
      cell.row.n_params = param_count(fit.model);
      cell.factors = {{"G", fit.model.core},
                      {"U1", fit.model.U1},
                      {"U2", fit.model.U2},
                      {"U3", fit.model.U3}};
    }
    cell.row.snr_signal_db = snr_db(data.signal, estimate);
    cell.row.snr_observed_db = snr_db(data.observed, estimate);
  } catch (const error&) {
    cell.row.snr_signal_db = std::numeric_limits<double>::quiet_NaN();
    cell.row.snr_observed_db = std::numeric_limits<double>::quiet_NaN();
    cell.row.iterations = 0;
    cell.factors.clear();
  }
  return cell;
}

inline double median_ignoring_nan(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline std::string factor_file_name(const ReportRow& row, const std::string& factor) {
  return row.method + "_r" + std::to_string(row.rank_param) + "_seed" + std::to_string(row.seed) +
         "_" + factor + ".btf";
}

inline const char* report_header() {
  return "method,rank_param,n_params,snr_signal_db,snr_observed_db,iterations,seed";
}

inline std::string report_csv(const ExperimentReport& report) {
  std::string out = report_header();
  out += '\n';
  for (const auto& r : report.rows) {
    out += r.method + ',' + std::to_string(r.rank_param) + ',' + std::to_string(r.n_params) + ',' +
           format_double(r.snr_signal_db) + ',' + format_double(r.snr_observed_db) + ',' +
           std::to_string(r.iterations) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

/// Median over seeds of one (method, rank) configuration.
struct SummaryPoint {
  std::string method;
  std::size_t rank_param = 0;
  std::size_t n_params = 0;
  double median_snr_signal_db = 0.0;
  double median_snr_observed_db = 0.0;
};

inline std::vector<SummaryPoint> summarize(const ExperimentReport& report) {
  std::vector<SummaryPoint> pts;
  for (std::size_t i = 0; i < report.rows.size();) {
    const auto& first = report.rows[i];
    std::vector<double> sig, obs;
    std::size_t j = i;
    for (; j < report.rows.size() && report.rows[j].method == first.method &&
           report.rows[j].rank_param == first.rank_param;
         ++j) {
      sig.push_back(report.rows[j].snr_signal_db);
      obs.push_back(report.rows[j].snr_observed_db);
    }
    pts.push_back({first.method, first.rank_param, first.n_params,
                   detail::median_ignoring_nan(sig), detail::median_ignoring_nan(obs)});
    i = j;
  }
  return pts;
}

inline std::string plot_data(const std::vector<SummaryPoint>& points, const std::string& method,
                             const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "# method " << method << ", dims " << cfg.dims[0] << 'x' << cfg.dims[1] << 'x'
      << cfg.dims[2] << ", sigma " << format_double(cfg.sigma) << ", " << cfg.seeds.size()
      << " seeds\n";
  out << "# n_params median_snr_signal_db median_snr_observed_db rank_param\n";
  for (const auto& p : points) {
    if (p.method != method) continue;
    out << p.n_params << ' ' << format_double(p.median_snr_signal_db) << ' '
        << format_double(p.median_snr_observed_db) << ' ' << p.rank_param << '\n';
  }
  return out.str();
}

/// Runs every (method, rank, seed) cell. A fit that throws is recorded with
/// NaN SNRs and the run continues. Rows are sorted by (method, rank, seed).
/// When cfg.output_dir is set, writes report.csv, plotdata_<method>.dat and
/// the fitted factors under factors/.
inline ExperimentReport run_experiment(
    const ExperimentConfig& cfg, const std::function<void(const ReportRow&)>& on_row = {}) {
  cfg.validate();
  const bool write = !cfg.output_dir.empty();
  const std::filesystem::path factor_dir = cfg.output_dir / "factors";
  if (write) std::filesystem::create_directories(factor_dir);

  const std::vector<std::pair<std::string, const std::vector<std::size_t>*>> grids{
      {"sum-bd", &cfg.bd_R_grid}, {"cp", &cfg.cp_R_grid}, {"tucker", &cfg.tucker_rank_grid}};

  ExperimentReport report;
  for (std::uint64_t seed : cfg.seeds) {
    const SyntheticData data = generate_synthetic(cfg.dims, cfg.sigma, seed);
    for (const auto& [method, grid] : grids) {
      for (std::size_t rank : *grid) {
        detail::CellResult cell = detail::run_cell(method, rank, seed, data, cfg);
        if (write) {
          for (const auto& [name, t] : cell.factors) {
            write_btf(factor_dir / factor_file_name(cell.row, name), t);
          }
        }
        if (on_row) on_row(cell.row);
        report.rows.push_back(std::move(cell.row));
      }
    }
  }
  std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.method, a.rank_param, a.seed) < std::tie(b.method, b.rank_param, b.seed);
  });

  if (write) {
    std::ofstream csv(cfg.output_dir / "report.csv", std::ios::binary);
    csv << report_csv(report);
    if (!csv) throw format_error("experiment: cannot write report.csv");
    const auto points = summarize(report);
    for (const auto& [method, grid] : grids) {
      std::ofstream dat(cfg.output_dir / ("plotdata_" + method + ".dat"), std::ios::binary);
      dat << plot_data(points, method, cfg);
      if (!dat) throw format_error("experiment: cannot write plot data for " + method);
    }
  }
  return report;
}

}  // namespace bcast
