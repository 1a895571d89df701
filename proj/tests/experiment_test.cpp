#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "support.hpp"

using namespace bcast;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dims = {6, 5, 4};
  cfg.sigma = 0.1;
  cfg.seeds = {3, 1};
  cfg.bd_R_grid = {1, 2};
  cfg.cp_R_grid = {1, 3};
  cfg.tucker_rank_grid = {2, 4};
  cfg.fit.max_iters = 60;
  return cfg;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST(Synthetic, NoiselessObservedEqualsSignal) {
  const SyntheticData d = generate_synthetic({5, 4, 3}, 0.0, 9);
  EXPECT_EQ(d.observed, d.signal);
  EXPECT_EQ(d.signal, reconstruct(d.planted));
}

TEST(Synthetic, SeedDeterministic) {
  const SyntheticData a = generate_synthetic({5, 4, 3}, 0.3, 9);
  const SyntheticData b = generate_synthetic({5, 4, 3}, 0.3, 9);
  const SyntheticData c = generate_synthetic({5, 4, 3}, 0.3, 10);
  EXPECT_EQ(a.observed, b.observed);
  EXPECT_EQ(a.signal, b.signal);
  EXPECT_NE(a.observed, c.observed);
}

TEST(Synthetic, FrozenNoiseLevel) {
  const SyntheticData d = generate_synthetic({8, 8, 8}, 0.1, 1);
  EXPECT_NEAR(snr_db(d.signal, d.observed), 21.462725515127822, 1e-9);
}

TEST(Synthetic, NegativeSigmaRejected) {
  EXPECT_THROW(generate_synthetic({2, 2, 2}, -1.0, 1), error);
}

TEST(ExpectedParamCount, Formulas) {
  EXPECT_EQ(expected_param_count("sum-bd", 1, {32, 32, 32}), 3072u);
  EXPECT_EQ(expected_param_count("cp", 10, {32, 32, 32}), 960u);
  EXPECT_EQ(expected_param_count("tucker", 4, {32, 32, 32}), 448u);
  EXPECT_THROW(expected_param_count("trd", 1, {2, 2, 2}), error);
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig cfg = small_config();
  cfg.sigma = -0.1;
  EXPECT_THROW(cfg.validate(), error);
  cfg = small_config();
  cfg.cp_R_grid.clear();
  EXPECT_THROW(cfg.validate(), error);
  cfg = small_config();
  cfg.seeds.clear();
  EXPECT_THROW(cfg.validate(), error);
}

TEST(RunExperiment, RowsCountedAndSorted) {
  const ExperimentConfig cfg = small_config();
  std::size_t streamed = 0;
  const ExperimentReport rep = run_experiment(cfg, [&](const ReportRow&) { ++streamed; });
  EXPECT_EQ(rep.rows.size(), 2u * (2 + 2 + 2));
  EXPECT_EQ(streamed, rep.rows.size());
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    EXPECT_TRUE(std::tie(a.method, a.rank_param, a.seed) < std::tie(b.method, b.rank_param, b.seed));
  }
  EXPECT_EQ(rep.rows.front().method, "cp");
  EXPECT_EQ(rep.rows.front().seed, 1u);
}

TEST(RunExperiment, OutputsAndParamCountsFromFactorFiles) {
  TempDir dir("bcast_experiment_test");
  ExperimentConfig cfg = small_config();
  cfg.output_dir = dir.path;
  const ExperimentReport rep = run_experiment(cfg);

  const std::string csv = slurp(dir.path / "report.csv");
  EXPECT_EQ(csv, report_csv(rep));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), report_header());
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  for (const char* m : {"sum-bd", "cp", "tucker"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path / (std::string("plotdata_") + m + ".dat")));
  }

  const std::map<std::string, std::vector<std::string>> names{
      {"sum-bd", {}}, {"cp", {"U1", "U2", "U3"}}, {"tucker", {"G", "U1", "U2", "U3"}}};
  for (const ReportRow& row : rep.rows) {
    std::vector<std::string> factors = names.at(row.method);
    if (row.method == "sum-bd") {
      for (std::size_t r = 1; r <= row.rank_param; ++r)
        for (const char* f : {"A", "B", "C"}) factors.push_back(f + std::to_string(r));
    }
    std::size_t n = 0;
    for (const auto& f : factors) n += read_btf(dir.path / "factors" / factor_file_name(row, f)).numel();
    EXPECT_EQ(n, row.n_params) << row.method << " r=" << row.rank_param;
    EXPECT_EQ(row.n_params, expected_param_count(row.method, row.rank_param, cfg.dims));
  }
}

TEST(RunExperiment, ByteIdenticalReports) {
  TempDir a("bcast_experiment_a"), b("bcast_experiment_b");
  ExperimentConfig cfg = small_config();
  cfg.output_dir = a.path;
  run_experiment(cfg);
  cfg.output_dir = b.path;
  run_experiment(cfg);
  EXPECT_EQ(slurp(a.path / "report.csv"), slurp(b.path / "report.csv"));
  EXPECT_EQ(slurp(a.path / "plotdata_cp.dat"), slurp(b.path / "plotdata_cp.dat"));
}

TEST(RunExperiment, FailedCellRecordedAsNan) {
  ExperimentConfig cfg = small_config();
  cfg.seeds = {1};
  cfg.tucker_rank_grid = {2, 9};
  const ExperimentReport rep = run_experiment(cfg);
  bool seen = false;
  for (const auto& r : rep.rows) {
    if (r.method == "tucker" && r.rank_param == 9) {
      seen = true;
      EXPECT_TRUE(std::isnan(r.snr_signal_db));
      EXPECT_TRUE(std::isnan(r.snr_observed_db));
      EXPECT_EQ(r.iterations, 0);
    }
  }
  EXPECT_TRUE(seen);
  EXPECT_NE(report_csv(rep).find(",nan,nan,0,1\n"), std::string::npos);
}

TEST(RunExperiment, NoiselessSingleTermIsRecovered) {
  ExperimentConfig cfg;
  cfg.dims = {8, 8, 8};
  cfg.sigma = 0.0;
  cfg.bd_R_grid = {1};
  cfg.cp_R_grid = {1};
  cfg.tucker_rank_grid = {1};
  const ExperimentReport rep = run_experiment(cfg);
  std::vector<double> bd, cp;
  for (const auto& r : rep.rows) {
    if (r.method == "sum-bd") bd.push_back(r.snr_signal_db);
    if (r.method == "cp") cp.push_back(r.snr_signal_db);
  }
  EXPECT_GE(bcast::testing::median(bd), 120.0);
  EXPECT_LT(bcast::testing::median(cp), bcast::testing::median(bd));
}

TEST(Summaries, PlotDataLayout) {
  ExperimentReport rep;
  rep.rows = {{"cp", 1, 18, 1.0, 2.0, 3, 1}, {"cp", 1, 18, 3.0, 4.0, 3, 2},
              {"cp", 2, 36, 5.0, std::nan(""), 3, 1}};
  const auto pts = summarize(rep);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].median_snr_signal_db, 2.0);
  EXPECT_EQ(pts[1].median_snr_observed_db != pts[1].median_snr_observed_db, true);
  ExperimentConfig cfg;
  cfg.dims = {6, 6, 6};
  cfg.seeds = {1, 2};
  const std::string dat = plot_data(pts, "cp", cfg);
  EXPECT_EQ(dat,
            "# method cp, dims 6x6x6, sigma 0.10000000000000001, 2 seeds\n"
            "# n_params median_snr_signal_db median_snr_observed_db rank_param\n"
            "18 2 3 1\n"
            "36 5 nan 2\n");
}
