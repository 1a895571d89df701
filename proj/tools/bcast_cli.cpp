// bcast_cli: batch front end for the broadcast tensor library.
//
//   bcast_cli ls-solve   --observed X.btf --known H.btf --unknown-shape 4,1,3 --out W.btf
//   bcast_cli decompose  --input Y.btf --model bd|sum-bd --R 2 --out-prefix run/bd
//   bcast_cli baseline   --method cp|tucker --input Y.btf --rank 8 --out-prefix run/cp
//   bcast_cli experiment --out results [--config study.toml] [--dims 32,32,32 ...]
//
// study.toml holds an [experiment] table keyed by the long option names.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "bcast/bcast.hpp"

namespace {

using namespace bcast;

struct FitOptions {
  std::uint64_t seed = 0;
  int max_iters = FitConfig{}.max_iters;
  double tol = FitConfig{}.rel_tol;
  double eps = FitConfig{}.denom_epsilon;
  std::string init = "structured";

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "Seed of the random initialization")->capture_default_str();
    app->add_option("--max-iters", max_iters, "Maximum number of sweeps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--tol", tol, "Stop when the relative objective change is at most this")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--eps", eps, "Floor for ALS denominators (CP: ridge on singular Gram)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  }

  void add_init_to(CLI::App* app) {
    app->add_option("--init", init, "BD starting point")
        ->check(CLI::IsMember({"structured", "random"}))
        ->capture_default_str();
  }

  FitConfig config() const {
    FitConfig c;
    c.seed = seed;
    c.max_iters = max_iters;
    c.rel_tol = tol;
    c.denom_epsilon = eps;
    c.bd_init = init == "random" ? BDInit::random : BDInit::structured;
    return c;
  }
};

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

std::filesystem::path with_suffix(const std::string& prefix, const std::string& suffix) {
  return std::filesystem::path(prefix + suffix);
}

void write_trace(const std::string& prefix, const FitTrace& tr) {
  const auto path = with_suffix(prefix, "_trace.csv");
  std::ofstream out(path, std::ios::binary);
  out << "iter,objective\n";
  out << "0," << format_double(tr.initial_objective) << '\n';
  for (std::size_t i = 0; i < tr.objective_per_iter.size(); ++i) {
    out << i + 1 << ',' << format_double(tr.objective_per_iter[i]) << '\n';
  }
  if (!out) throw format_error("cannot write " + path.string());
}

void report_fit(const char* what, const Tensor& y, const Tensor& estimate, const FitTrace& tr,
                std::size_t n_params) {
  const double obj = residual_objective(y, estimate);
  const double norm = squared_norm(y);
  std::printf("%s: %d sweeps (%s), objective %s, relative residual %s, %zu parameters\n", what,
              tr.iterations_run, tr.converged ? "converged" : "iteration limit",
              format_double(obj).c_str(),
              format_double(norm > 0.0 ? std::sqrt(obj / norm) : 0.0).c_str(), n_params);
}

int run_ls_solve(const std::string& observed, const std::string& known,
                 const std::vector<std::size_t>& unknown, const std::string& out, double ridge) {
  const Tensor x = read_btf(observed);
  const Tensor h = read_btf(known);
  const Shape w_shape(unknown);
  const Tensor w = ridge > 0.0 ? ls_solve_general_ridge(x, h, w_shape, ridge)
                               : ls_solve_general(x, h, w_shape);
  ensure_parent(out);
  write_btf(std::filesystem::path(out), w);
  const ModePartition part = classify_modes(w_shape, h.shape());
  auto list = [](const std::vector<std::size_t>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i] + 1);
    return s + "}";
  };
  std::printf("ls-solve: W %s, L=%s S=%s R=%s, objective %s\n", w.shape().str().c_str(),
              list(part.L).c_str(), list(part.S).c_str(), list(part.R).c_str(),
              format_double(residual_objective(x, product(w, h))).c_str());
  return 0;
}

int run_decompose(const std::string& input, const std::string& model, std::size_t rank,
                  const FitOptions& opts, const std::string& prefix) {
  const Tensor y = read_btf(input);
  ensure_parent(prefix);
  const FitConfig cfg = opts.config();
  if (model == "bd") {
    if (rank != 1) throw error("decompose: --model bd fits a single term; use sum-bd for R > 1");
    const BDFit fit = bd_als(y, cfg);
    write_btf(with_suffix(prefix, "_A.btf"), fit.factors.A);
    write_btf(with_suffix(prefix, "_B.btf"), fit.factors.B);
    write_btf(with_suffix(prefix, "_C.btf"), fit.factors.C);
    write_trace(prefix, fit.trace);
    report_fit("bd", y, reconstruct(fit.factors), fit.trace, param_count(fit.factors));
  } else {
    const SumBDFit fit = sum_bd_hals(y, rank, cfg);
    for (std::size_t r = 0; r < fit.terms.size(); ++r) {
      const std::string s = std::to_string(r + 1);
      write_btf(with_suffix(prefix, "_A" + s + ".btf"), fit.terms[r].A);
      write_btf(with_suffix(prefix, "_B" + s + ".btf"), fit.terms[r].B);
      write_btf(with_suffix(prefix, "_C" + s + ".btf"), fit.terms[r].C);
    }
    write_trace(prefix, fit.trace);
    report_fit("sum-bd", y, reconstruct(fit.terms), fit.trace, param_count(fit.terms));
  }
  return 0;
}

int run_baseline(const std::string& method, const std::string& input,
                 const std::vector<std::size_t>& rank, const FitOptions& opts,
                 const std::string& prefix) {
  const Tensor y = read_btf(input);
  ensure_parent(prefix);
  const FitConfig cfg = opts.config();
  if (method == "cp") {
    if (rank.size() != 1) throw error("baseline: cp takes a single --rank");
    const CPFit fit = cp_als(y, rank[0], cfg);
    write_btf(with_suffix(prefix, "_U1.btf"), fit.model.U1);
    write_btf(with_suffix(prefix, "_U2.btf"), fit.model.U2);
    write_btf(with_suffix(prefix, "_U3.btf"), fit.model.U3);
    write_trace(prefix, fit.trace);
    report_fit("cp", y, reconstruct(fit.model), fit.trace, param_count(fit.model));
  } else {
    std::array<std::size_t, 3> r{};
    if (rank.size() == 1) r = {rank[0], rank[0], rank[0]};
    else if (rank.size() == 3) r = {rank[0], rank[1], rank[2]};
    else throw error("baseline: tucker takes --rank r or --rank r1,r2,r3");
    const TuckerFit fit = tucker_hooi(y, r, cfg);
    write_btf(with_suffix(prefix, "_G.btf"), fit.model.core);
    write_btf(with_suffix(prefix, "_U1.btf"), fit.model.U1);
    write_btf(with_suffix(prefix, "_U2.btf"), fit.model.U2);
    write_btf(with_suffix(prefix, "_U3.btf"), fit.model.U3);
    write_trace(prefix, fit.trace);
    report_fit("tucker", y, reconstruct(fit.model), fit.trace, param_count(fit.model));
  }
  return 0;
}

int run_experiment_cmd(ExperimentConfig cfg, bool quiet) {
  const auto rep = run_experiment(cfg, [&](const ReportRow& r) {
    if (quiet) return;
    std::fprintf(stderr, "seed %llu  %-7s r=%-3zu params=%-6zu snr %8.3f dB  (%d sweeps)\n",
                 static_cast<unsigned long long>(r.seed), r.method.c_str(), r.rank_param,
                 r.n_params, r.snr_signal_db, r.iterations);
  });
  std::printf("%-8s %6s %9s %14s %14s\n", "method", "rank", "n_params", "median_snr_sig",
              "median_snr_obs");
  for (const auto& p : summarize(rep)) {
    std::printf("%-8s %6zu %9zu %14.3f %14.3f\n", p.method.c_str(), p.rank_param, p.n_params,
                p.median_snr_signal_db, p.median_snr_observed_db);
  }
  if (!cfg.output_dir.empty()) {
    std::printf("wrote %s\n", (cfg.output_dir / "report.csv").string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broadcast-product tensor algebra: least squares, broadcast decomposition, "
               "baselines and the synthetic rank-sweep study"};
  app.require_subcommand(1);
  // Keys of subcommand options live in a table named after the subcommand,
  // e.g. [experiment] dims = [32, 32, 32].
  app.set_config("--config", "", "TOML file of option values");

  // ls-solve
  auto* ls = app.add_subcommand("ls-solve", "Closed-form least squares  min_W ||X - W (.) H||");
  std::string ls_observed, ls_known, ls_out;
  std::vector<std::size_t> ls_shape;
  double ls_ridge = 0.0;
  ls->add_option("--observed", ls_observed, "Observed tensor X (BTF)")->required()->check(CLI::ExistingFile);
  ls->add_option("--known", ls_known, "Known factor H (BTF)")->required()->check(CLI::ExistingFile);
  ls->add_option("--unknown-shape", ls_shape, "Shape of W, e.g. 4,1,3")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  ls->add_option("--out", ls_out, "Output BTF for W")->required();
  ls->add_option("--ridge", ls_ridge, "Add this to every denominator (0: exact, error if singular)")
      ->check(CLI::NonNegativeNumber);

  // decompose
  auto* dec = app.add_subcommand("decompose", "Broadcast decomposition (ALS) or sum of BDs (HALS)");
  std::string dec_input, dec_model = "bd", dec_prefix;
  std::size_t dec_rank = 1;
  FitOptions dec_opts;
  dec->add_option("--input", dec_input, "Third-order tensor (BTF)")->required()->check(CLI::ExistingFile);
  dec->add_option("--model", dec_model, "bd or sum-bd")
      ->check(CLI::IsMember({"bd", "sum-bd"}))
      ->capture_default_str();
  dec->add_option("--R", dec_rank, "Number of BD terms")->check(CLI::PositiveNumber)->capture_default_str();
  dec->add_option("--out-prefix", dec_prefix, "Prefix of the factor and trace files")->required();
  dec_opts.add_to(dec);
  dec_opts.add_init_to(dec);

  // baseline
  auto* base = app.add_subcommand("baseline", "CP-ALS or Tucker-HOOI baseline");
  std::string base_method, base_input, base_prefix;
  std::vector<std::size_t> base_rank;
  FitOptions base_opts;
  base->add_option("--method", base_method, "cp or tucker")
      ->required()
      ->check(CLI::IsMember({"cp", "tucker"}));
  base->add_option("--input", base_input, "Third-order tensor (BTF)")->required()->check(CLI::ExistingFile);
  base->add_option("--rank", base_rank, "CP rank R, or Tucker ranks r or r1,r2,r3")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  base->add_option("--out-prefix", base_prefix, "Prefix of the factor and trace files")->required();
  base_opts.add_to(base);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Synthetic rank sweep: sum-of-BD vs CP vs Tucker");
  exp->fallthrough();
  ExperimentConfig ecfg;
  std::vector<std::size_t> dims{ecfg.dims.begin(), ecfg.dims.end()};
  std::string out_dir;
  FitOptions exp_opts;
  bool quiet = false;
  exp->add_option("--dims", dims, "I,J,K")
      ->delimiter(',')
      ->expected(3)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  exp->add_option("--sigma", ecfg.sigma, "Noise scale")->check(CLI::NonNegativeNumber)->capture_default_str();
  exp->add_option("--seeds", ecfg.seeds, "Data seeds")->delimiter(',')->capture_default_str();
  exp->add_option("--bd-R", ecfg.bd_R_grid, "Sum-of-BD term counts")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  exp->add_option("--cp-R", ecfg.cp_R_grid, "CP ranks")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  exp->add_option("--tucker-r", ecfg.tucker_rank_grid, "Tucker ranks (r,r,r)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  exp->add_option("--out", out_dir, "Output directory (report.csv, plotdata_*.dat, factors/)");
  exp->add_option("--max-iters", exp_opts.max_iters, "Maximum sweeps per fit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  exp->add_option("--tol", exp_opts.tol, "Relative objective change tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  exp->add_option("--eps", exp_opts.eps, "ALS denominator floor / CP ridge")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  exp_opts.add_init_to(exp);
  exp->add_flag("--quiet", quiet, "Do not print per-fit progress");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ls) return run_ls_solve(ls_observed, ls_known, ls_shape, ls_out, ls_ridge);
    if (*dec) return run_decompose(dec_input, dec_model, dec_rank, dec_opts, dec_prefix);
    if (*base) return run_baseline(base_method, base_input, base_rank, base_opts, base_prefix);
    if (*exp) {
      ecfg.dims = {dims[0], dims[1], dims[2]};
      ecfg.fit = exp_opts.config();
      ecfg.output_dir = out_dir;
      return run_experiment_cmd(ecfg, quiet);
    }
  } catch (const bcast::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
