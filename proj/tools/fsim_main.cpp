#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fsim/mc.hpp"
#include "fsim/oracle.hpp"
#include "fsim/report.hpp"
#include "fsim/specfun.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const std::string& token : split_csv(text)) out.push_back(std::stoi(token));
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& token : split_csv(text)) out.push_back(std::stod(token));
  return out;
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Flag values live here as optionals so a config file can supply defaults
/// and explicit flags still win.
struct CommonOptions {
  std::string config_file;
  std::string out_dir = "out";
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<int> n, reps, r_count, threads, sigma_redraws;
  std::optional<double> alpha;
  std::optional<std::string> dims, p_dims, designs, covariance;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_file, "JSON config file; flags override file values");
  cmd->add_option("--out-dir", opt.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", opt.seed, "run seed (64-bit)");
  cmd->add_option("--n", opt.n, "sample size");
  cmd->add_option("--alpha", opt.alpha, "nominal significance level");
  cmd->add_option("--reps", opt.reps, "replications per rotation draw");
  cmd->add_option("--r-count", opt.r_count, "rotation draws per cell");
  cmd->add_option("--dims", opt.dims, "comma list of d values");
  cmd->add_option("--p-dims", opt.p_dims, "comma list of p values");
  cmd->add_option("--designs", opt.designs,
                  "comma list of designs (t2,t3,t5,exp,unif,rademacher,gauss)");
  cmd->add_option("--covariance", opt.covariance, "spiked[:VALUE,COUNT] or ar1:RHO");
  cmd->add_option("--threads", opt.threads, "worker threads");
  cmd->add_option("--sigma-redraws", opt.sigma_redraws,
                  "independent (Sigma, theta) realizations per cell");
}

fsim::RunConfig build_config(const CommonOptions& opt, fsim::RunConfig cfg) {
  cfg.threads = default_threads();
  if (!opt.config_file.empty()) {
    std::ifstream in(opt.config_file);
    if (!in) throw std::invalid_argument("cannot read config file: " + opt.config_file);
    nlohmann::json file_config;
    in >> file_config;
    fsim::config_from_json(file_config, cfg);
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.n) cfg.n = *opt.n;
  if (opt.alpha) cfg.level = *opt.alpha;
  if (opt.reps) cfg.reps = *opt.reps;
  if (opt.r_count) cfg.r_count = *opt.r_count;
  if (opt.threads) cfg.threads = *opt.threads;
  if (opt.sigma_redraws) cfg.sigma_redraws = *opt.sigma_redraws;
  if (opt.dims) cfg.dims = parse_int_list(*opt.dims);
  if (opt.p_dims) cfg.p_dims = parse_int_list(*opt.p_dims);
  if (opt.designs) {
    cfg.designs.clear();
    for (const std::string& name : split_csv(*opt.designs)) {
      cfg.designs.push_back(fsim::DesignDistribution::parse(name));
    }
  }
  if (opt.covariance) cfg.covariance = fsim::CovarianceSpec::parse(*opt.covariance);
  cfg.validate();
  return cfg;
}

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::invalid_argument("cannot create output directory: " + out_dir);
  }
  return dir;
}

int run_table1(const CommonOptions& opt, bool boxplot_layout) {
  fsim::RunConfig cfg = build_config(opt, [&] {
    fsim::RunConfig base;
    if (boxplot_layout) {
      base.dims = {10, 50, 100, 1000};
      base.p_dims = {5};
      base.designs = fsim::DesignDistribution::all();
    }
    return base;
  }());
  const fs::path dir = prepare_out_dir(opt.out_dir);
  const auto start = Clock::now();
  const std::vector<fsim::CellResult> cells =
      boxplot_layout ? fsim::boxplot_data(cfg) : fsim::table1(cfg);
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();
  const bool json = opt.format == "json";
  if (boxplot_layout) {
    fsim::write_text_file(dir / (json ? "boxplot.json" : "boxplot.csv"),
                          json ? fsim::render_boxplot_json(cells) : fsim::render_boxplot_csv(cells));
  } else {
    fsim::write_text_file(dir / (json ? "table1.json" : "table1.csv"),
                          json ? fsim::render_table1_json(cells) : fsim::render_table1_csv(cells));
    fsim::write_text_file(dir / (json ? "cells.json" : "cells.csv"),
                          json ? fsim::render_cells_json(cells) : fsim::render_cells_csv(cells));
  }
  fsim::write_text_file(dir / "manifest.json",
                        fsim::render_manifest(cfg, boxplot_layout ? "boxplots" : "table1", cells, wall));
  std::cout << fsim::render_summary_text(cells, cfg);
  std::printf("%zu cells in %.1fs, outputs in %s\n", cells.size(), wall, dir.string().c_str());
  return 0;
}

int run_benchmark(const CommonOptions& opt) {
  const fsim::RunConfig cfg = build_config(opt, fsim::RunConfig{});
  const fs::path dir = prepare_out_dir(opt.out_dir);
  const auto start = Clock::now();
  const fsim::BenchmarkPanel panel = fsim::benchmark_panel(cfg);
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();
  const bool json = opt.format == "json";
  fsim::write_text_file(dir / (json ? "benchmark.json" : "benchmark.csv"),
                        json ? fsim::render_benchmark_json(panel) : fsim::render_benchmark_csv(panel));
  fsim::write_text_file(dir / "manifest.json", fsim::render_manifest(cfg, "benchmark", {}, wall));
  for (std::size_t i = 0; i < panel.probabilities.size(); ++i) {
    double mean = 0.0;
    for (double v : panel.draws[i]) mean += v;
    mean /= static_cast<double>(panel.draws[i].size());
    std::printf("a=%.2f: mean rejection %.4f over %zu draws\n", panel.probabilities[i], mean,
                panel.draws[i].size());
  }
  return 0;
}

std::vector<double> snr_grid(const std::optional<std::string>& flag, int n) {
  if (!flag || *flag == "auto") {
    const double root = std::sqrt(static_cast<double>(n));
    return {0.0, 0.1 / root, 0.3 / root, 1.0 / root};
  }
  return parse_double_list(*flag);
}

int run_theorem1(const CommonOptions& opt, const std::optional<std::string>& snr_flag, bool power_mode) {
  fsim::RunConfig cfg = build_config(opt, [] {
    fsim::RunConfig base;
    base.dims = {10, 50, 100};
    base.p_dims = {5};
    base.designs = {fsim::DesignDistribution(fsim::DesignTag::Gaussian),
                    fsim::DesignDistribution(fsim::DesignTag::ExponentialCentered)};
    return base;
  }());
  const std::vector<double> snrs = snr_grid(snr_flag, cfg.n);
  const fs::path dir = prepare_out_dir(opt.out_dir);
  const auto start = Clock::now();

  std::vector<fsim::DiagnosticsRow> diag_rows;
  std::vector<fsim::PowerRow> power_rows;
  for (const fsim::DesignDistribution& design : cfg.designs) {
    for (int d : cfg.dims) {
      for (int p : cfg.p_dims) {
        if (p >= d) continue;
        for (double snr : snrs) {
          const fsim::DiagnosticsResult diag = fsim::theorem1_diagnostics(design, d, p, snr, cfg);
          if (power_mode) {
            const double threshold = fsim::f_quantile_central(1.0 - cfg.level, p, cfg.n - p - 1);
            const fsim::FParams ref{p, cfg.n - p - 1, cfg.n * diag.snr_realized};
            power_rows.push_back({design, d, p, snr, diag.rejection_rate,
                                  1.0 - fsim::f_cdf(threshold, ref), diag.normal_approx});
          } else {
            diag_rows.push_back({design, d, p, diag});
          }
        }
      }
    }
  }
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();
  const bool json = opt.format == "json";
  if (power_mode) {
    fsim::write_text_file(dir / (json ? "power.json" : "power.csv"),
                          json ? fsim::render_power_json(power_rows) : fsim::render_power_csv(power_rows));
    std::printf("%zu power rows in %.1fs, outputs in %s\n", power_rows.size(), wall,
                dir.string().c_str());
  } else {
    fsim::write_text_file(
        dir / (json ? "theorem1.json" : "theorem1.csv"),
        json ? fsim::render_theorem1_json(diag_rows) : fsim::render_theorem1_csv(diag_rows));
    for (const fsim::DiagnosticsRow& row : diag_rows) {
      std::printf("%-10s d=%-5d p=%-3d snr=%-9.5f ks=%.4f rejection=%.4f normal=%.4f gap=%+.4f\n",
                  row.design.name(), row.d, row.p, row.diag.snr_target, row.diag.ks_vs_noncentral_f,
                  row.diag.rejection_rate, row.diag.normal_approx, row.diag.gap);
    }
    std::printf("%zu diagnostic rows in %.1fs, outputs in %s\n", diag_rows.size(), wall,
                dir.string().c_str());
  }
  fsim::write_text_file(dir / "manifest.json",
                        fsim::render_manifest(cfg, power_mode ? "power" : "theorem1", {}, wall));
  return 0;
}

struct OracleOptions {
  std::string d_grid = "8,12,16";
  int p = 2;
  std::string t_grid = "0.25,0.5,1,2";
  int frames = 20;
  double sigma = 0.5;
  int gap_reps = 500;
};

int run_oracle(const CommonOptions& opt, const OracleOptions& oracle_opt) {
  fsim::RunConfig cfg = build_config(opt, fsim::RunConfig{});
  const fs::path dir = prepare_out_dir(opt.out_dir);
  const std::vector<int> d_grid = parse_int_list(oracle_opt.d_grid);
  const std::vector<double> t_grid = parse_double_list(oracle_opt.t_grid);
  const auto start = Clock::now();

  // Tail probabilities of the conditional-mean deviation, exact per frame.
  std::ostringstream tail_csv;
  tail_csv << "recipe,d,frame,t,probability\n";
  for (const auto recipe : {fsim::FrameRecipe::AxisAligned, fsim::FrameRecipe::RotatedSubmodel}) {
    const int frames = recipe == fsim::FrameRecipe::AxisAligned ? 1 : oracle_opt.frames;
    const auto rows =
        fsim::tail_probe(oracle_opt.p, d_grid, t_grid, frames, cfg.covariance, recipe, cfg.seed);
    const char* name = recipe == fsim::FrameRecipe::AxisAligned ? "axis" : "rotated";
    for (const auto& row : rows) {
      tail_csv << name << ',' << row.d << ',' << row.frame << ',' << fsim::fmt_double(row.t) << ','
               << fsim::fmt_double(row.probability) << '\n';
    }
  }
  fsim::write_text_file(dir / "oracle_tail.csv", tail_csv.str());

  // Risk ratios and the F-statistic gap study on the same model family.
  std::ostringstream risk_csv;
  risk_csv << "d,p,sigma,r_linear,r_bayes,bayes_over_lin\n";
  std::ostringstream gap_csv;
  gap_csv << "d,p,sigma,reps,excluded,q10,q50,q90,ks_substitute\n";
  for (int d : d_grid) {
    fsim::ModelSpec spec;
    spec.d = d;
    spec.p = oracle_opt.p;
    spec.n = cfg.n;
    spec.design = fsim::DesignDistribution(fsim::DesignTag::Rademacher);
    spec.noise_sd = oracle_opt.sigma;
    spec.submodel = fsim::selection_matrix(d, oracle_opt.p);
    fsim::RandomStream cov_rng = fsim::RandomStream::derive(
        cfg.seed, {fsim::stream_token::covariance, static_cast<std::uint64_t>(d), 0});
    spec.covariance = std::make_shared<fsim::RealizedCovariance>(
        fsim::build_covariance(cfg.covariance, d, cov_rng));
    fsim::RandomStream theta_rng = fsim::RandomStream::derive(
        cfg.seed, {fsim::stream_token::theta, static_cast<std::uint64_t>(d), 0});
    spec.theta = fsim::null_theta(*spec.covariance, spec.submodel, theta_rng);
    fsim::RandomStream rot_rng = fsim::RandomStream::derive(
        cfg.seed, {fsim::stream_token::rotation, static_cast<std::uint64_t>(d), 0});
    spec.rotation = fsim::haar_orthogonal(d, rot_rng);

    const fsim::RiskRatioResult risk = fsim::risk_ratio(spec);
    risk_csv << d << ',' << oracle_opt.p << ',' << fsim::fmt_double(oracle_opt.sigma) << ','
             << fsim::fmt_double(risk.r_linear) << ',' << fsim::fmt_double(risk.r_bayes) << ','
             << fsim::fmt_double(risk.bayes_over_lin) << '\n';

    fsim::RunConfig gap_cfg = cfg;
    gap_cfg.reps = oracle_opt.gap_reps;
    const fsim::GapStudyResult gap = fsim::fstat_gap_study(spec, gap_cfg);
    gap_csv << d << ',' << oracle_opt.p << ',' << fsim::fmt_double(oracle_opt.sigma) << ','
            << oracle_opt.gap_reps << ',' << gap.excluded_replications << ','
            << fsim::fmt_double(gap.q10) << ',' << fsim::fmt_double(gap.q50) << ','
            << fsim::fmt_double(gap.q90) << ',' << fsim::fmt_double(gap.ks_substitute) << '\n';
    std::printf("d=%-4d risk RN/RL=%.6f  gap median=%.4g (excluded %d)\n", d, risk.bayes_over_lin,
                gap.q50, gap.excluded_replications);
  }
  fsim::write_text_file(dir / "oracle_risk.csv", risk_csv.str());
  fsim::write_text_file(dir / "oracle_gap.csv", gap_csv.str());

  // Conditional-moment deviation summary for rotated frames.
  std::ostringstream cond_csv;
  cond_csv << "d,p,fibers,max_mean_dev,max_second_dev,collision\n";
  for (int d : d_grid) {
    if (d > 16) continue;  // keep the full second-moment pass quick
    fsim::EnumeratedDesign design{d};
    fsim::RandomStream cov_rng = fsim::RandomStream::derive(
        cfg.seed, {fsim::stream_token::tail_frame, static_cast<std::uint64_t>(d), 99, 0});
    const fsim::RealizedCovariance cov = fsim::build_covariance(cfg.covariance, d, cov_rng);
    const Eigen::MatrixXd m = fsim::selection_matrix(d, oracle_opt.p);
    fsim::RandomStream rot_rng = fsim::RandomStream::derive(
        cfg.seed, {fsim::stream_token::tail_frame, static_cast<std::uint64_t>(d), 99, 1});
    const Eigen::MatrixXd b = fsim::rotated_submodel_frame(cov, m, rot_rng);
    const fsim::ConditionalMomentReport report = fsim::conditional_moments(design, b);
    cond_csv << d << ',' << oracle_opt.p << ',' << report.fiber_count << ','
             << fsim::fmt_double(report.max_mean_deviation) << ','
             << fsim::fmt_double(report.max_second_deviation) << ','
             << (report.collision_warning ? 1 : 0) << '\n';
  }
  fsim::write_text_file(dir / "oracle_conditional.csv", cond_csv.str());

  const double wall = std::chrono::duration<double>(Clock::now() - start).count();
  fsim::write_text_file(dir / "manifest.json", fsim::render_manifest(cfg, "oracle", {}, wall));
  std::printf("oracle studies in %.1fs, outputs in %s\n", wall, dir.string().c_str());
  return 0;
}

int run_verify(const std::string& out_dir, std::optional<int> cell_index) {
  const fsim::VerifyResult result = fsim::verify_run(out_dir, cell_index);
  std::printf("%s: %s\n", result.ok ? "OK" : "FAIL", result.message.c_str());
  return result.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo study of F-tests for low-dimensional working models of "
               "high-dimensional regressions"};
  app.require_subcommand(1);

  CommonOptions table_opt, box_opt, bench_opt, theorem_opt, power_opt, oracle_common;
  std::optional<std::string> theorem_snr, power_snr;
  OracleOptions oracle_opt;
  std::string verify_dir = "out";
  std::optional<int> verify_cell;

  CLI::App* table_cmd = app.add_subcommand("table1", "rejection-rate grid (dbar per cell)");
  add_common_flags(table_cmd, table_opt);
  CLI::App* box_cmd = app.add_subcommand("boxplots", "per-rotation rejection rates for plots");
  add_common_flags(box_cmd, box_opt);
  CLI::App* bench_cmd = app.add_subcommand("benchmark", "binomial reference panel");
  add_common_flags(bench_cmd, bench_opt);
  CLI::App* theorem_cmd =
      app.add_subcommand("theorem1", "distributional diagnostics vs noncentral F / normal");
  add_common_flags(theorem_cmd, theorem_opt);
  theorem_cmd->add_option("--snr", theorem_snr, "comma list of signal-to-noise ratios, or auto");
  CLI::App* power_cmd = app.add_subcommand("power", "rejection rates across the snr grid");
  add_common_flags(power_cmd, power_opt);
  power_cmd->add_option("--snr", power_snr, "comma list of signal-to-noise ratios, or auto");
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "exact enumeration studies");
  add_common_flags(oracle_cmd, oracle_common);
  oracle_cmd->add_option("--d-grid", oracle_opt.d_grid, "dimensions to enumerate")
      ->capture_default_str();
  oracle_cmd->add_option("--p", oracle_opt.p, "submodel dimension")->capture_default_str();
  oracle_cmd->add_option("--t-grid", oracle_opt.t_grid, "tail thresholds")->capture_default_str();
  oracle_cmd->add_option("--frames", oracle_opt.frames, "Haar frames per dimension")
      ->capture_default_str();
  oracle_cmd->add_option("--sigma", oracle_opt.sigma, "noise sd for the gap/risk studies")
      ->capture_default_str();
  oracle_cmd->add_option("--gap-reps", oracle_opt.gap_reps, "gap study replications")
      ->capture_default_str();
  CLI::App* verify_cmd = app.add_subcommand("verify", "re-run one cell and compare with cells.csv");
  verify_cmd->add_option("--out-dir", verify_dir, "directory with manifest.json and cells.csv")
      ->capture_default_str();
  verify_cmd->add_option("--cell", verify_cell, "cell index (default: derived from the seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (table_cmd->parsed()) return run_table1(table_opt, false);
    if (box_cmd->parsed()) return run_table1(box_opt, true);
    if (bench_cmd->parsed()) return run_benchmark(bench_opt);
    if (theorem_cmd->parsed()) return run_theorem1(theorem_opt, theorem_snr, false);
    if (power_cmd->parsed()) return run_theorem1(power_opt, power_snr, true);
    if (oracle_cmd->parsed()) return run_oracle(oracle_common, oracle_opt);
    if (verify_cmd->parsed()) return run_verify(verify_dir, verify_cell);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
