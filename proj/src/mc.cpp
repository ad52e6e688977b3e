#include "fsim/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fsim/linmodel.hpp"
#include "fsim/specfun.hpp"

namespace fsim {

void parallel_for(int begin, int end, int threads, const std::function<void(int)>& body) {
  const int count = end - begin;
  if (count <= 0) return;
  threads = std::clamp(threads, 1, count);
  if (threads == 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<int> next{begin};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= end) break;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

void RunConfig::validate() const {
  if (n < 3) throw std::invalid_argument("RunConfig: n must be >= 3");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("RunConfig: level must lie in (0, 1)");
  if (reps < 1 || r_count < 1) throw std::invalid_argument("RunConfig: reps and r_count must be >= 1");
  if (sigma_redraws < 1) throw std::invalid_argument("RunConfig: sigma_redraws must be >= 1");
  if (threads < 1) throw std::invalid_argument("RunConfig: threads must be >= 1");
  if (dims.empty() || p_dims.empty() || designs.empty()) {
    throw std::invalid_argument("RunConfig: dims, p_dims and designs must be nonempty");
  }
  for (int p : p_dims) {
    if (p < 1) throw std::invalid_argument("RunConfig: p must be >= 1");
    if (p + 1 >= n) throw std::invalid_argument("RunConfig: need n > p + 1 for every requested p");
  }
  for (int d : dims) {
    if (d < 2) throw std::invalid_argument("RunConfig: d must be >= 2");
  }
}

namespace {

double mean_abs_deviation(const std::vector<double>& values, double center) {
  double acc = 0.0;
  for (double v : values) acc += std::fabs(v - center);
  return acc / static_cast<double>(values.size());
}

}  // namespace

CellResult run_cell(DesignDistribution design, int d, int p, const RunConfig& cfg) {
  cfg.validate();
  if (p >= d) throw std::invalid_argument("run_cell: need p < d");
  if (p + 1 >= cfg.n) throw std::invalid_argument("run_cell: need n > p + 1");

  CellResult cell;
  cell.design = design;
  cell.d = d;
  cell.p = p;
  cell.threshold = f_quantile_central(1.0 - cfg.level, p, cfg.n - p - 1);
  cell.cell_stream = stream_fingerprint(
      cfg.seed, {stream_token::covariance, design.stream_tag(), static_cast<std::uint64_t>(d),
                 static_cast<std::uint64_t>(p)});
  cell.pbars.assign(static_cast<std::size_t>(cfg.r_count) * cfg.sigma_redraws, 0.0);

  const Eigen::MatrixXd m = selection_matrix(d, p);
  const std::uint64_t dd = static_cast<std::uint64_t>(d);
  const std::uint64_t pp = static_cast<std::uint64_t>(p);

  for (int redraw = 0; redraw < cfg.sigma_redraws; ++redraw) {
    const std::uint64_t rd = static_cast<std::uint64_t>(redraw);
    RandomStream cov_rng = RandomStream::derive(
        cfg.seed, {stream_token::covariance, design.stream_tag(), dd, pp, rd});
    const RealizedCovariance cov = build_covariance(cfg.covariance, d, cov_rng);
    RandomStream theta_rng =
        RandomStream::derive(cfg.seed, {stream_token::theta, design.stream_tag(), dd, pp, rd});
    const Eigen::VectorXd theta = null_theta(cov, m, theta_rng);

    Eigen::MatrixXd base_frame(d, p + 1);
    base_frame.leftCols(p) = cov.apply_sqrt(m);
    base_frame.col(p) = cov.apply_sqrt(theta);

    double* pbar_out = cell.pbars.data() + static_cast<std::size_t>(redraw) * cfg.r_count;
    parallel_for(0, cfg.r_count, cfg.threads, [&](int r) {
      const std::uint64_t rr = static_cast<std::uint64_t>(r);
      RandomStream rot_rng = RandomStream::derive(
          cfg.seed, {stream_token::rotation, design.stream_tag(), dd, pp, rd, rr});
      const Eigen::MatrixXd rotated = haar_transposed_product(d, base_frame, rot_rng);
      const SamplerPlan plan = SamplerPlan::from_rotated_frame(
          rotated, Eigen::VectorXd::Zero(p), 0.0, design, cfg.n, 0.0);

      FStatScratch scratch;
      Eigen::MatrixXd x;
      Eigen::VectorXd y;
      int rejections = 0;
      for (int j = 0; j < cfg.reps; ++j) {
        RandomStream data_rng = RandomStream::derive(
            cfg.seed, {stream_token::data, design.stream_tag(), dd, pp, rd, rr,
                       static_cast<std::uint64_t>(j)});
        plan.sample(data_rng, x, y);
        if (scratch.compute(x, y) > cell.threshold) ++rejections;
      }
      pbar_out[r] = static_cast<double>(rejections) / cfg.reps;
    });
  }

  cell.dbar = mean_abs_deviation(cell.pbars, cfg.level);
  return cell;
}

std::vector<CellResult> table1(const RunConfig& cfg) {
  cfg.validate();
  std::vector<CellResult> cells;
  for (const DesignDistribution& design : cfg.designs) {
    for (int d : cfg.dims) {
      for (int p : cfg.p_dims) {
        if (p >= d) continue;  // blank staircase entries
        cells.push_back(run_cell(design, d, p, cfg));
      }
    }
  }
  return cells;
}

std::vector<CellResult> boxplot_data(const RunConfig& cfg) { return table1(cfg); }

BenchmarkPanel benchmark_panel(const RunConfig& cfg) {
  cfg.validate();
  BenchmarkPanel panel;
  panel.draws.resize(panel.probabilities.size());
  for (std::size_t ai = 0; ai < panel.probabilities.size(); ++ai) {
    const double a = panel.probabilities[ai];
    auto& column = panel.draws[ai];
    column.resize(cfg.r_count);
    for (int r = 0; r < cfg.r_count; ++r) {
      RandomStream rng = RandomStream::derive(
          cfg.seed,
          {stream_token::benchmark, static_cast<std::uint64_t>(ai), static_cast<std::uint64_t>(r)});
      int count = 0;
      for (int j = 0; j < cfg.reps; ++j) {
        if (rng.uniform01() < a) ++count;
      }
      column[r] = static_cast<double>(count) / cfg.reps;
    }
  }
  return panel;
}

DiagnosticsResult theorem1_diagnostics(DesignDistribution design, int d, int p, double snr,
                                       const RunConfig& cfg) {
  cfg.validate();
  if (p >= d) throw std::invalid_argument("theorem1_diagnostics: need p < d");
  if (p + 1 >= cfg.n) throw std::invalid_argument("theorem1_diagnostics: need n > p + 1");
  if (snr < 0.0) throw std::invalid_argument("theorem1_diagnostics: snr must be >= 0");

  const std::uint64_t dd = static_cast<std::uint64_t>(d);
  const std::uint64_t pp = static_cast<std::uint64_t>(p);
  const Eigen::MatrixXd m = selection_matrix(d, p);

  RandomStream cov_rng =
      RandomStream::derive(cfg.seed, {stream_token::diag_covariance, design.stream_tag(), dd, pp});
  auto cov = std::make_shared<RealizedCovariance>(build_covariance(cfg.covariance, d, cov_rng));
  RandomStream theta_rng =
      RandomStream::derive(cfg.seed, {stream_token::diag_theta, design.stream_tag(), dd, pp});
  const Eigen::VectorXd theta_perp = null_theta(*cov, m, theta_rng);

  Eigen::VectorXd theta = theta_perp;
  if (snr > 0.0) {
    RandomStream dir_rng = RandomStream::derive(
        cfg.seed, {stream_token::diag_direction, design.stream_tag(), dd, pp});
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) v[i] = dir_rng.gaussian();
    theta = calibrate_theta(*cov, m, theta_perp, v, 0.0, snr, design.variance());
  }

  ModelSpec spec;
  spec.d = d;
  spec.p = p;
  spec.n = cfg.n;
  spec.theta = theta;
  spec.covariance = cov;
  spec.design = design;
  spec.submodel = m;
  const SurrogateParams surrogate = surrogate_params(spec);

  DiagnosticsResult diag;
  diag.snr_target = snr;
  // null_theta guarantees the null structurally; the surrogate value only
  // carries projection dust, so the reference law is exactly central.
  diag.snr_realized = snr == 0.0 ? 0.0 : surrogate.snr;

  Eigen::MatrixXd base_frame(d, p + 1);
  base_frame.leftCols(p) = cov->apply_sqrt(m);
  base_frame.col(p) = cov->apply_sqrt(theta);
  RandomStream rot_rng =
      RandomStream::derive(cfg.seed, {stream_token::diag_rotation, design.stream_tag(), dd, pp});
  const Eigen::MatrixXd rotated = haar_transposed_product(d, base_frame, rot_rng);
  const SamplerPlan plan =
      SamplerPlan::from_rotated_frame(rotated, Eigen::VectorXd::Zero(p), 0.0, design, cfg.n, 0.0);

  const std::size_t total = static_cast<std::size_t>(cfg.reps) * cfg.r_count;
  std::vector<double> stats(total, 0.0);
  parallel_for(0, cfg.r_count, cfg.threads, [&](int block) {
    FStatScratch scratch;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    double* out = stats.data() + static_cast<std::size_t>(block) * cfg.reps;
    for (int j = 0; j < cfg.reps; ++j) {
      RandomStream rng = RandomStream::derive(
          cfg.seed, {stream_token::diag_data, design.stream_tag(), dd, pp,
                     static_cast<std::uint64_t>(block), static_cast<std::uint64_t>(j)});
      plan.sample(rng, x, y);
      out[j] = scratch.compute(x, y);
    }
  });

  const double threshold = f_quantile_central(1.0 - cfg.level, p, cfg.n - p - 1);
  std::size_t rejections = 0;
  for (double f : stats) {
    if (f > threshold) ++rejections;
  }
  diag.rejection_rate = static_cast<double>(rejections) / static_cast<double>(total);

  const FParams reference{p, cfg.n - p - 1, cfg.n * diag.snr_realized};
  diag.ks_vs_noncentral_f =
      ks_sup_distance(stats, [&](double t) { return f_cdf(t, reference); });

  const double delta = diag.snr_realized;
  if (delta == 0.0) {
    diag.normal_approx = cfg.level;  // the approximation reduces to the level identically
  } else {
    const double ratio = static_cast<double>(p) / cfg.n;
    diag.normal_approx = normal_cdf(normal_quantile(cfg.level) +
                                    std::sqrt(cfg.n) * delta * std::sqrt((1.0 - ratio) / (2.0 * ratio)));
  }
  diag.gap = diag.rejection_rate - diag.normal_approx;
  return diag;
}

}  // namespace fsim
