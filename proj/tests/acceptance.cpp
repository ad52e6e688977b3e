// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Bands are generous where a criterion depends on fresh
// covariance/theta realizations; directional comparisons carry the weight.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fsim/linmodel.hpp"
#include "fsim/mc.hpp"
#include "fsim/oracle.hpp"
#include "fsim/report.hpp"
#include "fsim/specfun.hpp"
#include "support.hpp"

using fsim::DesignDistribution;
using fsim::DesignTag;
using fsim::RunConfig;

namespace {

constexpr std::uint64_t kAcceptanceSeed = 1729;

int threads_for_run(int requested) { return requested; }

RunConfig paper_config() {
  RunConfig cfg;
  cfg.seed = kAcceptanceSeed;
  cfg.threads = threads_for_run(4);
  return cfg;
}

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << "  FAILED: " << what << "\n";
    }
  }
  void note(const std::string& text) { detail << "  " << text << "\n"; }
};

double find_dbar(const std::vector<fsim::CellResult>& cells, DesignTag tag, int d, int p) {
  for (const auto& cell : cells) {
    if (cell.design.tag() == tag && cell.d == d && cell.p == p) return cell.dbar;
  }
  throw std::logic_error("cell not found");
}

const fsim::CellResult& find_cell(const std::vector<fsim::CellResult>& cells, DesignTag tag, int d,
                                  int p) {
  for (const auto& cell : cells) {
    if (cell.design.tag() == tag && cell.d == d && cell.p == p) return cell;
  }
  throw std::logic_error("cell not found");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// --------------------------------------------------------------------------
// Criteria
// --------------------------------------------------------------------------

Check criterion_gauss_noise_floor() {
  Check check;
  RunConfig cfg = paper_config();
  cfg.designs = {DesignDistribution(DesignTag::Gaussian)};
  cfg.dims = {10, 50, 200};
  cfg.p_dims = {1, 5};
  const auto start = std::chrono::steady_clock::now();
  const auto cells = fsim::table1(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& cell : cells) {
    std::ostringstream what;
    what << "gauss d=" << cell.d << " p=" << cell.p << " dbar=" << fmt(cell.dbar)
         << " outside [0.002, 0.012]";
    check.expect(cell.dbar >= 0.002 && cell.dbar <= 0.012, what.str());
  }
  check.note("wall " + fmt(wall) + "s on " + std::to_string(cfg.threads) + " threads");
  check.expect(wall <= 120.0, "runtime " + fmt(wall) + "s exceeds 2 minutes");
  return check;
}

Check criterion_exp_decay_in_d() {
  Check check;
  RunConfig cfg = paper_config();
  cfg.designs = {DesignDistribution(DesignTag::ExponentialCentered)};
  cfg.dims = {10, 50, 200};
  cfg.p_dims = {5};
  const auto cells = fsim::table1(cfg);
  const double d10 = find_dbar(cells, DesignTag::ExponentialCentered, 10, 5);
  const double d50 = find_dbar(cells, DesignTag::ExponentialCentered, 50, 5);
  const double d200 = find_dbar(cells, DesignTag::ExponentialCentered, 200, 5);
  check.note("exp p=5 dbar: " + fmt(d10) + " > " + fmt(d50) + " > " + fmt(d200));
  check.expect(d10 > d50, "dbar(10) <= dbar(50)");
  check.expect(d50 > d200, "dbar(50) <= dbar(200)");
  check.expect(d200 <= 0.02, "dbar(200) > 0.02");
  return check;
}

Check criterion_heavy_tails_persist() {
  Check check;
  RunConfig cfg = paper_config();
  cfg.designs = {DesignDistribution(DesignTag::StudentT2)};
  cfg.dims = {10};
  cfg.p_dims = {5};
  const double small_d = fsim::table1(cfg)[0].dbar;
  cfg.dims = {200};
  cfg.p_dims = {25};
  const double large_d = fsim::table1(cfg)[0].dbar;
  check.note("t2 dbar: d=10,p=5 " + fmt(small_d) + "; d=200,p=25 " + fmt(large_d));
  check.expect(small_d >= 0.30, "t2 d=10 p=5 dbar " + fmt(small_d) + " < 0.30");
  check.expect(large_d >= 0.25, "t2 d=200 p=25 dbar " + fmt(large_d) + " < 0.25");
  return check;
}

// Shared by criteria 4 and 5.
std::vector<fsim::CellResult> d10_cells() {
  RunConfig cfg = paper_config();
  cfg.designs = {DesignDistribution(DesignTag::StudentT5), DesignDistribution(DesignTag::ExponentialCentered),
                 DesignDistribution(DesignTag::StudentT3), DesignDistribution(DesignTag::UniformSymmetric),
                 DesignDistribution(DesignTag::StudentT2), DesignDistribution(DesignTag::Rademacher)};
  cfg.dims = {10};
  cfg.p_dims = {1, 2, 5};
  return fsim::table1(cfg);
}

Check criterion_growth_in_p(const std::vector<fsim::CellResult>& cells) {
  Check check;
  for (DesignTag tag : {DesignTag::StudentT5, DesignTag::ExponentialCentered, DesignTag::StudentT3,
                        DesignTag::UniformSymmetric, DesignTag::StudentT2, DesignTag::Rademacher}) {
    const double p1 = find_dbar(cells, tag, 10, 1);
    const double p2 = find_dbar(cells, tag, 10, 2);
    const double p5 = find_dbar(cells, tag, 10, 5);
    const char* name = DesignDistribution(tag).name();
    check.note(std::string(name) + " d=10 dbar over p: " + fmt(p1) + ", " + fmt(p2) + ", " +
               fmt(p5));
    int inversions = 0;
    double worst = 0.0;
    if (p2 < p1) {
      ++inversions;
      worst = std::max(worst, p1 - p2);
    }
    if (p5 < p2) {
      ++inversions;
      worst = std::max(worst, p2 - p5);
    }
    std::ostringstream what;
    what << name << ": dbar not nondecreasing over p (inversions " << inversions << ", worst "
         << fmt(worst) << ")";
    check.expect(inversions == 0 || (inversions == 1 && worst <= 0.005), what.str());
  }
  return check;
}

Check criterion_bias_direction(const std::vector<fsim::CellResult>& cells) {
  Check check;
  for (DesignTag tag : {DesignTag::StudentT3, DesignTag::ExponentialCentered}) {
    const double med = testsupport::median(find_cell(cells, tag, 10, 5).pbars);
    check.note(std::string(DesignDistribution(tag).name()) + " median pbar " + fmt(med));
    check.expect(med > 0.05, std::string(DesignDistribution(tag).name()) +
                                 " median pbar not above the level: " + fmt(med));
  }
  for (DesignTag tag : {DesignTag::Rademacher, DesignTag::UniformSymmetric}) {
    const double med = testsupport::median(find_cell(cells, tag, 10, 5).pbars);
    check.note(std::string(DesignDistribution(tag).name()) + " median pbar " + fmt(med));
    check.expect(med < 0.05, std::string(DesignDistribution(tag).name()) +
                                 " median pbar not below the level: " + fmt(med));
  }
  return check;
}

Check criterion_ks_null() {
  Check check;
  RunConfig cfg = paper_config();  // reps * r_count = 1e5 draws
  const auto gauss =
      fsim::theorem1_diagnostics(DesignDistribution(DesignTag::Gaussian), 50, 5, 0.0, cfg);
  check.note("gauss d=50 ks " + fmt(gauss.ks_vs_noncentral_f));
  check.expect(gauss.ks_vs_noncentral_f <= 0.006,
               "gaussian null KS " + fmt(gauss.ks_vs_noncentral_f) + " > 0.006");
  const auto exp_small =
      fsim::theorem1_diagnostics(DesignDistribution(DesignTag::ExponentialCentered), 10, 5, 0.0, cfg);
  const auto exp_large =
      fsim::theorem1_diagnostics(DesignDistribution(DesignTag::ExponentialCentered), 200, 5, 0.0, cfg);
  check.note("exp ks: d=10 " + fmt(exp_small.ks_vs_noncentral_f) + ", d=200 " +
             fmt(exp_large.ks_vs_noncentral_f));
  check.expect(exp_large.ks_vs_noncentral_f < exp_small.ks_vs_noncentral_f,
               "exp KS did not shrink from d=10 to d=200");
  return check;
}

Check criterion_normal_approx_gap() {
  Check check;
  RunConfig cfg = paper_config();  // 1e5 replications
  for (double snr : {0.0, 0.3 / std::sqrt(50.0)}) {
    const auto diag =
        fsim::theorem1_diagnostics(DesignDistribution(DesignTag::Gaussian), 50, 25, snr, cfg);
    check.note("snr " + fmt(snr) + ": rejection " + fmt(diag.rejection_rate) + ", normal " +
               fmt(diag.normal_approx) + ", gap " + fmt(diag.gap));
    check.expect(std::fabs(diag.gap) <= 0.03,
                 "gap " + fmt(diag.gap) + " exceeds 0.03 at snr " + fmt(snr));
  }
  return check;
}

Check criterion_noncentral_kernel() {
  Check check;
  testsupport::Rng rng(20240817);
  const int n = 1000000;
  for (double lambda : {1.0, 3.0, 10.0}) {
    std::vector<double> ratios(n);
    for (int i = 0; i < n; ++i) {
      const double num = rng.noncentral_chi_square(5, lambda) / 5.0;
      const double den = rng.chi_square(44) / 44.0;
      ratios[i] = num / den;
    }
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
      int below = 0;
      for (double r : ratios) {
        if (r <= t) ++below;
      }
      const double estimate = static_cast<double>(below) / n;
      const double exact = fsim::f_cdf(t, {5, 44, lambda});
      const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / n);
      std::ostringstream what;
      what << "lambda=" << lambda << " t=" << t << ": cdf " << exact << " vs MC " << estimate
           << " (3se " << fmt(3.0 * se) << ")";
      check.expect(std::fabs(estimate - exact) <= 3.0 * se, what.str());
    }
  }
  return check;
}

Check criterion_surrogate_variance() {
  Check check;
  testsupport::Rng pick(99);
  const DesignTag tags[] = {DesignTag::Gaussian, DesignTag::ExponentialCentered,
                            DesignTag::UniformSymmetric, DesignTag::Rademacher,
                            DesignTag::StudentT5, DesignTag::StudentT3};
  int failures = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 4 + static_cast<int>(pick.uniform() * 7);  // 4..10
    const int p = 1 + static_cast<int>(pick.uniform() * std::min(3, d - 1));
    const DesignTag tag = tags[static_cast<int>(pick.uniform() * 6)];

    fsim::ModelSpec spec;
    spec.d = d;
    spec.p = p;
    spec.n = 1000000;
    spec.design = DesignDistribution(tag);
    spec.noise_sd = 0.2 + pick.uniform();
    spec.submodel = fsim::selection_matrix(d, p);
    const std::uint64_t seed = kAcceptanceSeed + 1000 + trial;
    fsim::RandomStream cov_rng = fsim::RandomStream::derive(seed, {1});
    spec.covariance = std::make_shared<fsim::RealizedCovariance>(fsim::build_covariance(
        trial % 2 == 0 ? fsim::CovarianceSpec::spiked(400.0, 2) : fsim::CovarianceSpec::ar1(0.5), d,
        cov_rng));
    Eigen::VectorXd theta(d);
    for (int i = 0; i < d; ++i) theta[i] = pick.normal();
    spec.theta = theta / theta.norm();
    fsim::RandomStream rot_rng = fsim::RandomStream::derive(seed, {2});
    spec.rotation = fsim::haar_orthogonal(d, rot_rng);

    const auto surrogate = fsim::surrogate_params(spec);
    fsim::RandomStream data_rng = fsim::RandomStream::derive(seed, {3});
    const fsim::Dataset data = fsim::sample_dataset(spec, data_rng);
    Eigen::VectorXd e = data.Y - Eigen::VectorXd::Constant(spec.n, surrogate.intercept) -
                        data.X * surrogate.slope;
    const double mean = e.mean();
    double m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < spec.n; ++i) {
      const double c = e[i] - mean;
      m2 += c * c;
      m4 += c * c * c * c;
    }
    m2 /= spec.n;
    m4 /= spec.n;
    const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / spec.n);
    if (std::fabs(m2 - surrogate.error_var) > 3.0 * se) {
      ++failures;
      std::ostringstream what;
      what << "spec " << trial << " (" << DesignDistribution(tag).name() << " d=" << d
           << " p=" << p << "): sample var " << m2 << " vs s^2 " << surrogate.error_var
           << " (3se " << fmt(3.0 * se) << ")";
      check.expect(false, what.str());
    }
  }
  check.note(std::to_string(20 - failures) + "/20 specs within 3 standard errors");
  return check;
}

Check criterion_oracle_exactness() {
  Check check;
  // (2,1)/sqrt(5) frame on {-1,1}^2.
  {
    fsim::EnumeratedDesign design{2};
    Eigen::MatrixXd b(2, 1);
    b << 2.0, 1.0;
    b /= std::sqrt(5.0);
    const auto report = fsim::conditional_moments(design, b);
    double dev_at_plus_plus = -1.0;
    for (const auto& fiber : report.fibers) {
      if (fiber.mean(0) == 1.0 && fiber.mean(1) == 1.0) {
        dev_at_plus_plus = (fiber.mean - b * fiber.projected).norm();
      }
    }
    check.note("deviation at (1,1): " + fmt(dev_at_plus_plus));
    check.expect(std::fabs(dev_at_plus_plus - 1.0 / std::sqrt(5.0)) <= 1e-12,
                 "deviation at (1,1) is " + fmt(dev_at_plus_plus) + ", want 1/sqrt(5)");
  }
  // Axis-aligned fibers are exactly clean.
  {
    fsim::EnumeratedDesign design{8};
    const auto report = fsim::conditional_moments(design, fsim::selection_matrix(8, 2));
    check.expect(report.max_mean_deviation == 0.0, "axis-aligned mean deviation nonzero");
  }
  // Gaussian closed form and risk ordering.
  {
    fsim::ModelSpec spec;
    spec.d = 10;
    spec.p = 2;
    spec.n = 40;
    spec.design = DesignDistribution(DesignTag::Gaussian);
    spec.noise_sd = 0.5;
    spec.submodel = fsim::selection_matrix(10, 2);
    fsim::RandomStream cov_rng = fsim::RandomStream::derive(kAcceptanceSeed, {7});
    spec.covariance = std::make_shared<fsim::RealizedCovariance>(
        fsim::build_covariance(fsim::CovarianceSpec::spiked(400.0, 2), 10, cov_rng));
    fsim::RandomStream theta_rng = fsim::RandomStream::derive(kAcceptanceSeed, {8});
    spec.theta = fsim::null_theta(*spec.covariance, spec.submodel, theta_rng);
    const auto gauss_risk = fsim::risk_ratio(spec);
    check.expect(gauss_risk.bayes_over_lin == 1.0, "gaussian risk ratio differs from one");

    spec.design = DesignDistribution(DesignTag::Rademacher);
    for (std::uint64_t k = 0; k < 8; ++k) {
      fsim::RandomStream rot_rng = fsim::RandomStream::derive(kAcceptanceSeed, {9, k});
      spec.rotation = fsim::haar_orthogonal(10, rot_rng);
      const auto risk = fsim::risk_ratio(spec);
      check.expect(risk.r_bayes <= risk.r_linear * (1.0 + 1e-10),
                   "bayes risk exceeds linear risk at draw " + std::to_string(k));
      // Substitute-error identities on the same model.
      fsim::RandomStream data_rng = fsim::RandomStream::derive(kAcceptanceSeed, {10, k});
      Eigen::MatrixXd x, zt;
      Eigen::VectorXd y;
      fsim::SamplerPlan::from_spec(spec).sample_with_design(data_rng, x, y, zt);
      const auto sub = fsim::substitute_errors(spec, {x, y}, zt);
      const auto surrogate = fsim::surrogate_params(spec);
      check.expect(std::fabs(sub.population_mean) <= 1e-10, "population mean of E[e|x] nonzero");
      check.expect(std::fabs(sub.population_var - surrogate.error_var) <=
                       1e-10 * surrogate.error_var,
                   "population variance of e* differs from s^2");
    }
  }
  return check;
}

Check criterion_determinism() {
  Check check;
  RunConfig cfg = paper_config();
  cfg.designs = {DesignDistribution(DesignTag::ExponentialCentered)};
  cfg.dims = {50};
  cfg.p_dims = {5};
  cfg.reps = 200;
  cfg.r_count = 20;
  std::vector<std::string> outputs;
  for (int threads : {1, 4, 16}) {
    cfg.threads = threads;
    const auto cells = fsim::table1(cfg);
    outputs.push_back(fsim::render_table1_csv(cells) + fsim::render_cells_csv(cells));
  }
  check.expect(outputs[0] == outputs[1], "threads=1 and threads=4 outputs differ");
  check.expect(outputs[0] == outputs[2], "threads=1 and threads=16 outputs differ");
  return check;
}

Check criterion_f_invariance() {
  Check check;
  testsupport::Rng rng(4242);
  int checked = 0;
  int failed = 0;
  while (checked < 500) {
    const int n = 20, p = 3;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
      y(i) = rng.normal();
    }
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
    }
    if (std::fabs(a.determinant()) < 1e-3) continue;
    Eigen::VectorXd c(p);
    for (int i = 0; i < p; ++i) c(i) = rng.normal();
    const double shift = rng.normal();
    const double scale = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform() * 3.0);

    const double base = fsim::f_statistic(x, y);
    const Eigen::MatrixXd x2 = x * a + Eigen::VectorXd::Ones(n) * c.transpose();
    const Eigen::VectorXd y2 = Eigen::VectorXd::Constant(n, shift) + scale * y;
    const double transformed = fsim::f_statistic(x2, y2);
    if (std::fabs(transformed - base) > 1e-8 * std::max(1.0, base)) ++failed;
    ++checked;
  }
  check.note("500 affine-transformed instances checked");
  check.expect(failed == 0, std::to_string(failed) + " instances broke invariance");

  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  check.expect(fsim::f_statistic(x, y) == 0.0, "perfect fit did not return exactly 0");
  return check;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Check()> run;
  };

  std::vector<fsim::CellResult> shared_d10;
  const std::vector<Criterion> criteria = {
      {1, "gaussian noise floor", criterion_gauss_noise_floor},
      {2, "misspecification decay in d (exp)", criterion_exp_decay_in_d},
      {3, "heavy-tail failure persists (t2)", criterion_heavy_tails_persist},
      {4, "dbar growth in p at d=10", [&] { return criterion_growth_in_p(shared_d10); }},
      {5, "direction of bias at d=10, p=5", [&] { return criterion_bias_direction(shared_d10); }},
      {6, "KS against the F reference at the null", criterion_ks_null},
      {7, "normal approximation gap", criterion_normal_approx_gap},
      {8, "noncentral F kernel vs chi-square-ratio MC", criterion_noncentral_kernel},
      {9, "surrogate error variance vs sampling", criterion_surrogate_variance},
      {10, "enumeration oracle exactness", criterion_oracle_exactness},
      {11, "byte-identical outputs across thread counts", criterion_determinism},
      {12, "F-statistic invariance suite", criterion_f_invariance},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (criterion.id == 4) shared_d10 = d10_cells();  // shared by 4 and 5
    Check check;
    try {
      check = criterion.run();
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail << "  EXCEPTION: " << e.what() << "\n";
    }
    std::printf("criterion %02d %-46s %s\n", criterion.id, criterion.name,
                check.ok ? "PASS" : "FAIL");
    const std::string detail = check.detail.str();
    if (!detail.empty()) std::fputs(detail.c_str(), stdout);
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
