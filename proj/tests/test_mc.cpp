#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <vector>

#include "fsim/mc.hpp"
#include "fsim/report.hpp"
#include "fsim/specfun.hpp"
#include "support.hpp"

using fsim::DesignDistribution;
using fsim::DesignTag;
using fsim::RunConfig;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.seed = 424242;
  cfg.reps = 100;
  cfg.r_count = 10;
  cfg.dims = {10, 20};
  cfg.p_dims = {2};
  cfg.designs = {DesignDistribution(DesignTag::Gaussian),
                 DesignDistribution(DesignTag::ExponentialCentered)};
  cfg.threads = 1;
  return cfg;
}

// E|X/reps - level| for X ~ Binomial(reps, level), by direct summation.
double binomial_mean_abs_deviation(int reps, double level) {
  double acc = 0.0;
  const double log_p = std::log(level);
  const double log_q = std::log1p(-level);
  for (int k = 0; k <= reps; ++k) {
    const double log_pmf = fsim::ln_gamma(reps + 1.0) - fsim::ln_gamma(k + 1.0) -
                           fsim::ln_gamma(reps - k + 1.0) + k * log_p + (reps - k) * log_q;
    acc += std::exp(log_pmf) * std::fabs(static_cast<double>(k) / reps - level);
  }
  return acc;
}

}  // namespace

TEST_CASE("parallel_for covers the range and propagates exceptions") {
  std::vector<int> hits(100, 0);
  fsim::parallel_for(0, 100, 4, [&](int i) { hits[i] += 1; });
  CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 100);
  CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
  CHECK_THROWS_AS(
      fsim::parallel_for(0, 8, 3, [](int i) { if (i == 5) throw std::runtime_error("boom"); }),
      std::runtime_error);
}

TEST_CASE("run configs validate their grids") {
  RunConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  RunConfig bad_level = cfg;
  bad_level.level = 0.0;
  CHECK_THROWS_AS(bad_level.validate(), std::invalid_argument);
  RunConfig bad_p = cfg;
  bad_p.p_dims = {49};
  CHECK_THROWS_AS(bad_p.validate(), std::invalid_argument);
  RunConfig empty = cfg;
  empty.dims.clear();
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("table1 omits the staircase cells") {
  RunConfig cfg = small_config();
  cfg.dims = {4, 10};
  cfg.p_dims = {2, 5};
  cfg.designs = {DesignDistribution(DesignTag::Gaussian)};
  const auto cells = fsim::table1(cfg);
  REQUIRE(cells.size() == 3);  // (4,2), (10,2), (10,5); (4,5) is blank
  CHECK(cells[0].d == 4);
  CHECK(cells[0].p == 2);
  CHECK(cells[1].d == 10);
  CHECK(cells[1].p == 2);
  CHECK(cells[2].d == 10);
  CHECK(cells[2].p == 5);
}

TEST_CASE("reports are byte-identical across thread counts") {
  RunConfig cfg = small_config();
  std::vector<std::string> renders;
  for (int threads : {1, 4, 16}) {
    cfg.threads = threads;
    const auto cells = fsim::table1(cfg);
    renders.push_back(fsim::render_cells_csv(cells) + fsim::render_table1_csv(cells));
  }
  CHECK(renders[0] == renders[1]);
  CHECK(renders[0] == renders[2]);
}

TEST_CASE("rejection rates are exact multiples of 1/reps and dbar is their mean deviation") {
  RunConfig cfg = small_config();
  const auto cell = fsim::run_cell(DesignDistribution(DesignTag::ExponentialCentered), 10, 2, cfg);
  REQUIRE(cell.pbars.size() == static_cast<std::size_t>(cfg.r_count));
  double recomputed = 0.0;
  for (double pbar : cell.pbars) {
    const double count = pbar * cfg.reps;
    CHECK(std::fabs(count - std::round(count)) <= 1e-9);
    recomputed += std::fabs(pbar - cfg.level);
  }
  recomputed /= cfg.r_count;
  CHECK(cell.dbar == recomputed);
}

TEST_CASE("gaussian cells sit at the binomial noise floor") {
  RunConfig cfg = small_config();
  cfg.reps = 400;
  cfg.r_count = 30;
  const auto cell = fsim::run_cell(DesignDistribution(DesignTag::Gaussian), 50, 5, cfg);
  CHECK(cell.dbar < 0.03);
}

TEST_CASE("the binomial-exact noise floor is about 0.0055") {
  const double expectation = binomial_mean_abs_deviation(1000, 0.05);
  CHECK(expectation == doctest::Approx(0.0055).epsilon(0.04));
}

TEST_CASE("benchmark panel statistics") {
  RunConfig cfg;
  cfg.seed = 77;
  cfg.reps = 1000;
  cfg.r_count = 100;
  const auto panel = fsim::benchmark_panel(cfg);
  REQUIRE(panel.draws.size() == 4);
  for (std::size_t i = 0; i < panel.draws.size(); ++i) {
    REQUIRE(panel.draws[i].size() == 100);
    const double a = panel.probabilities[i];
    double mean = 0.0;
    for (double v : panel.draws[i]) {
      const double count = v * cfg.reps;
      CHECK(std::fabs(count - std::round(count)) <= 1e-9);  // multiples of 1/reps
      mean += v;
    }
    mean /= panel.draws[i].size();
    const double se = std::sqrt(a * (1.0 - a) / cfg.reps / 100.0);
    CHECK(std::fabs(mean - a) <= 4.0 * se);
  }
  // The exact binomial tail outside [0.14, 0.26] at a = 0.2 is far below 1%,
  // so a fixed-seed panel should stay inside.
  {
    double outside = 0.0;
    const double log_p = std::log(0.2), log_q = std::log1p(-0.2);
    for (int k = 0; k <= 1000; ++k) {
      if (k >= 140 && k <= 260) continue;
      outside += std::exp(fsim::ln_gamma(1001.0) - fsim::ln_gamma(k + 1.0) -
                          fsim::ln_gamma(1001.0 - k) + k * log_p + (1000 - k) * log_q);
    }
    CHECK(outside < 0.01);
  }
  for (double v : panel.draws[3]) {
    CHECK(v >= 0.14);
    CHECK(v <= 0.26);
  }
}

TEST_CASE("boxplot cells: gaussian rejection rates have binomial spread") {
  RunConfig cfg;
  cfg.seed = 606;
  cfg.reps = 1000;  // the binomial SD target assumes the full replication count
  cfg.r_count = 40;
  cfg.threads = 2;
  const auto cell = fsim::run_cell(DesignDistribution(DesignTag::Gaussian), 50, 5, cfg);
  const double mean = testsupport::mean(cell.pbars);
  double var = 0.0;
  for (double p : cell.pbars) var += (p - mean) * (p - mean);
  var /= cell.pbars.size() - 1;
  const double sd = std::sqrt(var);
  const double binomial_sd = std::sqrt(0.05 * 0.95 / cfg.reps);  // about 0.0069
  CHECK(sd >= 0.6 * binomial_sd);
  CHECK(sd <= 1.4 * binomial_sd);
}

TEST_CASE("exponential dbar decays in d at p=1") {
  RunConfig cfg;
  cfg.seed = 808;
  cfg.reps = 400;
  cfg.r_count = 40;
  cfg.threads = 2;
  const auto small_d = fsim::run_cell(DesignDistribution(DesignTag::ExponentialCentered), 10, 1, cfg);
  const auto large_d = fsim::run_cell(DesignDistribution(DesignTag::ExponentialCentered), 200, 1, cfg);
  CHECK(small_d.dbar > large_d.dbar);
}

TEST_CASE("exponential rejection rates concentrate at the level as d grows") {
  RunConfig cfg;
  cfg.seed = 707;
  cfg.reps = 250;
  cfg.r_count = 8;
  cfg.threads = 2;
  const auto small_d = fsim::run_cell(DesignDistribution(DesignTag::ExponentialCentered), 10, 5, cfg);
  const auto large_d =
      fsim::run_cell(DesignDistribution(DesignTag::ExponentialCentered), 1000, 5, cfg);
  const double med_small = testsupport::median(small_d.pbars);
  const double med_large = testsupport::median(large_d.pbars);
  CHECK(std::fabs(med_large - cfg.level) < std::fabs(med_small - cfg.level));
}

TEST_CASE("diagnostics at the null reduce to the level identity") {
  RunConfig cfg;
  cfg.seed = 515;
  cfg.reps = 200;
  cfg.r_count = 20;
  cfg.threads = 2;
  const auto diag =
      fsim::theorem1_diagnostics(DesignDistribution(DesignTag::Gaussian), 30, 5, 0.0, cfg);
  CHECK(diag.normal_approx == cfg.level);
  CHECK(diag.snr_realized <= 1e-15);
  CHECK(diag.ks_vs_noncentral_f < 0.05);
  CHECK(std::fabs(diag.rejection_rate - cfg.level) < 0.02);
  CHECK(diag.gap == diag.rejection_rate - diag.normal_approx);
}

TEST_CASE("diagnostics are deterministic across thread counts") {
  RunConfig cfg;
  cfg.seed = 929;
  cfg.reps = 100;
  cfg.r_count = 10;
  cfg.threads = 1;
  const auto a = fsim::theorem1_diagnostics(DesignDistribution(DesignTag::ExponentialCentered), 20,
                                            3, 0.02, cfg);
  cfg.threads = 8;
  const auto b = fsim::theorem1_diagnostics(DesignDistribution(DesignTag::ExponentialCentered), 20,
                                            3, 0.02, cfg);
  CHECK(a.ks_vs_noncentral_f == b.ks_vs_noncentral_f);
  CHECK(a.rejection_rate == b.rejection_rate);
  CHECK(a.normal_approx == b.normal_approx);
  CHECK(a.snr_realized == b.snr_realized);
}

TEST_CASE("calibrated snr reaches the diagnostics") {
  RunConfig cfg;
  cfg.seed = 31337;
  cfg.reps = 100;
  cfg.r_count = 10;
  const double snr = 0.3 / std::sqrt(50.0);
  const auto diag = fsim::theorem1_diagnostics(DesignDistribution(DesignTag::Gaussian), 40, 5, snr, cfg);
  CHECK(diag.snr_realized == doctest::Approx(snr).epsilon(1e-10));
  CHECK(diag.normal_approx > cfg.level);  // shifted upward under the alternative
}
