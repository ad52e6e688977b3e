#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fsim/dgp.hpp"

namespace fsim {

/// Runs body(i) for i in [begin, end) on up to `threads` workers. Work items
/// must write to disjoint state; under that contract the result is identical
/// for every thread count.
void parallel_for(int begin, int end, int threads, const std::function<void(int)>& body);

/// Configuration of one simulation run. Every random quantity below derives
/// from `seed` and the grid indices, never from scheduling, so reports are
/// byte-identical across thread counts.
struct RunConfig {
  int n = 50;
  double level = 0.05;
  int reps = 1000;     // replications per rotation draw
  int r_count = 100;   // rotation draws per cell
  std::uint64_t seed = 1729;
  std::vector<int> dims = {2, 4, 10, 50, 100, 200};
  std::vector<int> p_dims = {1, 2, 5, 25};
  std::vector<DesignDistribution> designs = DesignDistribution::table_panels();
  CovarianceSpec covariance = CovarianceSpec::spiked(400.0, 2);
  int threads = 1;
  int sigma_redraws = 1;  // independent (Sigma, theta) realizations to average over

  void validate() const;
};

/// Rejection rates of one (design, d, p) cell: one empirical size per
/// rotation draw, plus their mean absolute deviation from the nominal level.
struct CellResult {
  DesignDistribution design;
  int d = 0;
  int p = 0;
  std::vector<double> pbars;  // r_count * sigma_redraws entries
  double dbar = 0.0;
  double threshold = 0.0;          // central F quantile used for rejection
  std::uint64_t cell_stream = 0;  // substream fingerprint, for the manifest
};

CellResult run_cell(DesignDistribution design, int d, int p, const RunConfig& cfg);

/// All (design, d, p) cells of the configured grid with p < d, in
/// design-major order. Cells with p >= d are omitted (the staircase).
std::vector<CellResult> table1(const RunConfig& cfg);

/// Same cells, retained for distribution plots of the per-rotation rejection
/// rates. Identical sampling to table1; callers choose the grid (p = 5 and
/// d in {10, 50, 100, 1000} for the shipped figures).
std::vector<CellResult> boxplot_data(const RunConfig& cfg);

/// Binomial(reps, a)/reps reference draws: the variability a simulated
/// rejection rate would show with no misspecification at all.
struct BenchmarkPanel {
  std::vector<double> probabilities = {0.05, 0.10, 0.15, 0.20};
  std::vector<std::vector<double>> draws;  // one vector of r_count values per probability
};

BenchmarkPanel benchmark_panel(const RunConfig& cfg);

/// Empirical versions of the two distributional approximations for the
/// F-statistic: the sup-distance to the noncentral F reference, and the
/// rejection-probability gap against the normal approximation.
struct DiagnosticsResult {
  double snr_target = 0.0;
  double snr_realized = 0.0;
  double ks_vs_noncentral_f = 0.0;
  double rejection_rate = 0.0;
  double normal_approx = 0.0;
  double gap = 0.0;
};

/// Simulates reps * r_count F-statistics under a single Haar rotation with
/// the signal-to-noise ratio calibrated to `snr` (the exact null for snr = 0)
/// and compares them with the reference distributions.
DiagnosticsResult theorem1_diagnostics(DesignDistribution design, int d, int p, double snr,
                                       const RunConfig& cfg);

}  // namespace fsim
