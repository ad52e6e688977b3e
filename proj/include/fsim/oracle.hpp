#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fsim/dgp.hpp"
#include "fsim/mc.hpp"

namespace fsim {

/// The exhaustive Rademacher design: all 2^d sign vectors with uniform
/// weights. Atoms are indexed by bitmask and generated on demand, so d = 20
/// (about a million atoms) stays cheap on memory.
struct EnumeratedDesign {
  int d = 0;
  double tolerance = 1e-9;  // grouping tolerance for values of B'z

  void validate() const;
  std::uint32_t atom_count() const { return 1u << d; }
  Eigen::VectorXd atom(std::uint32_t index) const;
};

/// Exact conditional moments on one fiber of B'z.
struct FiberMoments {
  Eigen::VectorXd projected;  // representative B'z value
  double weight = 0.0;
  Eigen::VectorXd mean;       // E[z | B'z]
  Eigen::MatrixXd second;     // E[z z' | B'z]
};

struct ConditionalMomentReport {
  std::size_t fiber_count = 0;
  /// max over atoms of || E[z | B'z] - B B' z ||
  double max_mean_deviation = 0.0;
  /// max over atoms of the spectral norm of
  /// E[z z' | B'z] - (I - B B' + B B' z z' B B')
  double max_second_deviation = 0.0;
  bool collision_warning = false;
  std::vector<FiberMoments> fibers;  // populated when fiber_count <= detail limit
};

/// Groups the 2^d atoms by the value of B'z (orthonormal-column B) and
/// returns exact conditional moments plus the deviation maxima of the
/// approximate-projection displays.
ConditionalMomentReport conditional_moments(const EnumeratedDesign& design, const Eigen::MatrixXd& b,
                                            std::size_t fiber_detail_limit = 4096);

/// Distribution of the conditional-mean deviation over atoms: one
/// (deviation, probability) pair per fiber.
struct DeviationAtom {
  double deviation = 0.0;
  double weight = 0.0;
};
std::vector<DeviationAtom> mean_deviation_profile(const EnumeratedDesign& design,
                                                  const Eigen::MatrixXd& b);

enum class FrameRecipe { AxisAligned, RotatedSubmodel };

struct TailProbeRow {
  int d = 0;
  int frame = 0;
  double t = 0.0;
  double probability = 0.0;  // exact P(||E[z|B'z] - BB'z|| > t)
};

/// Exact tail probabilities of the conditional-mean deviation for frames
/// drawn per recipe: the submodel frame R' Sigma^{1/2} M (M' Sigma M)^{-1/2}
/// under Haar R, or the plain axis-aligned frame.
std::vector<TailProbeRow> tail_probe(int p, const std::vector<int>& d_grid,
                                     const std::vector<double>& t_grid, int frame_count,
                                     const CovarianceSpec& covariance, FrameRecipe recipe,
                                     std::uint64_t seed);

/// Substitute errors e*_i = s (Var[e_i|x_i])^{-1/2} (e_i - E[e_i|x_i]) with
/// conditional moments taken exactly from the enumeration (Rademacher) or the
/// closed form (Gaussian).
struct SubstituteErrors {
  Eigen::VectorXd e_star;
  std::vector<int> excluded;      // observations on a zero-variance fiber
  double population_mean = 0.0;   // exact atom-weighted mean of E[e | x]
  double population_var = 0.0;    // exact atom-weighted variance of e*
  double max_var_ratio_dev = 0.0; // max over observations |Var[e_i|x_i]/s^2 - 1|
  double degenerate_weight = 0.0; // atom mass on zero-variance fibers
};

SubstituteErrors substitute_errors(const ModelSpec& spec, const Dataset& data,
                                   const Eigen::MatrixXd& z_tilde);

/// Paired simulation of |F(X,Y) - F(X,Y*)| with Y* rebuilt from substitute
/// errors; replications touching a degenerate fiber are dropped and counted.
struct GapStudyResult {
  std::vector<double> gaps;  // kept replications, unsorted
  double q10 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q90 = 0.0;
  int excluded_replications = 0;
  double ks_substitute = 0.0;  // KS of the Y*-based statistics vs the central F
};

GapStudyResult fstat_gap_study(const ModelSpec& spec, const RunConfig& cfg);

/// Prediction risks of the best linear predictor (r_linear = Var e) and the
/// Bayes predictor (r_bayes = E Var[e|x]), exact by enumeration for
/// Rademacher designs and in closed form for Gaussian ones.
struct RiskRatioResult {
  double r_linear = 0.0;
  double r_bayes = 0.0;
  double lin_over_bayes = 1.0;  // >= 1
  double bayes_over_lin = 1.0;  // <= 1
};

RiskRatioResult risk_ratio(const ModelSpec& spec);

}  // namespace fsim
