#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace fsim {

/// One sample of the working regression: n observations of the p regressors
/// and the response.
struct Dataset {
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd Y;  // n
};

struct OlsFit {
  double intercept_hat = 0.0;
  Eigen::VectorXd slope_hat;
  double rss = 0.0;       // residual sum of squares
  double model_ss = 0.0;  // ||(I - P_1) X beta_hat||^2
  bool rank_deficient = false;
};

/// Symmetric positive definite square root via eigendecomposition.
/// Throws if S is visibly asymmetric or has an eigenvalue below
/// 1e-12 times the largest.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& S);

/// Least squares of Y on [1 X], computed from the Householder QR of the
/// column-augmented matrix. The intercept column comes first, so the
/// rotated response splits exactly into (intercept, model, residual) blocks
/// and model_ss + rss equals the centered total sum of squares.
OlsFit ols_with_intercept(const Dataset& data);

/// F-statistic for slope = 0 in the working regression,
/// ||(I - P_1) X beta_hat||^2 / (p s_hat^2) with s_hat^2 = rss / (n - p - 1).
/// Degenerate inputs (rank-deficient X, perfect fits, constant Y) return
/// exactly 0.
double f_statistic(const Dataset& data);
double f_statistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y);

/// Reusable QR workspace for the Monte Carlo inner loop; avoids reallocating
/// per dataset. Each worker owns one.
class FStatScratch {
 public:
  double compute(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y);

 private:
  Eigen::MatrixXd augmented_;
  Eigen::VectorXd rotated_;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
};

/// sup_t |F_empirical(t) - cdf(t)| over the sample points, the exact
/// Kolmogorov-Smirnov distance between the empirical CDF and a continuous
/// reference CDF.
double ks_sup_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace fsim
