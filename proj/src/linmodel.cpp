#include "fsim/linmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fsim {

namespace {

constexpr double kRankTol = 1e-12;
constexpr double kRssTol = 1e-12;

struct QrSums {
  double proj_mean_sq = 0.0;  // ||P_1 Y||^2
  double model_ss = 0.0;
  double rss = 0.0;
  bool rank_deficient = false;
};

// Shared QR pipeline: factor [1 X], rotate Y, and read off the nested
// sums of squares. With the intercept first, entry 0 of the rotated
// response carries the mean projection, entries 1..p the model block and
// the rest the residual block.
QrSums qr_sums(Eigen::MatrixXd& augmented, Eigen::VectorXd& rotated,
               Eigen::HouseholderQR<Eigen::MatrixXd>& qr, const Eigen::MatrixXd& X,
               const Eigen::VectorXd& Y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n != Y.size()) {
    throw std::invalid_argument("f_statistic/ols: X and Y row counts differ");
  }
  if (n < p + 1) {
    throw std::invalid_argument("f_statistic/ols: need n > p");
  }
  augmented.resize(n, p + 1);
  augmented.col(0).setOnes();
  augmented.rightCols(p) = X;
  qr.compute(augmented);
  rotated = qr.householderQ().transpose() * Y;

  QrSums sums;
  const auto diag = qr.matrixQR().diagonal().head(p + 1);
  const double diag_max = diag.cwiseAbs().maxCoeff();
  sums.rank_deficient = diag.cwiseAbs().minCoeff() <= kRankTol * diag_max;
  sums.proj_mean_sq = rotated(0) * rotated(0);
  sums.model_ss = rotated.segment(1, p).squaredNorm();
  sums.rss = rotated.tail(n - p - 1).squaredNorm();
  return sums;
}

double f_from_sums(const QrSums& sums, Eigen::Index n, Eigen::Index p) {
  if (n <= p + 1) return 0.0;
  const double tss = sums.model_ss + sums.rss;  // centered total SS
  if (sums.rank_deficient || tss <= 0.0 || sums.rss <= kRssTol * tss) {
    return 0.0;  // F_hat = 0 convention for degenerate cases
  }
  const double s2 = sums.rss / static_cast<double>(n - p - 1);
  return sums.model_ss / (static_cast<double>(p) * s2);
}

}  // namespace

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) {
    throw std::invalid_argument("sym_sqrt: matrix must be square");
  }
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::domain_error("sym_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_sqrt: eigendecomposition failed");
  }
  const Eigen::VectorXd& eigs = solver.eigenvalues();
  const double max_eig = eigs.maxCoeff();
  if (eigs.minCoeff() <= 1e-12 * max_eig) {
    throw std::domain_error("sym_sqrt: matrix is not positive definite");
  }
  Eigen::MatrixXd root =
      solver.eigenvectors() * eigs.cwiseSqrt().asDiagonal() * solver.eigenvectors().transpose();
  return 0.5 * (root + root.transpose());
}

OlsFit ols_with_intercept(const Dataset& data) {
  const Eigen::Index n = data.X.rows();
  const Eigen::Index p = data.X.cols();
  Eigen::MatrixXd augmented;
  Eigen::VectorXd rotated;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr;
  const QrSums sums = qr_sums(augmented, rotated, qr, data.X, data.Y);

  OlsFit fit;
  fit.rank_deficient = sums.rank_deficient;
  fit.rss = sums.rss;
  fit.model_ss = sums.model_ss;
  Eigen::VectorXd coef(p + 1);
  if (!sums.rank_deficient) {
    coef = qr.matrixQR().topLeftCorner(p + 1, p + 1).triangularView<Eigen::Upper>().solve(
        rotated.head(p + 1));
  } else {
    // Stable fallback for the flagged case; the triangular solve above
    // would divide by a vanishing pivot.
    Eigen::MatrixXd aug(n, p + 1);
    aug.col(0).setOnes();
    aug.rightCols(p) = data.X;
    coef = aug.colPivHouseholderQr().solve(data.Y);
  }
  fit.intercept_hat = coef(0);
  fit.slope_hat = coef.tail(p);
  return fit;
}

double f_statistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
  Eigen::MatrixXd augmented;
  Eigen::VectorXd rotated;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr;
  const QrSums sums = qr_sums(augmented, rotated, qr, X, Y);
  return f_from_sums(sums, X.rows(), X.cols());
}

double f_statistic(const Dataset& data) { return f_statistic(data.X, data.Y); }

double FStatScratch::compute(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
  const QrSums sums = qr_sums(augmented_, rotated_, qr_, X, Y);
  return f_from_sums(sums, X.rows(), X.cols());
}

double ks_sup_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) {
    throw std::invalid_argument("ks_sup_distance: sample is empty");
  }
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double value = cdf(sample[i]);
    dist = std::max(dist, (static_cast<double>(i) + 1.0) / n - value);
    dist = std::max(dist, value - static_cast<double>(i) / n);
  }
  return dist;
}

}  // namespace fsim
