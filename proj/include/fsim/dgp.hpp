#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fsim/linmodel.hpp"
#include "fsim/rng.hpp"

namespace fsim {

// ---------------------------------------------------------------------------
// Design distributions
// ---------------------------------------------------------------------------

/// The centered laws used for the i.i.d. components of the standardized
/// design vector. Enum values are frozen; they enter substream derivation.
enum class DesignTag : int {
  StudentT2 = 2,
  StudentT3 = 3,
  StudentT5 = 5,
  ExponentialCentered = 10,
  UniformSymmetric = 11,
  Rademacher = 12,
  Gaussian = 13,
};

class DesignDistribution {
 public:
  DesignDistribution() = default;
  explicit DesignDistribution(DesignTag tag) : tag_(tag) {}

  DesignTag tag() const { return tag_; }
  std::uint64_t stream_tag() const { return static_cast<std::uint64_t>(tag_); }

  double sample(RandomStream& rng) const;
  /// Fills a vector with i.i.d. draws (component order is part of the
  /// reproducibility contract).
  void fill(RandomStream& rng, Eigen::VectorXd& out) const;

  /// Variance of one component; +infinity for t(2).
  double variance() const;
  bool has_density() const;
  /// Supremum of the marginal density; throws for Rademacher.
  double density_bound() const;
  /// E|z|^order; +infinity where the moment does not exist.
  double abs_moment(int order) const;

  const char* name() const;
  static DesignDistribution parse(const std::string& text);
  static const std::vector<DesignDistribution>& table_panels();  // the six table panels
  static const std::vector<DesignDistribution>& all();

  friend bool operator==(DesignDistribution a, DesignDistribution b) { return a.tag_ == b.tag_; }

 private:
  DesignTag tag_ = DesignTag::Gaussian;
};

/// Analytic density/moment report for one design law.
struct MomentReport {
  bool has_density = false;
  std::optional<double> density_bound;
  double max_abs_moment = 0.0;       // over finite orders 1..k
  std::vector<int> infinite_orders;  // orders <= k without a finite moment
};

MomentReport moment_check(const DesignDistribution& design, int k);

// ---------------------------------------------------------------------------
// Covariance
// ---------------------------------------------------------------------------

struct CovarianceSpec {
  enum class Kind { Spiked, AR1, Explicit };
  Kind kind = Kind::Spiked;
  double spike_value = 400.0;
  int spike_count = 2;
  double rho = 0.5;
  Eigen::MatrixXd matrix;  // Explicit only

  static CovarianceSpec spiked(double value, int count);
  static CovarianceSpec ar1(double rho);
  static CovarianceSpec explicit_matrix(Eigen::MatrixXd sigma);
  /// Accepts "spiked", "spiked:VALUE,COUNT" and "ar1:RHO".
  static CovarianceSpec parse(const std::string& text);
  std::string label() const;
};

/// A realized covariance with fast multiply handles. Spiked covariances are
/// kept in the rank-k form Sigma = I + (s-1) U U', so products with Sigma and
/// Sigma^{1/2} cost O(d k) instead of O(d^2).
class RealizedCovariance {
 public:
  static RealizedCovariance spiked(double spike_value, Eigen::MatrixXd u);
  static RealizedCovariance from_dense(Eigen::MatrixXd sigma);

  int dim() const { return d_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
  Eigen::VectorXd apply_sqrt(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd apply_sqrt(const Eigen::MatrixXd& m) const;
  double quadratic(const Eigen::VectorXd& v) const;  // v' Sigma v
  Eigen::MatrixXd dense() const;
  Eigen::MatrixXd dense_sqrt() const;

 private:
  int d_ = 0;
  bool low_rank_ = false;
  double spike_ = 1.0;
  Eigen::MatrixXd u_;           // d x k, orthonormal columns (low-rank form)
  Eigen::MatrixXd dense_;       // dense form
  Eigen::MatrixXd dense_sqrt_;  // cached square root of the dense form
};

RealizedCovariance build_covariance(const CovarianceSpec& spec, int d, RandomStream& rng);

// ---------------------------------------------------------------------------
// Orthogonal matrices and the submodel
// ---------------------------------------------------------------------------

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// each column of Q flipped to the sign of the matching diagonal entry of the
/// triangular factor.
Eigen::MatrixXd haar_orthogonal(int d, RandomStream& rng);

/// R' B for a fresh Haar R, applied through the Householder reflectors
/// without materializing R. Consumes the stream exactly like
/// haar_orthogonal(d, rng) and produces the same R.
Eigen::MatrixXd haar_transposed_product(int d, const Eigen::MatrixXd& b, RandomStream& rng);

/// d x p matrix whose k-th column is the k-th standard basis vector.
Eigen::MatrixXd selection_matrix(int d, int p);

/// The orthonormal submodel frame R' Sigma^{1/2} M (M' Sigma M)^{-1/2} for a
/// fresh Haar rotation R: the conditioning frame of the standardized design.
Eigen::MatrixXd rotated_submodel_frame(const RealizedCovariance& cov, const Eigen::MatrixXd& m,
                                       RandomStream& rng);

// ---------------------------------------------------------------------------
// Model specification and surrogate parameters
// ---------------------------------------------------------------------------

/// Full description of the true model, the design law and the fitted
/// submodel. An empty mu or rotation stands for zero / identity.
struct ModelSpec {
  int d = 0;
  int p = 0;
  int n = 0;
  Eigen::VectorXd theta;
  double intercept_true = 0.0;  // vartheta
  Eigen::VectorXd mu;
  std::shared_ptr<const RealizedCovariance> covariance;
  Eigen::MatrixXd rotation;  // d x d orthogonal
  DesignDistribution design;
  double noise_sd = 0.0;
  Eigen::MatrixXd submodel;  // M, d x p full rank

  void validate() const;
};

/// Population parameters of the working regression of y on (1, x): the
/// minimizers of E(y - a - b'x)^2, the residual variance, and the
/// signal-to-noise ratio that drives the noncentrality.
struct SurrogateParams {
  double intercept = 0.0;
  Eigen::VectorXd slope;
  double error_var = 0.0;
  double snr = 0.0;
};

/// Unit vector theta with M' Sigma theta = 0: a standard normal draw
/// projected off the column space of Sigma M and normalized.
Eigen::VectorXd null_theta(const RealizedCovariance& cov, const Eigen::MatrixXd& m, RandomStream& rng);

SurrogateParams surrogate_params(const ModelSpec& spec);

/// theta = c * M v + theta_perp with c chosen in closed form so that the
/// signal-to-noise ratio equals snr_target; exact because M' Sigma theta_perp
/// = 0 makes the residual variance constant in c. design_var is the
/// component variance of the design law (1 for the standardized ones).
Eigen::VectorXd calibrate_theta(const RealizedCovariance& cov, const Eigen::MatrixXd& m,
                                const Eigen::VectorXd& theta_perp, const Eigen::VectorXd& v,
                                double sigma2, double snr_target, double design_var = 1.0);

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Per-spec precomputation for dataset sampling: one (p+1) x d coefficient
/// block maps each standardized design draw to (x, y), so an observation
/// costs O(d (p+1)).
class SamplerPlan {
 public:
  static SamplerPlan from_spec(const ModelSpec& spec);
  /// Assembles a plan from an already-rotated frame
  /// G = R' [Sigma^{1/2} M, Sigma^{1/2} theta] (d x (p+1)).
  static SamplerPlan from_rotated_frame(const Eigen::MatrixXd& g, const Eigen::VectorXd& offset_x,
                                        double offset_y, DesignDistribution design, int n,
                                        double noise_sd);

  void sample(RandomStream& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y) const;
  Dataset sample(RandomStream& rng) const;
  /// Also returns the standardized design draws (n x d), for the
  /// enumeration oracles.
  void sample_with_design(RandomStream& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y,
                          Eigen::MatrixXd& z_tilde) const;

  int n() const { return n_; }
  int p() const { return p_; }
  int d() const { return d_; }
  /// Columns of the rotated frame: first p are R' Sigma^{1/2} M, last is
  /// R' Sigma^{1/2} theta.
  const Eigen::MatrixXd& rotated_frame() const { return frame_; }

 private:
  Eigen::MatrixXd frame_;    // d x (p+1)
  Eigen::MatrixXd coeff_;    // (p+1) x d, = frame'
  Eigen::VectorXd offset_x_;  // M' mu
  double offset_y_ = 0.0;    // vartheta + mu' theta
  DesignDistribution design_;
  double noise_sd_ = 0.0;
  int n_ = 0, p_ = 0, d_ = 0;
};

Dataset sample_dataset(const ModelSpec& spec, RandomStream& rng);

}  // namespace fsim
