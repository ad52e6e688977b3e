#include "fsim/dgp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fsim/specfun.hpp"

namespace fsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

// int_0^1 u^m e^u du as a fast-converging series.
double exp_moment_series(int m) {
  double acc = 0.0;
  double factorial = 1.0;
  for (int j = 0; j < 60; ++j) {
    if (j > 0) factorial *= j;
    acc += 1.0 / (factorial * (m + j + 1));
  }
  return acc;
}

int student_df(DesignTag tag) {
  switch (tag) {
    case DesignTag::StudentT2:
      return 2;
    case DesignTag::StudentT3:
      return 3;
    case DesignTag::StudentT5:
      return 5;
    default:
      return 0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// DesignDistribution
// ---------------------------------------------------------------------------

double DesignDistribution::sample(RandomStream& rng) const {
  switch (tag_) {
    case DesignTag::Gaussian:
      return rng.gaussian();
    case DesignTag::Rademacher:
      return rng.rademacher();
    case DesignTag::UniformSymmetric:
      return 2.0 * rng.uniform01() - 1.0;
    case DesignTag::ExponentialCentered:
      return rng.exponential1() - 1.0;
    default:
      return rng.student_t(student_df(tag_));
  }
}

void DesignDistribution::fill(RandomStream& rng, Eigen::VectorXd& out) const {
  const Eigen::Index n = out.size();
  switch (tag_) {
    case DesignTag::Gaussian:
      for (Eigen::Index i = 0; i < n; ++i) out[i] = rng.gaussian();
      return;
    case DesignTag::Rademacher:
      for (Eigen::Index i = 0; i < n; ++i) out[i] = rng.rademacher();
      return;
    case DesignTag::UniformSymmetric:
      for (Eigen::Index i = 0; i < n; ++i) out[i] = 2.0 * rng.uniform01() - 1.0;
      return;
    case DesignTag::ExponentialCentered:
      for (Eigen::Index i = 0; i < n; ++i) out[i] = rng.exponential1() - 1.0;
      return;
    default: {
      const int df = student_df(tag_);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = rng.student_t(df);
      return;
    }
  }
}

double DesignDistribution::variance() const {
  switch (tag_) {
    case DesignTag::StudentT2:
      return kInf;
    case DesignTag::StudentT3:
      return 3.0;
    case DesignTag::StudentT5:
      return 5.0 / 3.0;
    case DesignTag::UniformSymmetric:
      return 1.0 / 3.0;
    default:
      return 1.0;  // Gaussian, Rademacher, centered exponential
  }
}

bool DesignDistribution::has_density() const { return tag_ != DesignTag::Rademacher; }

double DesignDistribution::density_bound() const {
  switch (tag_) {
    case DesignTag::Gaussian:
      return 1.0 / std::sqrt(2.0 * M_PI);
    case DesignTag::UniformSymmetric:
      return 0.5;
    case DesignTag::ExponentialCentered:
      return 1.0;  // density e^{-(x+1)} on [-1, inf) peaks at x = -1
    case DesignTag::Rademacher:
      throw std::domain_error("density_bound: Rademacher has no Lebesgue density");
    default: {
      const double df = student_df(tag_);
      return std::exp(ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df)) / std::sqrt(df * M_PI);
    }
  }
}

double DesignDistribution::abs_moment(int order) const {
  if (order < 1) throw std::domain_error("abs_moment: order must be >= 1");
  const double m = order;
  switch (tag_) {
    case DesignTag::Gaussian:
      return std::exp(0.5 * m * std::log(2.0) + ln_gamma(0.5 * (m + 1.0))) / std::sqrt(M_PI);
    case DesignTag::Rademacher:
      return 1.0;
    case DesignTag::UniformSymmetric:
      return 1.0 / (m + 1.0);
    case DesignTag::ExponentialCentered: {
      double factorial = 1.0;
      for (int j = 2; j <= order; ++j) factorial *= j;
      return std::exp(-1.0) * (factorial + exp_moment_series(order));
    }
    default: {
      const double df = student_df(tag_);
      if (m >= df) return kInf;
      return std::exp(0.5 * m * std::log(df) + ln_gamma(0.5 * (m + 1.0)) +
                      ln_gamma(0.5 * (df - m)) - ln_gamma(0.5 * df)) /
             std::sqrt(M_PI);
    }
  }
}

const char* DesignDistribution::name() const {
  switch (tag_) {
    case DesignTag::StudentT2:
      return "t2";
    case DesignTag::StudentT3:
      return "t3";
    case DesignTag::StudentT5:
      return "t5";
    case DesignTag::ExponentialCentered:
      return "exp";
    case DesignTag::UniformSymmetric:
      return "unif";
    case DesignTag::Rademacher:
      return "rademacher";
    case DesignTag::Gaussian:
      return "gauss";
  }
  return "unknown";
}

DesignDistribution DesignDistribution::parse(const std::string& text) {
  if (text == "t2") return DesignDistribution(DesignTag::StudentT2);
  if (text == "t3") return DesignDistribution(DesignTag::StudentT3);
  if (text == "t5") return DesignDistribution(DesignTag::StudentT5);
  if (text == "exp" || text == "exponential") return DesignDistribution(DesignTag::ExponentialCentered);
  if (text == "unif" || text == "uniform") return DesignDistribution(DesignTag::UniformSymmetric);
  if (text == "rademacher" || text == "bernoulli") return DesignDistribution(DesignTag::Rademacher);
  if (text == "gauss" || text == "gaussian") return DesignDistribution(DesignTag::Gaussian);
  throw std::invalid_argument("unknown design distribution: " + text);
}

const std::vector<DesignDistribution>& DesignDistribution::table_panels() {
  static const std::vector<DesignDistribution> panels = {
      DesignDistribution(DesignTag::StudentT5),  DesignDistribution(DesignTag::ExponentialCentered),
      DesignDistribution(DesignTag::StudentT3),  DesignDistribution(DesignTag::UniformSymmetric),
      DesignDistribution(DesignTag::StudentT2),  DesignDistribution(DesignTag::Gaussian)};
  return panels;
}

const std::vector<DesignDistribution>& DesignDistribution::all() {
  static const std::vector<DesignDistribution> designs = {
      DesignDistribution(DesignTag::StudentT5),  DesignDistribution(DesignTag::ExponentialCentered),
      DesignDistribution(DesignTag::StudentT3),  DesignDistribution(DesignTag::UniformSymmetric),
      DesignDistribution(DesignTag::StudentT2),  DesignDistribution(DesignTag::Rademacher),
      DesignDistribution(DesignTag::Gaussian)};
  return designs;
}

MomentReport moment_check(const DesignDistribution& design, int k) {
  if (k < 1) throw std::domain_error("moment_check: k must be >= 1");
  MomentReport report;
  report.has_density = design.has_density();
  if (report.has_density) {
    report.density_bound = design.density_bound();
  }
  double max_moment = 0.0;
  for (int order = 1; order <= k; ++order) {
    const double moment = design.abs_moment(order);
    if (std::isinf(moment)) {
      report.infinite_orders.push_back(order);
    } else {
      max_moment = std::max(max_moment, moment);
    }
  }
  report.max_abs_moment = report.infinite_orders.empty() ? max_moment : kInf;
  return report;
}

// ---------------------------------------------------------------------------
// CovarianceSpec / RealizedCovariance
// ---------------------------------------------------------------------------

CovarianceSpec CovarianceSpec::spiked(double value, int count) {
  CovarianceSpec spec;
  spec.kind = Kind::Spiked;
  spec.spike_value = value;
  spec.spike_count = count;
  return spec;
}

CovarianceSpec CovarianceSpec::ar1(double rho) {
  CovarianceSpec spec;
  spec.kind = Kind::AR1;
  spec.rho = rho;
  return spec;
}

CovarianceSpec CovarianceSpec::explicit_matrix(Eigen::MatrixXd sigma) {
  CovarianceSpec spec;
  spec.kind = Kind::Explicit;
  spec.matrix = std::move(sigma);
  return spec;
}

CovarianceSpec CovarianceSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "spiked") {
    if (args.empty()) return spiked(400.0, 2);
    std::istringstream in(args);
    double value = 0.0;
    int count = 2;
    char comma = ',';
    if (!(in >> value)) {
      throw std::invalid_argument("covariance: expected spiked:VALUE[,COUNT]");
    }
    if ((in >> comma) && !(comma == ',' && (in >> count))) {
      throw std::invalid_argument("covariance: expected spiked:VALUE[,COUNT]");
    }
    if (!(value > 0.0) || count < 1) {
      throw std::invalid_argument("covariance: spike value must be > 0 and count >= 1");
    }
    return spiked(value, count);
  }
  if (head == "ar1") {
    if (args.empty()) throw std::invalid_argument("covariance: expected ar1:RHO");
    const double rho = std::stod(args);
    if (!(rho > -1.0 && rho < 1.0)) {
      throw std::invalid_argument("covariance: AR(1) rho must lie in (-1, 1)");
    }
    return ar1(rho);
  }
  throw std::invalid_argument("unknown covariance spec: " + text);
}

std::string CovarianceSpec::label() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Spiked:
      out << "spiked:" << spike_value << "," << spike_count;
      break;
    case Kind::AR1:
      out << "ar1:" << rho;
      break;
    case Kind::Explicit:
      out << "explicit:" << matrix.rows() << "x" << matrix.cols();
      break;
  }
  return out.str();
}

RealizedCovariance RealizedCovariance::spiked(double spike_value, Eigen::MatrixXd u) {
  RealizedCovariance cov;
  cov.d_ = static_cast<int>(u.rows());
  cov.low_rank_ = true;
  cov.spike_ = spike_value;
  cov.u_ = std::move(u);
  return cov;
}

RealizedCovariance RealizedCovariance::from_dense(Eigen::MatrixXd sigma) {
  RealizedCovariance cov;
  cov.d_ = static_cast<int>(sigma.rows());
  cov.low_rank_ = false;
  cov.dense_sqrt_ = sym_sqrt(sigma);  // validates symmetry and definiteness
  cov.dense_ = std::move(sigma);
  return cov;
}

Eigen::VectorXd RealizedCovariance::apply(const Eigen::VectorXd& v) const {
  if (low_rank_) {
    return v + (spike_ - 1.0) * (u_ * (u_.transpose() * v));
  }
  return dense_ * v;
}

Eigen::MatrixXd RealizedCovariance::apply(const Eigen::MatrixXd& m) const {
  if (low_rank_) {
    return m + (spike_ - 1.0) * (u_ * (u_.transpose() * m));
  }
  return dense_ * m;
}

Eigen::VectorXd RealizedCovariance::apply_sqrt(const Eigen::VectorXd& v) const {
  if (low_rank_) {
    return v + (std::sqrt(spike_) - 1.0) * (u_ * (u_.transpose() * v));
  }
  return dense_sqrt_ * v;
}

Eigen::MatrixXd RealizedCovariance::apply_sqrt(const Eigen::MatrixXd& m) const {
  if (low_rank_) {
    return m + (std::sqrt(spike_) - 1.0) * (u_ * (u_.transpose() * m));
  }
  return dense_sqrt_ * m;
}

double RealizedCovariance::quadratic(const Eigen::VectorXd& v) const { return v.dot(apply(v)); }

Eigen::MatrixXd RealizedCovariance::dense() const {
  if (low_rank_) {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d_, d_);
    sigma += (spike_ - 1.0) * (u_ * u_.transpose());
    return sigma;
  }
  return dense_;
}

Eigen::MatrixXd RealizedCovariance::dense_sqrt() const {
  if (low_rank_) {
    Eigen::MatrixXd root = Eigen::MatrixXd::Identity(d_, d_);
    root += (std::sqrt(spike_) - 1.0) * (u_ * u_.transpose());
    return root;
  }
  return dense_sqrt_;
}

namespace {

// Gaussian fill in column-major order; shared by the Haar samplers so both
// consume the stream identically.
Eigen::MatrixXd gaussian_matrix(int rows, int cols, RandomStream& rng) {
  Eigen::MatrixXd g(rows, cols);
  double* data = g.data();
  const Eigen::Index total = g.size();
  for (Eigen::Index i = 0; i < total; ++i) data[i] = rng.gaussian();
  return g;
}

// Haar frame on the Stiefel manifold: thin QR with the sign fix.
Eigen::MatrixXd haar_stiefel(int d, int k, RandomStream& rng) {
  const Eigen::MatrixXd g = gaussian_matrix(d, k, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  for (int j = 0; j < k; ++j) {
    q.col(j) *= sign_of(qr.matrixQR()(j, j));
  }
  return q;
}

}  // namespace

RealizedCovariance build_covariance(const CovarianceSpec& spec, int d, RandomStream& rng) {
  if (d < 1) throw std::invalid_argument("build_covariance: d must be >= 1");
  switch (spec.kind) {
    case CovarianceSpec::Kind::Spiked: {
      if (spec.spike_count > d) {
        throw std::invalid_argument("build_covariance: spike count exceeds dimension");
      }
      if (!(spec.spike_value > 0.0)) {
        throw std::invalid_argument("build_covariance: spike value must be positive");
      }
      return RealizedCovariance::spiked(spec.spike_value, haar_stiefel(d, spec.spike_count, rng));
    }
    case CovarianceSpec::Kind::AR1: {
      if (!(spec.rho > -1.0 && spec.rho < 1.0)) {
        throw std::invalid_argument("build_covariance: AR(1) rho must lie in (-1, 1)");
      }
      Eigen::MatrixXd sigma(d, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          sigma(i, j) = std::pow(spec.rho, std::abs(i - j));
        }
      }
      return RealizedCovariance::from_dense(std::move(sigma));
    }
    case CovarianceSpec::Kind::Explicit: {
      if (spec.matrix.rows() != d || spec.matrix.cols() != d) {
        throw std::invalid_argument("build_covariance: explicit matrix has wrong dimension");
      }
      return RealizedCovariance::from_dense(spec.matrix);
    }
  }
  throw std::logic_error("build_covariance: unreachable");
}

// ---------------------------------------------------------------------------
// Haar sampling and the selection matrix
// ---------------------------------------------------------------------------

Eigen::MatrixXd haar_orthogonal(int d, RandomStream& rng) {
  if (d < 1) throw std::invalid_argument("haar_orthogonal: d must be >= 1");
  return haar_stiefel(d, d, rng);
}

Eigen::MatrixXd haar_transposed_product(int d, const Eigen::MatrixXd& b, RandomStream& rng) {
  if (b.rows() != d) throw std::invalid_argument("haar_transposed_product: row mismatch");
  const Eigen::MatrixXd g = gaussian_matrix(d, d, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd out = qr.householderQ().transpose() * b;
  for (int j = 0; j < d; ++j) {
    out.row(j) *= sign_of(qr.matrixQR()(j, j));
  }
  return out;
}

Eigen::MatrixXd selection_matrix(int d, int p) {
  if (p >= d || p < 1) throw std::invalid_argument("selection_matrix: need 1 <= p < d");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, p);
  for (int j = 0; j < p; ++j) m(j, j) = 1.0;
  return m;
}

Eigen::MatrixXd rotated_submodel_frame(const RealizedCovariance& cov, const Eigen::MatrixXd& m,
                                       RandomStream& rng) {
  const Eigen::MatrixXd sqrt_m = cov.apply_sqrt(m);
  const Eigen::MatrixXd gram = m.transpose() * cov.apply(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success || solver.eigenvalues().minCoeff() <= 0.0) {
    throw std::domain_error("rotated_submodel_frame: M' Sigma M is not positive definite");
  }
  const Eigen::MatrixXd normalized =
      sqrt_m * (solver.eigenvectors() * solver.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                solver.eigenvectors().transpose());
  return haar_transposed_product(cov.dim(), normalized, rng);
}

// ---------------------------------------------------------------------------
// ModelSpec and surrogates
// ---------------------------------------------------------------------------

void ModelSpec::validate() const {
  if (d < 2 || p < 1 || p >= d) throw std::invalid_argument("ModelSpec: need 1 <= p < d");
  if (n <= p + 1) throw std::invalid_argument("ModelSpec: need n > p + 1");
  if (theta.size() != d) throw std::invalid_argument("ModelSpec: theta has wrong dimension");
  if (!covariance || covariance->dim() != d) {
    throw std::invalid_argument("ModelSpec: covariance missing or of wrong dimension");
  }
  if (mu.size() != 0 && mu.size() != d) throw std::invalid_argument("ModelSpec: mu has wrong dimension");
  if (noise_sd < 0.0) throw std::invalid_argument("ModelSpec: noise_sd must be >= 0");
  if (submodel.rows() != d || submodel.cols() != p) {
    throw std::invalid_argument("ModelSpec: submodel must be d x p");
  }
  if (rotation.size() != 0) {
    if (rotation.rows() != d || rotation.cols() != d) {
      throw std::invalid_argument("ModelSpec: rotation must be d x d");
    }
    const double err =
        (rotation.transpose() * rotation - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (err > 1e-10) throw std::invalid_argument("ModelSpec: rotation is not orthogonal");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(submodel);
  if (qr.rank() < p) throw std::invalid_argument("ModelSpec: submodel is rank deficient");
}

Eigen::VectorXd null_theta(const RealizedCovariance& cov, const Eigen::MatrixXd& m,
                           RandomStream& rng) {
  const int d = cov.dim();
  const int p = static_cast<int>(m.cols());
  if (m.rows() != d) throw std::invalid_argument("null_theta: M has wrong dimension");
  const Eigen::MatrixXd sigma_m = cov.apply(m);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sigma_m);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, p);
  const auto diag = qr.matrixQR().diagonal().head(p);
  if (diag.cwiseAbs().minCoeff() <= 1e-12 * diag.cwiseAbs().maxCoeff()) {
    throw std::domain_error("null_theta: Sigma M is rank deficient");
  }
  for (int attempt = 0; attempt < 5; ++attempt) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.gaussian();
    Eigen::VectorXd w = v - q * (q.transpose() * v);
    const double norm = w.norm();
    if (norm >= 1e-12) return w / norm;
  }
  throw std::runtime_error("null_theta: projection vanished repeatedly");
}

SurrogateParams surrogate_params(const ModelSpec& spec) {
  spec.validate();
  const RealizedCovariance& cov = *spec.covariance;
  const Eigen::MatrixXd& m = spec.submodel;
  const Eigen::MatrixXd sigma_m = cov.apply(m);
  const Eigen::MatrixXd gram = m.transpose() * sigma_m;  // M' Sigma M
  const Eigen::VectorXd m_sigma_theta = sigma_m.transpose() * spec.theta;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("surrogate_params: M' Sigma M is not positive definite");
  }

  SurrogateParams out;
  out.slope = llt.solve(m_sigma_theta);
  out.intercept = spec.intercept_true;
  if (spec.mu.size() != 0) {
    out.intercept += spec.mu.dot(spec.theta) - (m.transpose() * spec.mu).dot(out.slope);
  }

  // Var(e) = Var(y) - Var(beta'x); the middle term of the closed form enters
  // with a minus sign. Scaled by the component variance of the design law so
  // the parameters describe the sampling law as simulated.
  const double sigma2 = spec.noise_sd * spec.noise_sd;
  const double base = std::max(0.0, cov.quadratic(spec.theta) - m_sigma_theta.dot(out.slope));
  const double signal_base = out.slope.dot(gram * out.slope);
  const double var = spec.design.variance();

  if (std::isinf(var)) {
    // Infinite-variance design: surrogates are only meaningful under the
    // null, where the slope vanishes.
    if (signal_base > 1e-16 * std::max(base, signal_base)) {
      throw std::domain_error(
          "surrogate_params: signal-to-noise undefined for an infinite-variance design");
    }
    out.slope.setZero();
    out.error_var = base > 0.0 ? kInf : sigma2;
    out.snr = 0.0;
    return out;
  }

  out.error_var = var * base + sigma2;
  const double signal = var * signal_base;
  if (signal <= 0.0) {
    out.snr = 0.0;
  } else if (out.error_var <= 0.0) {
    out.snr = kInf;
  } else {
    out.snr = signal / out.error_var;
  }
  return out;
}

Eigen::VectorXd calibrate_theta(const RealizedCovariance& cov, const Eigen::MatrixXd& m,
                                const Eigen::VectorXd& theta_perp, const Eigen::VectorXd& v,
                                double sigma2, double snr_target, double design_var) {
  if (snr_target < 0.0) throw std::domain_error("calibrate_theta: snr_target must be >= 0");
  if (!(design_var > 0.0) || std::isinf(design_var)) {
    throw std::domain_error("calibrate_theta: design variance must be positive and finite");
  }
  if (v.size() != m.cols() || v.isZero(0.0)) {
    throw std::domain_error("calibrate_theta: direction v must be a nonzero p-vector");
  }
  if (snr_target == 0.0) return theta_perp;
  const Eigen::VectorXd mv = m * v;
  const double quad = mv.dot(cov.apply(mv));  // v' M' Sigma M v
  if (quad <= 0.0) {
    throw std::domain_error("calibrate_theta: v' M' Sigma M v is not positive");
  }
  const double s2 = design_var * cov.quadratic(theta_perp) + sigma2;
  if (s2 <= 0.0) {
    throw std::domain_error("calibrate_theta: residual variance is zero, target unreachable");
  }
  const double c = std::sqrt(snr_target * s2 / (design_var * quad));
  return c * mv + theta_perp;
}

// ---------------------------------------------------------------------------
// SamplerPlan
// ---------------------------------------------------------------------------

SamplerPlan SamplerPlan::from_spec(const ModelSpec& spec) {
  spec.validate();
  const RealizedCovariance& cov = *spec.covariance;
  Eigen::MatrixXd frame(spec.d, spec.p + 1);
  frame.leftCols(spec.p) = cov.apply_sqrt(spec.submodel);
  frame.col(spec.p) = cov.apply_sqrt(spec.theta);
  if (spec.rotation.size() != 0) {
    frame = spec.rotation.transpose() * frame;
  }
  Eigen::VectorXd offset_x = Eigen::VectorXd::Zero(spec.p);
  double offset_y = spec.intercept_true;
  if (spec.mu.size() != 0) {
    offset_x = spec.submodel.transpose() * spec.mu;
    offset_y += spec.mu.dot(spec.theta);
  }
  return from_rotated_frame(frame, offset_x, offset_y, spec.design, spec.n, spec.noise_sd);
}

SamplerPlan SamplerPlan::from_rotated_frame(const Eigen::MatrixXd& g, const Eigen::VectorXd& offset_x,
                                            double offset_y, DesignDistribution design, int n,
                                            double noise_sd) {
  SamplerPlan plan;
  plan.frame_ = g;
  plan.coeff_ = g.transpose();
  plan.offset_x_ = offset_x;
  plan.offset_y_ = offset_y;
  plan.design_ = design;
  plan.noise_sd_ = noise_sd;
  plan.n_ = n;
  plan.d_ = static_cast<int>(g.rows());
  plan.p_ = static_cast<int>(g.cols()) - 1;
  return plan;
}

void SamplerPlan::sample(RandomStream& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y) const {
  x.resize(n_, p_);
  y.resize(n_);
  Eigen::VectorXd z(d_);
  Eigen::VectorXd row(p_ + 1);
  for (int i = 0; i < n_; ++i) {
    design_.fill(rng, z);
    row.noalias() = coeff_ * z;
    x.row(i) = row.head(p_).transpose() + offset_x_.transpose();
    y[i] = row[p_] + offset_y_;
    if (noise_sd_ > 0.0) y[i] += noise_sd_ * rng.gaussian();
  }
}

Dataset SamplerPlan::sample(RandomStream& rng) const {
  Dataset data;
  sample(rng, data.X, data.Y);
  return data;
}

void SamplerPlan::sample_with_design(RandomStream& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y,
                                     Eigen::MatrixXd& z_tilde) const {
  x.resize(n_, p_);
  y.resize(n_);
  z_tilde.resize(n_, d_);
  Eigen::VectorXd z(d_);
  Eigen::VectorXd row(p_ + 1);
  for (int i = 0; i < n_; ++i) {
    design_.fill(rng, z);
    z_tilde.row(i) = z.transpose();
    row.noalias() = coeff_ * z;
    x.row(i) = row.head(p_).transpose() + offset_x_.transpose();
    y[i] = row[p_] + offset_y_;
    if (noise_sd_ > 0.0) y[i] += noise_sd_ * rng.gaussian();
  }
}

Dataset sample_dataset(const ModelSpec& spec, RandomStream& rng) {
  return SamplerPlan::from_spec(spec).sample(rng);
}

}  // namespace fsim
