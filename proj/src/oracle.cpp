#include "fsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "fsim/linmodel.hpp"
#include "fsim/specfun.hpp"

namespace fsim {

namespace {

Eigen::MatrixXd inv_sqrt_spd(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success || solver.eigenvalues().minCoeff() <= 0.0) {
    throw std::domain_error("inv_sqrt_spd: matrix is not positive definite");
  }
  return solver.eigenvectors() * solver.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         solver.eigenvectors().transpose();
}

void check_frame(const EnumeratedDesign& design, const Eigen::MatrixXd& b) {
  design.validate();
  if (b.rows() != design.d || b.cols() < 1 || b.cols() > design.d) {
    throw std::invalid_argument("oracle: frame must be d x p with 1 <= p <= d");
  }
  const Eigen::MatrixXd gram = b.transpose() * b;
  const double err =
      (gram - Eigen::MatrixXd::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff();
  if (err > 1e-10) {
    throw std::invalid_argument("oracle: frame columns must be orthonormal");
  }
}

// Recursive tolerance clustering of the projected atoms, one key component
// at a time. Exact ties of a fiber land within ~d*eps of each other, far
// below the tolerance, while analytically distinct values of a rational
// frame sit far above it; values in between raise the collision flag.
struct FiberClusterer {
  const Eigen::MatrixXd& keys;  // p x atom_count
  double tolerance;
  double collision_floor;
  bool collision = false;
  std::function<void(const std::uint32_t*, std::size_t, std::uint32_t)> emit;

  void cluster(std::uint32_t* order, std::size_t count, int component) {
    const int p = static_cast<int>(keys.rows());
    if (component == p) {
      emit(order, count, order[0]);
      return;
    }
    std::sort(order, order + count, [&](std::uint32_t a, std::uint32_t b) {
      return keys(component, a) < keys(component, b);
    });
    std::size_t start = 0;
    while (start < count) {
      const double rep = keys(component, order[start]);
      std::size_t end = start + 1;
      while (end < count) {
        const double diff = keys(component, order[end]) - rep;
        if (diff > tolerance) break;
        if (diff > collision_floor) collision = true;
        ++end;
      }
      cluster(order + start, end - start, component + 1);
      start = end;
    }
  }
};

void walk_fibers(const EnumeratedDesign& design, const Eigen::MatrixXd& b, bool& collision,
                 const std::function<void(const std::uint32_t*, std::size_t, std::uint32_t)>& fn) {
  check_frame(design, b);
  const std::uint32_t count = design.atom_count();
  const int p = static_cast<int>(b.cols());

  Eigen::MatrixXd keys(p, count);
  Eigen::VectorXd z(design.d);
  for (std::uint32_t a = 0; a < count; ++a) {
    for (int k = 0; k < design.d; ++k) {
      z[k] = (a >> k) & 1u ? 1.0 : -1.0;
    }
    keys.col(a).noalias() = b.transpose() * z;
  }

  std::vector<std::uint32_t> order(count);
  std::iota(order.begin(), order.end(), 0u);

  const double scale = keys.cwiseAbs().maxCoeff();
  FiberClusterer clusterer{keys, design.tolerance, 1e-12 * std::max(1.0, scale), false, fn};
  clusterer.cluster(order.data(), count, 0);
  collision = clusterer.collision;
}

// Spectral norm of z z' - w w' + B B' - I for a singleton fiber, using the
// invariant subspace span{B, z}: the restriction is an arrowhead matrix and
// the orthogonal complement carries eigenvalue -1.
double singleton_second_norm(const Eigen::VectorXd& z, const Eigen::VectorXd& key,
                             const Eigen::MatrixXd& b) {
  const int d = static_cast<int>(z.size());
  const int p = static_cast<int>(b.cols());
  const Eigen::VectorXd w = b * key;
  const double nq = (z - w).norm();
  const double diag = nq * nq - 1.0;
  const double off = nq * key.norm();
  const double disc = std::sqrt(diag * diag + 4.0 * off * off);
  double norm = std::max(std::fabs(0.5 * (diag + disc)), std::fabs(0.5 * (diag - disc)));
  if (d > p + 1) norm = std::max(norm, 1.0);
  return norm;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const std::size_t idx = std::min(
      sorted.size() - 1, static_cast<std::size_t>(q * static_cast<double>(sorted.size())));
  return sorted[idx];
}

// Scalar conditional moments of u'z on the fibers of B'z, plus the
// atom-to-fiber map needed to standardize observed errors.
struct ScalarFiberTable {
  std::vector<std::int32_t> fiber_of_atom;
  std::vector<double> mean;    // E[u'z | fiber]
  std::vector<double> m2;      // E[(u'z)^2 | fiber]
  std::vector<double> weight;
  bool collision = false;

  static ScalarFiberTable build(const EnumeratedDesign& design, const Eigen::MatrixXd& b,
                                const Eigen::VectorXd& u) {
    ScalarFiberTable table;
    table.fiber_of_atom.assign(design.atom_count(), -1);
    const int d = design.d;
    std::vector<double> proj(design.atom_count());
    for (std::uint32_t a = 0; a < design.atom_count(); ++a) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) {
        acc += ((a >> k) & 1u) ? u[k] : -u[k];
      }
      proj[a] = acc;
    }
    walk_fibers(design, b, table.collision,
                [&](const std::uint32_t* atoms, std::size_t count, std::uint32_t) {
                  const std::int32_t id = static_cast<std::int32_t>(table.mean.size());
                  double s1 = 0.0, s2 = 0.0;
                  for (std::size_t i = 0; i < count; ++i) {
                    table.fiber_of_atom[atoms[i]] = id;
                    s1 += proj[atoms[i]];
                    s2 += proj[atoms[i]] * proj[atoms[i]];
                  }
                  table.mean.push_back(s1 / static_cast<double>(count));
                  table.m2.push_back(s2 / static_cast<double>(count));
                  table.weight.push_back(static_cast<double>(count) /
                                         static_cast<double>(design.atom_count()));
                });
    return table;
  }
};

// The standardized-design view of a model: orthonormalized rotated submodel
// frame B and the residual direction u with e = u'z + eps.
struct WorkingFrame {
  Eigen::MatrixXd b;  // d x p, orthonormal columns
  Eigen::VectorXd u;  // (I - B B') R' Sigma^{1/2} theta
};

WorkingFrame working_frame(const ModelSpec& spec) {
  const RealizedCovariance& cov = *spec.covariance;
  Eigen::MatrixXd m_tilde = cov.apply_sqrt(spec.submodel);
  Eigen::VectorXd theta_tilde = cov.apply_sqrt(spec.theta);
  if (spec.rotation.size() != 0) {
    m_tilde = spec.rotation.transpose() * m_tilde;
    theta_tilde = spec.rotation.transpose() * theta_tilde;
  }
  WorkingFrame frame;
  frame.b = m_tilde * inv_sqrt_spd(m_tilde.transpose() * m_tilde);
  frame.u = theta_tilde - frame.b * (frame.b.transpose() * theta_tilde);
  return frame;
}

std::uint32_t atom_of_row(const Eigen::MatrixXd& z_tilde, int row) {
  std::uint32_t atom = 0;
  for (int k = 0; k < z_tilde.cols(); ++k) {
    const double v = z_tilde(row, k);
    if (std::fabs(std::fabs(v) - 1.0) > 1e-9) {
      throw std::invalid_argument("oracle: retained design draws are not Rademacher");
    }
    if (v > 0.0) atom |= (1u << k);
  }
  return atom;
}

}  // namespace

void EnumeratedDesign::validate() const {
  if (d < 1 || d > 20) {
    throw std::invalid_argument("EnumeratedDesign: d must lie in [1, 20]");
  }
  if (!(tolerance > 0.0)) {
    throw std::invalid_argument("EnumeratedDesign: tolerance must be positive");
  }
}

Eigen::VectorXd EnumeratedDesign::atom(std::uint32_t index) const {
  Eigen::VectorXd z(d);
  for (int k = 0; k < d; ++k) {
    z[k] = (index >> k) & 1u ? 1.0 : -1.0;
  }
  return z;
}

ConditionalMomentReport conditional_moments(const EnumeratedDesign& design, const Eigen::MatrixXd& b,
                                            std::size_t fiber_detail_limit) {
  ConditionalMomentReport report;
  const int d = design.d;
  const double atom_count = static_cast<double>(design.atom_count());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd bbt = b * b.transpose();
  bool keep_detail = true;

  Eigen::VectorXd z(d);
  Eigen::VectorXd sum(d);
  Eigen::MatrixXd second(d, d);

  walk_fibers(design, b, report.collision_warning,
              [&](const std::uint32_t* atoms, std::size_t count, std::uint32_t rep_atom) {
                ++report.fiber_count;
                const Eigen::VectorXd rep_z = design.atom(rep_atom);
                const Eigen::VectorXd key = b.transpose() * rep_z;

                double second_norm = 0.0;
                if (count == 1) {
                  sum = rep_z;
                  second_norm = singleton_second_norm(rep_z, key, b);
                  if (keep_detail) second.noalias() = rep_z * rep_z.transpose();
                } else {
                  sum.setZero();
                  second.setZero();
                  for (std::size_t i = 0; i < count; ++i) {
                    z = design.atom(atoms[i]);
                    sum += z;
                    second.selfadjointView<Eigen::Lower>().rankUpdate(z);
                  }
                  second = Eigen::MatrixXd(second.selfadjointView<Eigen::Lower>());
                  second /= static_cast<double>(count);
                  const Eigen::VectorXd w = b * key;
                  const Eigen::MatrixXd dev = second - (identity - bbt + w * w.transpose());
                  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dev,
                                                                        Eigen::EigenvaluesOnly);
                  second_norm = solver.eigenvalues().cwiseAbs().maxCoeff();
                }

                const Eigen::VectorXd mean = sum / static_cast<double>(count);
                const double mean_dev = (mean - b * key).norm();
                report.max_mean_deviation = std::max(report.max_mean_deviation, mean_dev);
                report.max_second_deviation = std::max(report.max_second_deviation, second_norm);

                if (keep_detail) {
                  if (report.fiber_count > fiber_detail_limit) {
                    keep_detail = false;
                    report.fibers.clear();
                    report.fibers.shrink_to_fit();
                  } else {
                    FiberMoments fiber;
                    fiber.projected = key;
                    fiber.weight = static_cast<double>(count) / atom_count;
                    fiber.mean = mean;
                    fiber.second = second;
                    report.fibers.push_back(std::move(fiber));
                  }
                }
              });
  return report;
}

std::vector<DeviationAtom> mean_deviation_profile(const EnumeratedDesign& design,
                                                  const Eigen::MatrixXd& b) {
  std::vector<DeviationAtom> profile;
  const double atom_count = static_cast<double>(design.atom_count());
  bool collision = false;
  Eigen::VectorXd sum(design.d);
  walk_fibers(design, b, collision,
              [&](const std::uint32_t* atoms, std::size_t count, std::uint32_t rep_atom) {
                const Eigen::VectorXd rep_z = design.atom(rep_atom);
                const Eigen::VectorXd key = b.transpose() * rep_z;
                if (count == 1) {
                  sum = rep_z;
                } else {
                  sum.setZero();
                  for (std::size_t i = 0; i < count; ++i) sum += design.atom(atoms[i]);
                }
                const double dev = (sum / static_cast<double>(count) - b * key).norm();
                profile.push_back({dev, static_cast<double>(count) / atom_count});
              });
  return profile;
}

std::vector<TailProbeRow> tail_probe(int p, const std::vector<int>& d_grid,
                                     const std::vector<double>& t_grid, int frame_count,
                                     const CovarianceSpec& covariance, FrameRecipe recipe,
                                     std::uint64_t seed) {
  if (frame_count < 1) throw std::invalid_argument("tail_probe: frame_count must be >= 1");
  std::vector<TailProbeRow> rows;
  for (int d : d_grid) {
    if (p >= d) throw std::invalid_argument("tail_probe: need p < d");
    EnumeratedDesign design{d};
    const Eigen::MatrixXd m = selection_matrix(d, p);
    for (int frame = 0; frame < frame_count; ++frame) {
      Eigen::MatrixXd b;
      if (recipe == FrameRecipe::AxisAligned) {
        b = m;
      } else {
        RandomStream cov_rng = RandomStream::derive(
            seed, {stream_token::tail_frame, static_cast<std::uint64_t>(d),
                   static_cast<std::uint64_t>(frame), 0});
        const RealizedCovariance cov = build_covariance(covariance, d, cov_rng);
        RandomStream rot_rng = RandomStream::derive(
            seed, {stream_token::tail_frame, static_cast<std::uint64_t>(d),
                   static_cast<std::uint64_t>(frame), 1});
        b = rotated_submodel_frame(cov, m, rot_rng);
      }
      const auto profile = mean_deviation_profile(design, b);
      for (double t : t_grid) {
        double prob = 0.0;
        for (const DeviationAtom& atom : profile) {
          if (atom.deviation > t) prob += atom.weight;
        }
        rows.push_back({d, frame, t, prob});
      }
    }
  }
  return rows;
}

SubstituteErrors substitute_errors(const ModelSpec& spec, const Dataset& data,
                                   const Eigen::MatrixXd& z_tilde) {
  spec.validate();
  const int n = static_cast<int>(data.Y.size());
  if (data.X.rows() != n || z_tilde.rows() != n || z_tilde.cols() != spec.d) {
    throw std::invalid_argument("substitute_errors: dataset and design draws do not match");
  }
  const SurrogateParams surrogate = surrogate_params(spec);
  if (!(surrogate.error_var > 0.0) || std::isinf(surrogate.error_var)) {
    throw std::domain_error("substitute_errors: residual variance must be positive and finite");
  }
  const double s2 = surrogate.error_var;
  const double s = std::sqrt(s2);
  const double sigma2 = spec.noise_sd * spec.noise_sd;

  SubstituteErrors out;
  out.e_star.resize(n);

  if (spec.design.tag() == DesignTag::Gaussian) {
    // Conditional moments are exact in closed form: E[e|x] = 0 and
    // Var[e|x] = s^2, so the substitute errors coincide with the errors.
    for (int i = 0; i < n; ++i) {
      out.e_star[i] =
          data.Y[i] - surrogate.intercept - surrogate.slope.dot(data.X.row(i));
    }
    out.population_mean = 0.0;
    out.population_var = s2;
    out.max_var_ratio_dev = 0.0;
    return out;
  }
  if (spec.design.tag() != DesignTag::Rademacher) {
    throw std::invalid_argument("substitute_errors: design must be Rademacher or Gaussian");
  }
  if (spec.d > 20) {
    throw std::invalid_argument("substitute_errors: enumeration requires d <= 20");
  }

  const WorkingFrame frame = working_frame(spec);
  EnumeratedDesign design{spec.d};
  const ScalarFiberTable table = ScalarFiberTable::build(design, frame.b, frame.u);

  const double var_floor = 1e-12 * s2;
  double pop_mean = 0.0;
  double pop_var = 0.0;
  for (std::size_t f = 0; f < table.mean.size(); ++f) {
    const double cond_var = table.m2[f] - table.mean[f] * table.mean[f] + sigma2;
    pop_mean += table.weight[f] * table.mean[f];
    if (cond_var <= var_floor) {
      out.degenerate_weight += table.weight[f];
    } else {
      pop_var += table.weight[f] * s2 * (table.m2[f] - table.mean[f] * table.mean[f] + sigma2) /
                 cond_var;
    }
  }
  out.population_mean = pop_mean;
  out.population_var = pop_var;

  for (int i = 0; i < n; ++i) {
    const std::uint32_t atom = atom_of_row(z_tilde, i);
    const std::int32_t fiber = table.fiber_of_atom[atom];
    const double cond_mean = table.mean[fiber];
    const double cond_var = table.m2[fiber] - cond_mean * cond_mean + sigma2;
    const double e = data.Y[i] - surrogate.intercept - surrogate.slope.dot(data.X.row(i));
    out.max_var_ratio_dev = std::max(out.max_var_ratio_dev, std::fabs(cond_var / s2 - 1.0));
    if (cond_var <= var_floor) {
      out.e_star[i] = 0.0;
      out.excluded.push_back(i);
    } else {
      out.e_star[i] = s * (e - cond_mean) / std::sqrt(cond_var);
    }
  }
  return out;
}

GapStudyResult fstat_gap_study(const ModelSpec& spec, const RunConfig& cfg) {
  spec.validate();
  if (spec.design.tag() != DesignTag::Gaussian && spec.design.tag() != DesignTag::Rademacher) {
    throw std::invalid_argument("fstat_gap_study: design must be Rademacher or Gaussian");
  }
  const SurrogateParams surrogate = surrogate_params(spec);
  if (!(surrogate.error_var > 0.0) || std::isinf(surrogate.error_var)) {
    throw std::domain_error("fstat_gap_study: residual variance must be positive and finite");
  }
  const double s = std::sqrt(surrogate.error_var);
  const double sigma2 = spec.noise_sd * spec.noise_sd;
  const SamplerPlan plan = SamplerPlan::from_spec(spec);

  // Conditional-moment lookup, exact per fiber; Gaussian short-circuits to
  // the closed form in which e* = e.
  ScalarFiberTable table;
  const bool enumerated = spec.design.tag() == DesignTag::Rademacher;
  if (enumerated) {
    if (spec.d > 20) {
      throw std::invalid_argument("fstat_gap_study: enumeration requires d <= 20");
    }
    const Eigen::MatrixXd& g = plan.rotated_frame();
    const Eigen::MatrixXd m_tilde = g.leftCols(spec.p);
    const Eigen::VectorXd theta_tilde = g.col(spec.p);
    Eigen::MatrixXd b = m_tilde * inv_sqrt_spd(m_tilde.transpose() * m_tilde);
    const Eigen::VectorXd u = theta_tilde - b * (b.transpose() * theta_tilde);
    table = ScalarFiberTable::build(EnumeratedDesign{spec.d}, b, u);
  }

  GapStudyResult result;
  std::vector<double> substitute_stats;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd z_tilde;
  Eigen::VectorXd y_star(spec.n);
  const double var_floor = 1e-12 * surrogate.error_var;

  for (int rep = 0; rep < cfg.reps; ++rep) {
    RandomStream rng = RandomStream::derive(
        cfg.seed, {stream_token::gap_data, static_cast<std::uint64_t>(spec.d),
                   static_cast<std::uint64_t>(spec.p), static_cast<std::uint64_t>(rep)});
    plan.sample_with_design(rng, x, y, z_tilde);

    bool degenerate = false;
    for (int i = 0; i < spec.n; ++i) {
      const double e = y[i] - surrogate.intercept - surrogate.slope.dot(x.row(i));
      double cond_mean = 0.0;
      double cond_var = surrogate.error_var;
      if (enumerated) {
        const std::int32_t fiber = table.fiber_of_atom[atom_of_row(z_tilde, i)];
        cond_mean = table.mean[fiber];
        cond_var = table.m2[fiber] - cond_mean * cond_mean + sigma2;
      }
      if (cond_var <= var_floor) {
        degenerate = true;
        break;
      }
      y_star[i] = surrogate.intercept + surrogate.slope.dot(x.row(i)) +
                  s * (e - cond_mean) / std::sqrt(cond_var);
    }
    if (degenerate) {
      ++result.excluded_replications;
      continue;
    }
    const double f_orig = f_statistic(x, y);
    const double f_star = f_statistic(x, y_star);
    result.gaps.push_back(std::fabs(f_orig - f_star));
    substitute_stats.push_back(f_star);
  }

  if (!result.gaps.empty()) {
    std::vector<double> sorted = result.gaps;
    std::sort(sorted.begin(), sorted.end());
    result.q10 = quantile_sorted(sorted, 0.10);
    result.q25 = quantile_sorted(sorted, 0.25);
    result.q50 = quantile_sorted(sorted, 0.50);
    result.q75 = quantile_sorted(sorted, 0.75);
    result.q90 = quantile_sorted(sorted, 0.90);
    // The substitute errors restore the clean conditional moments, so the
    // central F is the reference for the Y*-based statistics.
    const FParams reference{spec.p, spec.n - spec.p - 1, 0.0};
    result.ks_substitute =
        ks_sup_distance(substitute_stats, [&](double t) { return f_cdf(t, reference); });
  }
  return result;
}

RiskRatioResult risk_ratio(const ModelSpec& spec) {
  spec.validate();
  const SurrogateParams surrogate = surrogate_params(spec);
  if (!(surrogate.error_var > 0.0) || std::isinf(surrogate.error_var)) {
    throw std::domain_error("risk_ratio: residual variance must be positive and finite");
  }
  RiskRatioResult out;
  out.r_linear = surrogate.error_var;

  if (spec.design.tag() == DesignTag::Gaussian) {
    // The conditional mean is linear, so the Bayes predictor is the best
    // linear one and the risks coincide.
    out.r_bayes = out.r_linear;
    out.lin_over_bayes = 1.0;
    out.bayes_over_lin = 1.0;
    return out;
  }
  if (spec.design.tag() != DesignTag::Rademacher || spec.d > 20) {
    throw std::invalid_argument("risk_ratio: needs a Gaussian or enumerable Rademacher design");
  }

  const WorkingFrame frame = working_frame(spec);
  const ScalarFiberTable table = ScalarFiberTable::build(EnumeratedDesign{spec.d}, frame.b, frame.u);
  const double sigma2 = spec.noise_sd * spec.noise_sd;
  double expected_cond_var = 0.0;
  for (std::size_t f = 0; f < table.mean.size(); ++f) {
    expected_cond_var += table.weight[f] * (table.m2[f] - table.mean[f] * table.mean[f]);
  }
  out.r_bayes = expected_cond_var + sigma2;
  out.lin_over_bayes = out.r_linear / out.r_bayes;
  out.bayes_over_lin = out.r_bayes / out.r_linear;
  return out;
}

}  // namespace fsim
