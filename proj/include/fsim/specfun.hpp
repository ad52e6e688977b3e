#pragma once

namespace fsim {

/// Parameters of a (possibly noncentral) F distribution.
struct FParams {
  int df1 = 1;                 // numerator degrees of freedom
  int df2 = 1;                 // denominator degrees of freedom
  double noncentrality = 0.0;  // lambda >= 0

  void validate() const;
};

/// log Gamma(x) for x > 0.
double ln_gamma(double x);

/// Regularized incomplete beta function I_x(a, b).
double reg_inc_beta(double x, double a, double b);

/// CDF of the F distribution. For noncentrality zero this is the central F;
/// otherwise the Poisson(lambda/2) mixture over shifted beta shapes,
/// truncated once the remaining Poisson tail mass drops below 1e-12.
/// Returns 0 for t <= 0.
double f_cdf(double t, const FParams& params);

/// Quantile of the central F distribution: the t with f_cdf(t) = q, found by
/// doubling an upper bracket and bisecting. q = 0 maps to 0.
double f_quantile_central(double q, int df1, int df2);

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile for q in (0, 1).
double normal_quantile(double q);

}  // namespace fsim
