#pragma once

#include <span>

namespace rfsei::stats {

/// Upper tail of the standard normal, Q(x) = P(Z > x).
double normal_q(double x);
double normal_cdf(double x);
/// x such that normal_q(x) == p, for p in (0, 1).
double inverse_normal_q(double p);

/// Regularized lower incomplete gamma P(a, x), series or continued fraction to 1e-12.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

double chi2_cdf(double x, double dof);
double chi2_sf(double x, double dof);

double mean(std::span<const double> v);
/// Bessel-corrected sample variance; requires at least two values.
double sample_variance(std::span<const double> v);
double pearson(std::span<const double> x, std::span<const double> y);

/// Asymptotic Kolmogorov survival function P(K > t).
double kolmogorov_sf(double t);
/// One-sample KS test of `samples` against Uniform(lo, hi); returns the p-value.
double ks_uniform_pvalue(std::span<const double> samples, double lo, double hi);

}  // namespace rfsei::stats
