#pragma once

namespace flowcast::stats {

// Regularized incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x),
// series + continued-fraction evaluation to 1e-12.
double lower_reg_gamma(double a, double x);
double upper_reg_gamma(double a, double x);

// Regularized incomplete beta I_x(a, b), Lentz continued fraction to 1e-12.
double reg_inc_beta(double a, double b, double x);

double chi2_cdf(double x, double df);
double chi2_sf(double x, double df);   // upper tail
double f_sf(double x, double d1, double d2);
double normal_cdf(double x);

/// Kolmogorov asymptotic survival Q(x) = 2 sum (-1)^{j-1} exp(-2 j^2 x^2).
double ks_asymptotic_sf(double x, int terms = 20);

/// p-value of the normality KS statistic with estimated mean/sd
/// (Lilliefors calibration via the Stephens-modified statistic).
double lilliefors_pvalue(double d, int n);

/// MacKinnon (1994/2010) response-surface p-value for the ADF t-statistic,
/// single-series case, spec with constant or constant+trend.
double mackinnon_pvalue(double tau, bool with_trend);

}  // namespace flowcast::stats
