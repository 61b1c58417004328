#include "flowcast/dist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowcast/common.hpp"

namespace flowcast::stats {

namespace {

constexpr double kTol = 1e-12;
constexpr int kMaxIter = 500;
constexpr double kTiny = 1e-300;

// P(a, x) by its power series, valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kTol)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NumericError("incomplete gamma series did not converge");
}

// Q(a, x) by modified Lentz continued fraction, valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kTol)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NumericError("incomplete gamma continued fraction did not converge");
}

double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kTol) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double lower_reg_gamma(double a, double x) {
  if (a <= 0.0) throw ParamError("incomplete gamma needs a > 0");
  if (x < 0.0) throw ParamError("incomplete gamma needs x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double upper_reg_gamma(double a, double x) {
  if (a <= 0.0) throw ParamError("incomplete gamma needs a > 0");
  if (x < 0.0) throw ParamError("incomplete gamma needs x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double reg_inc_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw ParamError("incomplete beta needs a, b > 0");
  if (x < 0.0 || x > 1.0) throw ParamError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                                std::lgamma(b) + a * std::log(x) +
                                b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double chi2_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return lower_reg_gamma(df / 2.0, x / 2.0);
}

double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return upper_reg_gamma(df / 2.0, x / 2.0);
}

double f_sf(double x, double d1, double d2) {
  if (x <= 0.0) return 1.0;
  return reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_asymptotic_sf(double x, int terms) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= terms; ++j) {
    double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 == 1) ? term : -term;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double lilliefors_pvalue(double d, int n) {
  if (n < 4) throw ParamError("lilliefors needs n >= 4");
  // Stephens-modified statistic; quantile anchors for the composite-normal
  // case, log-linearly interpolated, with slope extrapolation in the tails.
  const double kk = d * (std::sqrt(static_cast<double>(n)) - 0.01 +
                         0.85 / std::sqrt(static_cast<double>(n)));
  static constexpr double stat[] = {0.775, 0.819, 0.895, 0.955, 1.035};
  static constexpr double prob[] = {0.15, 0.10, 0.05, 0.025, 0.01};
  constexpr int m = 5;
  double logp;
  if (kk <= stat[0]) {
    double slope = (std::log(prob[1]) - std::log(prob[0])) / (stat[1] - stat[0]);
    logp = std::log(prob[0]) + slope * (kk - stat[0]);
  } else if (kk >= stat[m - 1]) {
    double slope =
        (std::log(prob[m - 1]) - std::log(prob[m - 2])) / (stat[m - 1] - stat[m - 2]);
    logp = std::log(prob[m - 1]) + slope * (kk - stat[m - 1]);
  } else {
    int i = 0;
    while (kk > stat[i + 1]) ++i;
    double w = (kk - stat[i]) / (stat[i + 1] - stat[i]);
    logp = (1.0 - w) * std::log(prob[i]) + w * std::log(prob[i + 1]);
  }
  return std::clamp(std::exp(logp), 0.0, 1.0);
}

double mackinnon_pvalue(double tau, bool with_trend) {
  // MacKinnon (1994, 2010) response-surface constants, single series.
  // p = Phi(c0 + c1*tau + c2*tau^2 [+ c3*tau^3]), small-p branch below the
  // switch point, large-p branch above; saturates outside [tau_min, tau_max].
  struct Surface {
    double tau_star, tau_min, tau_max;
    double small_p[3];
    double large_p[4];
  };
  static constexpr Surface kConstant = {
      -1.61, -18.83, 2.74,
      {2.1659, 1.4412, 0.038269},
      {1.7339, 0.93202, -0.12745, -0.010368}};
  static constexpr Surface kTrend = {
      -2.89, -16.18, 0.7,
      {3.2512, 1.6047, 0.049588},
      {2.5261, 0.61654, -0.37956, -0.060285}};
  const Surface& s = with_trend ? kTrend : kConstant;
  if (tau > s.tau_max) return 1.0;
  if (tau < s.tau_min) return 0.0;
  double v;
  if (tau <= s.tau_star) {
    v = s.small_p[0] + tau * (s.small_p[1] + tau * s.small_p[2]);
  } else {
    v = s.large_p[0] +
        tau * (s.large_p[1] + tau * (s.large_p[2] + tau * s.large_p[3]));
  }
  return normal_cdf(v);
}

}  // namespace flowcast::stats
