#include "flowcast/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "flowcast/dist.hpp"

namespace flowcast::diag {

namespace {

Eigen::VectorXd to_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

struct OlsFit {
  Eigen::VectorXd fitted;
  double r_squared = 0.0;  // centered
  Eigen::Index rank = 0;
};

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  OlsFit fit;
  fit.rank = qr.rank();
  Eigen::VectorXd beta = qr.solve(y);
  fit.fitted = X * beta;
  const double mean = y.mean();
  double sst = (y.array() - mean).square().sum();
  double sse = (y - fit.fitted).squaredNorm();
  fit.r_squared = sst > 0.0 ? std::max(0.0, 1.0 - sse / sst) : 0.0;
  return fit;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X, Eigen::Index rows) {
  Eigen::MatrixXd out(rows, X.cols() + 1);
  out.col(0).setOnes();
  if (X.cols() > 0) out.rightCols(X.cols()) = X;
  return out;
}

void check_rows(std::span<const double> resid, const Eigen::MatrixXd& regressors) {
  if (regressors.cols() > 0 &&
      regressors.rows() != static_cast<Eigen::Index>(resid.size()))
    throw DataError("residuals and regressors disagree on row count");
}

}  // namespace

std::vector<double> acf(std::span<const double> series, int max_lag) {
  const int T = static_cast<int>(series.size());
  if (max_lag < 0) throw ParamError("max_lag must be >= 0");
  if (T <= max_lag) throw DataError("series shorter than max_lag");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= T;
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (denom <= 0.0) throw DataError("constant series has undefined autocorrelation");
  std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1);
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (int t = k; t < T; ++t)
      s += (series[static_cast<std::size_t>(t)] - mean) *
           (series[static_cast<std::size_t>(t - k)] - mean);
    rho[static_cast<std::size_t>(k)] = s / denom;
  }
  return rho;
}

TestResult box_pierce(std::span<const double> resid, int lags,
                      PortmanteauVariant variant) {
  if (lags < 1) throw ParamError("portmanteau lags must be >= 1");
  const double T = static_cast<double>(resid.size());
  auto rho = acf(resid, lags);
  double q = 0.0;
  for (int k = 1; k <= lags; ++k) {
    double r2 = rho[static_cast<std::size_t>(k)] * rho[static_cast<std::size_t>(k)];
    if (variant == PortmanteauVariant::BoxPierce)
      q += r2;
    else
      q += r2 / (T - k);
  }
  q *= variant == PortmanteauVariant::BoxPierce ? T : T * (T + 2.0);
  TestResult r;
  r.name = variant == PortmanteauVariant::BoxPierce ? "Box-Pierce" : "Ljung-Box";
  r.statistic = q;
  r.p_value = stats::chi2_sf(q, lags);
  r.parameters = "chi2 df=" + std::to_string(lags);
  r.null_hypothesis = "no autocorrelations";
  return r;
}

TestResult breusch_godfrey(std::span<const double> resid,
                           const Eigen::MatrixXd& regressors, int order,
                           BgForm form) {
  if (order < 1) throw ParamError("Breusch-Godfrey order must be >= 1");
  check_rows(resid, regressors);
  const Eigen::Index T = static_cast<Eigen::Index>(resid.size());
  const Eigen::Index p = regressors.cols() + 1;  // with intercept
  if (T <= p + order) throw DataError("not enough rows for Breusch-Godfrey");
  Eigen::VectorXd e = to_vector(resid);
  Eigen::MatrixXd aux(T, p + order);
  aux.leftCols(p) = with_intercept(regressors, T);
  for (int j = 1; j <= order; ++j) {
    aux.col(p + j - 1).setZero();
    for (Eigen::Index t = j; t < T; ++t) aux(t, p + j - 1) = e[t - j];
  }
  OlsFit fit = ols(aux, e);
  if (fit.rank < aux.cols())
    throw DataError("rank-deficient auxiliary regression in Breusch-Godfrey");
  const double r2 = fit.r_squared;
  const double df2 = static_cast<double>(T - p - order);
  const double f_stat = (r2 / order) / ((1.0 - r2) / df2);
  const double lm_stat = static_cast<double>(T) * r2;
  TestResult r;
  r.name = "Breusch-Godfrey";
  r.null_hypothesis = "no autocorrelations";
  if (form == BgForm::FStat) {
    r.statistic = f_stat;
    r.p_value = stats::f_sf(f_stat, order, df2);
    r.parameters = "F(" + std::to_string(order) + ", " +
                   std::to_string(static_cast<long>(df2)) + "); LM=" +
                   format_double(lm_stat) + " chi2 p=" +
                   format_double(stats::chi2_sf(lm_stat, order));
  } else {
    r.statistic = lm_stat;
    r.p_value = stats::chi2_sf(lm_stat, order);
    r.parameters = "chi2 df=" + std::to_string(order) + "; F=" +
                   format_double(f_stat) + " p=" +
                   format_double(stats::f_sf(f_stat, order, df2));
  }
  return r;
}

TestResult breusch_pagan(std::span<const double> resid,
                         const Eigen::MatrixXd& regressors) {
  check_rows(resid, regressors);
  const Eigen::Index T = static_cast<Eigen::Index>(resid.size());
  const Eigen::Index k = regressors.cols();
  if (T <= k + 1) throw DataError("not enough rows for Breusch-Pagan");
  Eigen::VectorXd e2 = to_vector(resid).array().square().matrix();
  Eigen::MatrixXd aux = with_intercept(regressors, T);
  OlsFit fit = ols(aux, e2);  // rank-revealing; collinearity tolerated
  const double r2 = fit.r_squared;
  const double lm = static_cast<double>(T) * r2;
  // Gaussian-ML (original) variant: ESS / (2 sigma^4)
  const double sig2 = e2.mean();
  double ess = (fit.fitted.array() - e2.mean()).square().sum();
  const double gaussian_lm = sig2 > 0.0 ? ess / (2.0 * sig2 * sig2) : 0.0;
  TestResult r;
  r.name = "Breusch-Pagan";
  r.statistic = lm;
  r.p_value = k > 0 ? stats::chi2_sf(lm, static_cast<int>(k)) : 1.0;
  r.parameters = "Koenker T*R^2, chi2 df=" + std::to_string(k) +
                 "; gaussian LM=" + format_double(gaussian_lm);
  r.null_hypothesis = "homoscedasticity";
  return r;
}

TestResult lee_white_granger(std::span<const double> resid,
                             const Eigen::MatrixXd& regressors, int q,
                             std::uint64_t seed) {
  if (q < 1) throw ParamError("phantom-unit count must be >= 1");
  check_rows(resid, regressors);
  const Eigen::Index T = static_cast<Eigen::Index>(resid.size());
  const Eigen::Index k = regressors.cols();
  if (T <= k + q + 1) throw DataError("not enough rows for Lee-White-Granger");

  // standardized regressors with intercept
  Eigen::MatrixXd xs(T, k + 1);
  xs.col(0).setOnes();
  for (Eigen::Index j = 0; j < k; ++j) {
    double mean = regressors.col(j).mean();
    double sd = std::sqrt((regressors.col(j).array() - mean).square().sum() /
                          static_cast<double>(T));
    if (sd <= 0.0) sd = 1.0;
    xs.col(j + 1) = (regressors.col(j).array() - mean) / sd;
  }

  Rng rng(seed);
  Eigen::MatrixXd activ(T, q);
  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
    Eigen::MatrixXd gamma(xs.cols(), q);
    for (Eigen::Index i = 0; i < gamma.rows(); ++i)
      for (Eigen::Index j = 0; j < gamma.cols(); ++j)
        gamma(i, j) = rng.uniform(-2.0, 2.0);
    activ = (xs * gamma).array().tanh().matrix();
    Eigen::RowVectorXd mean = activ.colwise().mean();
    double total_var = (activ.rowwise() - mean).squaredNorm();
    ok = total_var > 1e-12;
  }
  if (!ok) throw DataError("phantom activations degenerate after 10 resamples");

  // principal components of the centered activations
  Eigen::RowVectorXd mean = activ.colwise().mean();
  Eigen::MatrixXd centered = activ.rowwise() - mean;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sv = svd.singularValues();
  double total = sv.array().square().sum();
  int kept = 0;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    cum += sv[i] * sv[i];
    ++kept;
    if (cum >= 0.99 * total) break;
  }
  Eigen::MatrixXd pcs = svd.matrixU().leftCols(kept);
  for (int i = 0; i < kept; ++i) pcs.col(i) *= sv[i];

  Eigen::MatrixXd aux(T, k + 1 + kept);
  aux.leftCols(k + 1) = with_intercept(regressors, T);
  aux.rightCols(kept) = pcs;
  Eigen::VectorXd e = to_vector(resid);
  OlsFit fit = ols(aux, e);
  const double stat = static_cast<double>(T) * fit.r_squared;
  TestResult r;
  r.name = "Lee-White-Granger";
  r.statistic = stat;
  r.p_value = stats::chi2_sf(stat, kept);
  r.parameters = "chi2 df=" + std::to_string(kept) + " (of q=" +
                 std::to_string(q) + " phantom units)";
  r.null_hypothesis = "linearity in mean";
  return r;
}

TestResult adf(std::span<const double> series, int lags, AdfSpec spec) {
  if (lags < 0) throw ParamError("adf lags must be >= 0");
  const int T = static_cast<int>(series.size());
  if (T <= lags + 2 + (spec == AdfSpec::ConstantTrend ? 1 : 0) + 1)
    throw DataError("series too short for ADF regression");

  // regression rows t = lags+1 .. T-1 over Delta y_t
  const int rows = T - 1 - lags;
  const int det = spec == AdfSpec::ConstantTrend ? 2 : 1;
  const int cols = det + 1 + lags;
  Eigen::MatrixXd X(rows, cols);
  Eigen::VectorXd dy(rows);
  for (int i = 0; i < rows; ++i) {
    const int t = lags + 1 + i;
    dy[i] = series[static_cast<std::size_t>(t)] - series[static_cast<std::size_t>(t - 1)];
    X(i, 0) = 1.0;
    int c = 1;
    if (det == 2) X(i, c++) = static_cast<double>(t);
    X(i, c++) = series[static_cast<std::size_t>(t - 1)];  // gamma column
    for (int j = 1; j <= lags; ++j)
      X(i, c++) = series[static_cast<std::size_t>(t - j)] -
                  series[static_cast<std::size_t>(t - j - 1)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw DataError("rank-deficient ADF regression");
  Eigen::VectorXd beta = qr.solve(dy);
  Eigen::VectorXd resid = dy - X * beta;
  const double dof = static_cast<double>(rows - cols);
  if (dof <= 0.0) throw DataError("no degrees of freedom in ADF regression");
  const double s2 = resid.squaredNorm() / dof;
  Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(cols, cols));
  const int gamma_col = det;  // column index of y_{t-1}
  const double se = std::sqrt(s2 * xtx_inv(gamma_col, gamma_col));
  const double tau = beta[gamma_col] / se;
  TestResult r;
  r.name = "Dickey-Fuller";
  r.statistic = tau;
  r.p_value = stats::mackinnon_pvalue(tau, spec == AdfSpec::ConstantTrend);
  r.parameters = std::string(spec == AdfSpec::ConstantTrend ? "constant+trend"
                                                            : "constant") +
                 ", lags=" + std::to_string(lags);
  r.null_hypothesis = "non-stationary";
  return r;
}

TestResult ks_normality(std::span<const double> resid) {
  const int n = static_cast<int>(resid.size());
  if (n < 8) throw DataError("KS normality test needs at least 8 points");
  double mean = 0.0;
  for (double v : resid) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : resid) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  if (!(sd > 0.0)) throw DataError("zero-variance residuals");
  std::vector<double> z(resid.size());
  for (std::size_t i = 0; i < resid.size(); ++i) z[i] = (resid[i] - mean) / sd;
  std::sort(z.begin(), z.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = stats::normal_cdf(z[static_cast<std::size_t>(i)]);
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  TestResult r;
  r.name = "Kolmogorov-Smirnov";
  r.statistic = d;
  r.p_value = stats::lilliefors_pvalue(d, n);
  r.parameters = "n=" + std::to_string(n) + ", estimated mean/sd; plain KS-series p=" +
                 format_double(stats::ks_asymptotic_sf(std::sqrt(static_cast<double>(n)) * d));
  r.null_hypothesis = "normality";
  return r;
}

DiagnosticsReport diagnostics_report(std::span<const double> y,
                                     std::span<const double> yhat,
                                     const Eigen::MatrixXd& regressors,
                                     const ReportOptions& opts) {
  if (y.size() != yhat.size()) throw DataError("y and yhat lengths differ");
  if (y.empty()) throw DataError("empty residual series");
  std::vector<double> resid(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - yhat[i];

  DiagnosticsReport report;
  double mean = std::accumulate(resid.begin(), resid.end(), 0.0) /
                static_cast<double>(resid.size());
  report.residual_mean = mean;
  double ss = 0.0;
  for (double v : resid) ss += (v - mean) * (v - mean);
  report.residual_variance = ss / static_cast<double>(resid.size());

  auto run = [&](const std::string& name, auto&& fn) {
    NamedTest entry;
    entry.name = name;
    try {
      entry.result = fn();
    } catch (const Error& e) {
      entry.degenerate = true;
      entry.note = e.what();
      entry.result.name = name;
    }
    report.tests.push_back(std::move(entry));
  };

  try {
    report.acf = acf(resid, std::min<int>(opts.acf_lags,
                                          static_cast<int>(resid.size()) - 1));
  } catch (const Error&) {
    report.acf.clear();  // degenerate (constant residuals)
  }

  run("Breusch-Godfrey", [&] {
    return breusch_godfrey(resid, regressors, opts.bg_order, opts.bg_form);
  });
  run("Box-Pierce", [&] {
    return box_pierce(resid, opts.portmanteau_lags, PortmanteauVariant::BoxPierce);
  });
  run("Ljung-Box", [&] {
    return box_pierce(resid, opts.portmanteau_lags, PortmanteauVariant::LjungBox);
  });
  run("Breusch-Pagan", [&] { return breusch_pagan(resid, regressors); });
  run("Lee-White-Granger", [&] {
    return lee_white_granger(resid, regressors, opts.lwg_units, opts.seed);
  });
  run("Dickey-Fuller", [&] { return adf(resid, opts.adf_lags, opts.adf_spec); });
  run("Kolmogorov-Smirnov", [&] { return ks_normality(resid); });
  return report;
}

std::string to_json_string(const DiagnosticsReport& report) {
  nlohmann::json j;
  j["residual_mean"] = report.residual_mean;
  j["residual_variance"] = report.residual_variance;
  j["acf"] = report.acf;
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : report.tests) {
    nlohmann::json e;
    e["name"] = t.name;
    if (t.degenerate) {
      e["degenerate"] = true;
      e["note"] = t.note;
    } else {
      e["statistic"] = t.result.statistic;
      e["p_value"] = t.result.p_value;
      e["parameters"] = t.result.parameters;
      e["null_hypothesis"] = t.result.null_hypothesis;
    }
    tests.push_back(e);
  }
  j["tests"] = tests;
  return j.dump(2);
}

std::string format_table(const DiagnosticsReport& report) {
  // the five classical rows, in the customary order
  static const char* kRows[] = {"Breusch-Godfrey", "Box-Pierce",
                                "Breusch-Pagan", "Lee-White-Granger",
                                "Dickey-Fuller"};
  std::ostringstream out;
  out << "Test              | NULL                | statistic (p-value)\n";
  out << "------------------+---------------------+--------------------\n";
  for (const char* name : kRows) {
    for (const auto& t : report.tests) {
      if (t.name != name) continue;
      char buf[128];
      if (t.degenerate) {
        std::snprintf(buf, sizeof(buf), "%-18s| %-20s| degenerate (%s)\n",
                      t.name.c_str(), "-", t.note.c_str());
      } else {
        std::snprintf(buf, sizeof(buf), "%-18s| %-20s| %.4g (%.3g)\n",
                      t.name.c_str(), t.result.null_hypothesis.c_str(),
                      t.result.statistic, t.result.p_value);
      }
      out << buf;
    }
  }
  return out.str();
}

}  // namespace flowcast::diag
