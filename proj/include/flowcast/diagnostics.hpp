#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowcast/common.hpp"

namespace flowcast::diag {

struct TestResult {
  std::string name;
  double statistic = 0.0;
  double p_value = 0.0;
  std::string parameters;       // df / auxiliary values, human-readable
  std::string null_hypothesis;
};

/// Sample autocorrelations rho_0..rho_max_lag, full-sample-variance
/// denominator. Throws DataError on a constant series.
std::vector<double> acf(std::span<const double> series, int max_lag);

enum class PortmanteauVariant { BoxPierce, LjungBox };
TestResult box_pierce(std::span<const double> resid, int lags,
                      PortmanteauVariant variant = PortmanteauVariant::BoxPierce);

enum class BgForm { FStat, LM };
/// Auxiliary regression of residuals on [1, regressors, lagged residuals
/// (zero-padded)]. Reports the F form by default; both forms are computed.
TestResult breusch_godfrey(std::span<const double> resid,
                           const Eigen::MatrixXd& regressors, int order,
                           BgForm form = BgForm::FStat);

/// Squared residuals on [1, regressors]; statistic is the studentized
/// (Koenker) T*R^2 with the Gaussian-ML variant noted in `parameters`.
TestResult breusch_pagan(std::span<const double> resid,
                         const Eigen::MatrixXd& regressors);

/// Neglected-nonlinearity test: q phantom units tanh(gamma^T x~) over the
/// standardized regressors with intercept, gamma ~ U[-2,2]; residuals are
/// regressed on [1, regressors, leading principal components of the phantom
/// activations] (components for 99% variance, at most q); T*R^2 ~ chi2(kept).
TestResult lee_white_granger(std::span<const double> resid,
                             const Eigen::MatrixXd& regressors, int q,
                             std::uint64_t seed);

enum class AdfSpec { Constant, ConstantTrend };
/// Augmented Dickey-Fuller t-test; p-value by MacKinnon response surface.
TestResult adf(std::span<const double> series, int lags,
               AdfSpec spec = AdfSpec::Constant);

/// Kolmogorov-Smirnov statistic of standardized residuals against N(0,1).
/// The p-value is Lilliefors-calibrated for the estimated mean/sd; the plain
/// asymptotic KS-series value is included in `parameters`.
TestResult ks_normality(std::span<const double> resid);

struct ReportOptions {
  int acf_lags = 24;
  int portmanteau_lags = 24;
  int bg_order = 4;
  int lwg_units = 10;
  int adf_lags = 4;
  AdfSpec adf_spec = AdfSpec::Constant;
  BgForm bg_form = BgForm::FStat;
  std::uint64_t seed = 1;
};

struct NamedTest {
  std::string name;
  bool degenerate = false;  // test not applicable (e.g. constant residuals)
  std::string note;
  TestResult result;
};

struct DiagnosticsReport {
  double residual_mean = 0.0;
  double residual_variance = 0.0;
  std::vector<double> acf;
  std::vector<NamedTest> tests;
};

/// Residual battery over r = y - yhat. Pure function of its arguments.
DiagnosticsReport diagnostics_report(std::span<const double> y,
                                     std::span<const double> yhat,
                                     const Eigen::MatrixXd& regressors,
                                     const ReportOptions& opts = {});

std::string to_json_string(const DiagnosticsReport& report);
/// Plain-text table: test | null | statistic (p-value).
std::string format_table(const DiagnosticsReport& report);

}  // namespace flowcast::diag
