#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "flowcast/common.hpp"
#include "flowcast/diagnostics.hpp"
#include "flowcast/dist.hpp"

using namespace flowcast;

namespace {

std::vector<double> white_noise(int n, Rng& rng) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (auto& v : s) v = rng.normal();
  return s;
}

std::vector<double> ar1(int n, double phi, Rng& rng) {
  std::vector<double> s(static_cast<std::size_t>(n));
  s[0] = rng.normal();
  for (int t = 1; t < n; ++t)
    s[static_cast<std::size_t>(t)] =
        phi * s[static_cast<std::size_t>(t - 1)] + rng.normal();
  return s;
}

Eigen::MatrixXd random_regressors(int n, int k, Rng& rng) {
  Eigen::MatrixXd X(n, k);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();
  return X;
}

// residuals of y on [1, X]
std::vector<double> ols_residuals(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y) {
  Eigen::MatrixXd Xi(X.rows(), X.cols() + 1);
  Xi.col(0).setOnes();
  Xi.rightCols(X.cols()) = X;
  Eigen::VectorXd beta = Xi.colPivHouseholderQr().solve(y);
  Eigen::VectorXd r = y - Xi * beta;
  return std::vector<double>(r.begin(), r.end());
}

}  // namespace

TEST_CASE("special functions agree with frozen reference values") {
  // chi-square and F tails (reference: scipy.stats at double precision)
  CHECK(stats::chi2_sf(36.415, 24) == doctest::Approx(0.0500060).epsilon(1e-4));
  CHECK(stats::chi2_sf(9.4877, 4) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(stats::f_sf(2.8661, 4, 100) == doctest::Approx(0.0269855).epsilon(1e-4));
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::normal_cdf(-1.959964) == doctest::Approx(0.025).epsilon(1e-5));
  // MacKinnon surface anchors (single series)
  CHECK(stats::mackinnon_pvalue(-3.39, false) ==
        doctest::Approx(0.011304531).epsilon(1e-6));
  CHECK(stats::mackinnon_pvalue(-3.0154, false) ==
        doctest::Approx(0.033481048).epsilon(1e-6));
  CHECK(stats::mackinnon_pvalue(-1.0, false) ==
        doctest::Approx(0.753264301).epsilon(1e-6));
  CHECK(stats::mackinnon_pvalue(-3.39, true) ==
        doctest::Approx(0.052738399).epsilon(1e-6));
  CHECK(stats::mackinnon_pvalue(0.5, true) == doctest::Approx(0.996851911).epsilon(1e-6));
  CHECK(stats::mackinnon_pvalue(-20.0, false) == 0.0);
  CHECK(stats::mackinnon_pvalue(3.0, false) == 1.0);
}

TEST_CASE("acf") {
  SUBCASE("rho_0 is always 1") {
    Rng rng(1);
    auto s = white_noise(100, rng);
    auto rho = diag::acf(s, 10);
    CHECK(rho[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("white noise stays inside the Bartlett band") {
    Rng rng(2);
    auto s = white_noise(5000, rng);
    auto rho = diag::acf(s, 20);
    int inside = 0;
    for (int k = 1; k <= 20; ++k)
      if (std::abs(rho[static_cast<std::size_t>(k)]) < 3.0 / std::sqrt(5000.0))
        ++inside;
    CHECK(inside >= 19);
  }
  SUBCASE("AR(1) phi=0.9 has rho_1 in [0.85, 0.95]") {
    Rng rng(3);
    auto s = ar1(5000, 0.9, rng);
    auto rho = diag::acf(s, 5);
    CHECK(rho[1] > 0.85);
    CHECK(rho[1] < 0.95);
  }
  SUBCASE("constant series errors") {
    std::vector<double> s(50, 3.0);
    CHECK_THROWS_AS(diag::acf(s, 5), DataError);
  }
}

TEST_CASE("box_pierce / ljung_box") {
  SUBCASE("Q is non-negative and p in [0,1]") {
    Rng rng(4);
    auto s = white_noise(300, rng);
    for (auto variant :
         {diag::PortmanteauVariant::BoxPierce, diag::PortmanteauVariant::LjungBox}) {
      auto r = diag::box_pierce(s, 24, variant);
      CHECK(r.statistic >= 0.0);
      CHECK(r.p_value >= 0.0);
      CHECK(r.p_value <= 1.0);
    }
  }
  SUBCASE("size near 0.05 under the null (500 sims, N=1000)") {
    Rng rng(5);
    int reject = 0;
    const int reps = 500;
    for (int rep = 0; rep < reps; ++rep) {
      auto s = white_noise(1000, rng);
      if (diag::box_pierce(s, 24, diag::PortmanteauVariant::LjungBox).p_value < 0.05)
        ++reject;
    }
    double rate = static_cast<double>(reject) / reps;
    CHECK(rate > 0.02);
    CHECK(rate < 0.08);
  }
  SUBCASE("power: AR(1) phi=0.9 residuals reject hard") {
    Rng rng(6);
    auto s = ar1(1000, 0.9, rng);
    CHECK(diag::box_pierce(s, 24, diag::PortmanteauVariant::BoxPierce).p_value <
          0.001);
  }
}

TEST_CASE("breusch_godfrey") {
  SUBCASE("order 0 is a parameter error") {
    Rng rng(7);
    auto s = white_noise(100, rng);
    CHECK_THROWS_AS(diag::breusch_godfrey(s, random_regressors(100, 2, rng), 0),
                    ParamError);
  }
  SUBCASE("size near 0.05 under the null (500 sims)") {
    Rng rng(8);
    int reject = 0;
    const int reps = 500;
    for (int rep = 0; rep < reps; ++rep) {
      Eigen::MatrixXd X = random_regressors(400, 3, rng);
      Eigen::VectorXd y = X * Eigen::Vector3d(1.0, -0.5, 0.25);
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.normal();
      auto resid = ols_residuals(X, y);
      if (diag::breusch_godfrey(resid, X, 4).p_value < 0.05) ++reject;
    }
    double rate = static_cast<double>(reject) / reps;
    CHECK(rate > 0.02);
    CHECK(rate < 0.08);
  }
  SUBCASE("power against AR(1) phi=0.8 residuals") {
    Rng rng(9);
    Eigen::MatrixXd X = random_regressors(1000, 2, rng);
    auto e = ar1(1000, 0.8, rng);
    CHECK(diag::breusch_godfrey(e, X, 4).p_value < 0.01);
  }
  SUBCASE("LM form is also available") {
    Rng rng(10);
    auto e = white_noise(300, rng);
    Eigen::MatrixXd X = random_regressors(300, 2, rng);
    auto f = diag::breusch_godfrey(e, X, 4, diag::BgForm::FStat);
    auto lm = diag::breusch_godfrey(e, X, 4, diag::BgForm::LM);
    CHECK(f.statistic != lm.statistic);
    CHECK(lm.statistic == doctest::Approx(300.0 * (f.statistic * 4.0) /
                                          (f.statistic * 4.0 + 300.0 - 3.0 - 4.0))
                              .epsilon(0.05));
  }
  SUBCASE("rank-deficient auxiliary regression errors") {
    Rng rng(11);
    auto e = white_noise(50, rng);
    Eigen::MatrixXd X(50, 2);
    X.col(0).setOnes();
    X.col(1).setOnes();  // collinear with the intercept
    CHECK_THROWS_AS(diag::breusch_godfrey(e, X, 2), DataError);
  }
}

TEST_CASE("breusch_pagan") {
  SUBCASE("constant-only regressor set gives statistic 0") {
    Rng rng(12);
    auto e = white_noise(80, rng);
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(80, 1);
    auto r = diag::breusch_pagan(e, X);
    CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("size near 0.05 under homoskedastic null (500 sims)") {
    Rng rng(13);
    int reject = 0;
    const int reps = 500;
    for (int rep = 0; rep < reps; ++rep) {
      Eigen::MatrixXd X = random_regressors(400, 3, rng);
      Eigen::VectorXd y = X.col(0) - 0.3 * X.col(1);
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.normal();
      auto resid = ols_residuals(X, y);
      if (diag::breusch_pagan(resid, X).p_value < 0.05) ++reject;
    }
    double rate = static_cast<double>(reject) / reps;
    CHECK(rate > 0.02);
    CHECK(rate < 0.08);
  }
  SUBCASE("power: variance proportional to a regressor") {
    Rng rng(14);
    const int n = 1000;
    Eigen::MatrixXd X(n, 1);
    for (int i = 0; i < n; ++i) X(i, 0) = rng.uniform(0.5, 3.0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 2.0 * X(i, 0) + std::sqrt(X(i, 0)) * rng.normal() * 1.5;
    auto resid = ols_residuals(X, y);
    CHECK(diag::breusch_pagan(resid, X).p_value < 0.01);
  }
}

TEST_CASE("lee_white_granger") {
  SUBCASE("identical seed gives identical statistic") {
    Rng rng(15);
    auto e = white_noise(200, rng);
    Eigen::MatrixXd X = random_regressors(200, 2, rng);
    auto a = diag::lee_white_granger(e, X, 10, 77);
    auto b = diag::lee_white_granger(e, X, 10, 77);
    CHECK(a.statistic == b.statistic);
    CHECK(a.p_value == b.p_value);
  }
  SUBCASE("size within [0.02, 0.08] under the linear null (500 sims)") {
    Rng rng(16);
    int reject = 0;
    const int reps = 500;
    for (int rep = 0; rep < reps; ++rep) {
      Eigen::MatrixXd X = random_regressors(300, 2, rng);
      Eigen::VectorXd y = 0.8 * X.col(0) - 0.6 * X.col(1);
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.normal();
      auto resid = ols_residuals(X, y);
      if (diag::lee_white_granger(resid, X, 10,
                                  static_cast<std::uint64_t>(rep) + 1)
              .p_value < 0.05)
        ++reject;
    }
    double rate = static_cast<double>(reject) / reps;
    CHECK(rate >= 0.02);
    CHECK(rate <= 0.08);
  }
  SUBCASE("power: suppressed x^2 term is detected") {
    Rng rng(17);
    const int n = 1000;
    Eigen::MatrixXd X = random_regressors(n, 1, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
      y[i] = X(i, 0) + 0.8 * X(i, 0) * X(i, 0) + 0.5 * rng.normal();
    auto resid = ols_residuals(X, y);
    CHECK(diag::lee_white_granger(resid, X, 10, 5).p_value < 0.01);
  }
}

TEST_CASE("adf") {
  SUBCASE("statistic for white noise is negative") {
    Rng rng(18);
    for (int rep = 0; rep < 50; ++rep) {
      auto s = white_noise(300, rng);
      CHECK(diag::adf(s, 2).statistic < 0.0);
    }
  }
  SUBCASE("size near 0.05 under a pure random walk (500 sims)") {
    Rng rng(19);
    int reject = 0;
    const int reps = 500;
    for (int rep = 0; rep < reps; ++rep) {
      std::vector<double> s(500);
      s[0] = 0.0;
      for (int t = 1; t < 500; ++t)
        s[static_cast<std::size_t>(t)] = s[static_cast<std::size_t>(t - 1)] + rng.normal();
      if (diag::adf(s, 0).p_value < 0.05) ++reject;
    }
    double rate = static_cast<double>(reject) / reps;
    CHECK(rate > 0.02);
    CHECK(rate < 0.08);
  }
  SUBCASE("power against AR(1) phi=0.5") {
    Rng rng(20);
    int reject = 0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
      auto s = ar1(500, 0.5, rng);
      if (diag::adf(s, 2).p_value < 0.05) ++reject;
    }
    CHECK(reject >= 90);
  }
  SUBCASE("short series errors") {
    std::vector<double> s{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(diag::adf(s, 4), DataError);
  }
}

TEST_CASE("ks_normality") {
  SUBCASE("statistic lies in [0, 1]") {
    Rng rng(21);
    auto s = white_noise(200, rng);
    auto r = diag::ks_normality(s);
    CHECK(r.statistic >= 0.0);
    CHECK(r.statistic <= 1.0);
  }
  SUBCASE("normal samples keep p above 0.05 at least 90% of the time") {
    Rng rng(22);
    int ok = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
      auto s = white_noise(2000, rng);
      if (diag::ks_normality(s).p_value > 0.05) ++ok;
    }
    CHECK(ok >= 180);
  }
  SUBCASE("uniform samples are rejected") {
    Rng rng(23);
    std::vector<double> s(2000);
    for (auto& v : s) v = rng.uniform();
    CHECK(diag::ks_normality(s).p_value < 0.01);
  }
  SUBCASE("zero variance errors") {
    std::vector<double> s(100, 1.0);
    CHECK_THROWS_AS(diag::ks_normality(s), DataError);
  }
}

TEST_CASE("diagnostics_report") {
  SUBCASE("perfect predictions surface degenerate flags with mean 0") {
    Rng rng(24);
    std::vector<double> y = white_noise(100, rng);
    Eigen::MatrixXd X = random_regressors(100, 2, rng);
    auto report = diag::diagnostics_report(y, y, X, {});
    CHECK(report.residual_mean == 0.0);
    CHECK(report.residual_variance == 0.0);
    bool any_degenerate = false;
    for (const auto& t : report.tests)
      if (t.degenerate) any_degenerate = true;
    CHECK(any_degenerate);
    CHECK(report.acf.empty());
  }
  SUBCASE("the five Table-2 tests are all present, plus extensions") {
    Rng rng(25);
    auto y = white_noise(400, rng);
    Eigen::MatrixXd X = random_regressors(400, 3, rng);
    Eigen::VectorXd fit = X * Eigen::Vector3d(0.1, 0.2, -0.1);
    std::vector<double> yhat(fit.begin(), fit.end());
    auto report = diag::diagnostics_report(y, yhat, X, {});
    std::vector<std::string> names;
    for (const auto& t : report.tests) names.push_back(t.name);
    for (const char* want :
         {"Breusch-Godfrey", "Box-Pierce", "Breusch-Pagan", "Lee-White-Granger",
          "Dickey-Fuller"})
      CHECK(std::find(names.begin(), names.end(), want) != names.end());
    CHECK(std::find(names.begin(), names.end(), "Ljung-Box") != names.end());
    CHECK(std::find(names.begin(), names.end(), "Kolmogorov-Smirnov") != names.end());
    CHECK(report.acf.size() == 25);  // lag 0..24
    CHECK(report.acf[0] == doctest::Approx(1.0));
    auto table = diag::format_table(report);
    CHECK(table.find("Dickey-Fuller") != std::string::npos);
    auto json_text = diag::to_json_string(report);
    CHECK(json_text.find("\"tests\"") != std::string::npos);
  }
  SUBCASE("pure function: identical inputs give identical reports") {
    Rng rng(26);
    auto y = white_noise(300, rng);
    auto yhat = white_noise(300, rng);
    Eigen::MatrixXd X = random_regressors(300, 2, rng);
    auto a = diag::diagnostics_report(y, yhat, X, {});
    auto b = diag::diagnostics_report(y, yhat, X, {});
    CHECK(diag::to_json_string(a) == diag::to_json_string(b));
  }
}
