#pragma once

// Independent reference implementations used to freeze expected values.
// These deliberately avoid the library's solver code paths: the lasso oracle
// enumerates stationary points over active sets, the trend-filter oracle is a
// dense barrier method on the dual box QP, and OLS goes through Eigen QR.

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/datastore.hpp"

namespace flowcast::test {

inline Eigen::VectorXd ols_solve(const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& y) {
  return X.colPivHouseholderQr().solve(y);
}

/// Exhaustive lasso oracle for (1/(2T))||y - Xw - b||^2 + lambda ||w||_1.
/// Every stationary candidate over all (active set, sign pattern) pairs is a
/// feasible point, and the true minimizer is among them, so the minimum of
/// the exact objective over candidates equals the optimal value.
inline double lasso_oracle_objective(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y, double lambda) {
  const Eigen::Index p = X.cols();
  const double T = static_cast<double>(X.rows());
  if (p > 16) throw std::runtime_error("oracle limited to p <= 16");
  Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::MatrixXd G = (Xc.transpose() * Xc) / T;
  Eigen::VectorXd c = (Xc.transpose() * yc) / T;

  auto objective = [&](const Eigen::VectorXd& w) {
    double b = y_mean - x_mean.dot(w);
    Eigen::VectorXd r = y - X * w;
    r.array() -= b;
    return r.squaredNorm() / (2.0 * T) + lambda * w.lpNorm<1>();
  };

  double best = objective(Eigen::VectorXd::Zero(p));
  for (unsigned mask = 1; mask < (1u << p); ++mask) {
    std::vector<int> active;
    for (Eigen::Index j = 0; j < p; ++j)
      if (mask & (1u << j)) active.push_back(static_cast<int>(j));
    const int k = static_cast<int>(active.size());
    Eigen::MatrixXd Gs(k, k);
    Eigen::VectorXd cs(k);
    for (int a = 0; a < k; ++a) {
      cs[a] = c[active[static_cast<std::size_t>(a)]];
      for (int b = 0; b < k; ++b)
        Gs(a, b) = G(active[static_cast<std::size_t>(a)],
                     active[static_cast<std::size_t>(b)]);
    }
    for (unsigned signs = 0; signs < (1u << k); ++signs) {
      Eigen::VectorXd s(k);
      for (int a = 0; a < k; ++a) s[a] = (signs & (1u << a)) ? 1.0 : -1.0;
      Eigen::VectorXd ws = Gs.ldlt().solve(cs - lambda * s);
      if (!ws.allFinite()) continue;
      Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
      for (int a = 0; a < k; ++a) w[active[static_cast<std::size_t>(a)]] = ws[a];
      best = std::min(best, objective(w));
    }
  }
  return best;
}

/// Dense dual barrier oracle for (1/2)||y - f||^2 + lambda ||D f||_1.
/// Dual: min (1/2) nu^T (D D^T) nu - nu^T D y subject to |nu| <= lambda;
/// recover f = y - D^T nu.
inline Eigen::VectorXd trend_filter_oracle(std::span<const double> series,
                                           double lambda, int order) {
  const int T = static_cast<int>(series.size());
  const int m = T - order;
  Eigen::VectorXd y(T);
  for (int i = 0; i < T; ++i) y[i] = series[static_cast<std::size_t>(i)];
  if (lambda == 0.0 || m < 1) return y;

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, T);
  std::vector<double> stencil{1.0, -1.0};
  if (order == 2) stencil = {1.0, -2.0, 1.0};
  for (int r = 0; r < m; ++r)
    for (int k = 0; k <= order; ++k)
      D(r, r + k) = stencil[static_cast<std::size_t>(k)];
  Eigen::MatrixXd Q = D * D.transpose();
  Eigen::VectorXd q = D * y;

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(m);
  double t = 1.0;
  const double mu = 20.0;
  while (static_cast<double>(2 * m) / t > 1e-12) {
    for (int newton = 0; newton < 100; ++newton) {
      Eigen::ArrayXd hi = lambda - nu.array();
      Eigen::ArrayXd lo = nu.array() + lambda;
      Eigen::VectorXd grad =
          t * (Q * nu - q) + (1.0 / hi - 1.0 / lo).matrix();
      Eigen::MatrixXd H = t * Q;
      H.diagonal() += (1.0 / hi.square() + 1.0 / lo.square()).matrix();
      Eigen::VectorXd step = H.ldlt().solve(-grad);
      double decrement = -grad.dot(step);
      // backtracking: stay strictly inside the box, then Armijo
      double alpha = 1.0;
      auto value = [&](const Eigen::VectorXd& v) {
        Eigen::ArrayXd a = lambda - v.array();
        Eigen::ArrayXd b = v.array() + lambda;
        if ((a <= 0.0).any() || (b <= 0.0).any())
          return std::numeric_limits<double>::infinity();
        return t * (0.5 * v.dot(Q * v) - v.dot(q)) - a.log().sum() -
               b.log().sum();
      };
      double f0 = value(nu);
      while (alpha > 1e-12 &&
             value(nu + alpha * step) > f0 + 0.25 * alpha * grad.dot(step))
        alpha *= 0.5;
      nu += alpha * step;
      if (decrement / 2.0 < 1e-13) break;
    }
    t *= mu;
  }
  return y - D.transpose() * nu;
}

}  // namespace flowcast::test
