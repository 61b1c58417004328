#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/datastore.hpp"

namespace flowcast::var {

struct LassoOptions {
  double tol = 1e-7;       // max coefficient change per full cycle
  int max_cycles = 10000;
  bool keep_trace = false;  // record objective after each cycle
};

struct LassoFit {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  int cycles = 0;
  double kkt_gap = 0.0;  // max stationarity violation at the solution
  std::vector<double> objective_trace;
};

/// Smallest lambda with an all-zero solution: (1/T)||X^T (y - mean(y))||_inf.
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Minimizes (1/(2T))||y - Xw - b||^2 + lambda*||w||_1 by cyclic coordinate
/// descent with covariance updates and active-set sweeps; the intercept is
/// unpenalized. `warm_start` (length p) seeds the coefficients, which makes
/// grid walks over lambda cheap.
LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   double lambda, const LassoOptions& opts = {},
                   const Eigen::VectorXd* warm_start = nullptr);

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& coef, double intercept,
                       double lambda);

/// Sparse linear VAR  y_{t+h} = A x_t + c. Coefficients are stored in
/// original (unstandardized) units; `support` marks exact nonzeros.
struct SparseVarModel {
  Eigen::MatrixXd coef;       // n_targets x p
  Eigen::VectorXd intercept;  // n_targets
  double lambda = 0.0;
  std::vector<data::LagDesign::Column> column_map;
  std::vector<std::string> sensor_ids;
  std::vector<int> target_sensors;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> support;
  Eigen::VectorXd residual_variance;  // per target, training residuals
  struct FitMeta {
    int total_cycles = 0;
    double max_kkt_gap = 0.0;
  } fit_meta;

  Eigen::Index n_targets() const { return coef.rows(); }
  Eigen::Index n_predictors() const { return coef.cols(); }
};

/// One lasso per target row; requires a standardized design.
SparseVarModel fit_sparse_var(const data::LagDesign& design, double lambda,
                              const LassoOptions& opts = {});

struct SupportEntry {
  int column = 0;
  data::LagDesign::Column predictor;
  double coefficient = 0.0;
};

/// Predictors with |coef| strictly above the threshold for one target,
/// ordered by descending magnitude (ties by column index).
std::vector<SupportEntry> support(const SparseVarModel& model,
                                  int target_sensor, double threshold);

/// A x + c for a lag vector in original units (ordering per column_map).
Eigen::VectorXd var_forecast(const SparseVarModel& model,
                             const Eigen::VectorXd& x_t);

/// Row-wise forecasts for a design (handles its standardization).
Eigen::MatrixXd predict(const SparseVarModel& model,
                        const data::LagDesign& design);

/// Validation-MSE lambda selection on a log grid from the pooled lambda_max
/// down by `ratio_min`. Returns the winning lambda and the (lambda, mse) grid.
struct LambdaChoice {
  double lambda = 0.0;
  std::vector<std::pair<double, double>> grid;  // (lambda, validation mse)
};
LambdaChoice select_lambda(const data::LagDesign& train,
                           const data::LagDesign& valid, int grid_size = 10,
                           double ratio_min = 1e-3,
                           const LassoOptions& opts = {});

void save_json(const SparseVarModel& model, const std::string& path);
SparseVarModel load_json(const std::string& path);

}  // namespace flowcast::var
