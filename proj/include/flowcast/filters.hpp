#pragma once

#include <span>
#include <string>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/datastore.hpp"

namespace flowcast::filters {

/// Exponential smoothing: out[0] = x[0], out[t] = a*x[t] + (1-a)*out[t-1].
std::vector<double> ewma(std::span<const double> series, double alpha);

/// Median filter. Odd windows are centered and truncated at the boundaries;
/// even windows (the trailing-causal variant) take the lower median of the
/// last `window` values, so the output never uses future samples.
std::vector<double> median_filter(std::span<const double> series, int window);

struct TrendFilterOptions {
  double rho = -1.0;       // ADMM penalty; <= 0 means max(lambda, 1)
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  int max_iterations = 50000;
  bool keep_trace = false;  // record objective per iteration
};

/// Minimizer of (1/2)||y - f||^2 + lambda * ||D^(order) f||_1.
struct TrendFilterFit {
  std::vector<double> input;
  std::vector<double> fitted;
  int order = 2;
  double lambda = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<int> kinks;            // rows of D with |z| above the default tol
  std::vector<double> dual;          // unscaled dual variable, |dual| <= lambda
  // objective of the retained (best-so-far) iterate, so non-increasing
  std::vector<double> objective_trace;  // filled when keep_trace
};

/// ADMM on the split  min (1/2)||y-f||^2 + lambda||z||_1  s.t. Df = z.
/// The f-update solves the banded system (I + rho D^T D) f = y + rho D^T(z-u);
/// the z-update is soft-thresholding at lambda/rho. Throws NumericError with
/// the final residuals if the iteration cap is hit.
TrendFilterFit trend_filter(std::span<const double> series, double lambda,
                            int order, const TrendFilterOptions& opts = {});

/// Smallest lambda at which D*fitted == 0:  ||(D D^T)^{-1} D y||_inf.
double trend_filter_lambda_max(std::span<const double> series, int order);

/// Rows r of D where |(D fitted)_r| > tol, ascending. For order 2, row r
/// spans series positions r..r+2.
std::vector<int> kinks(const TrendFilterFit& fit, double tol);

struct FilterSpec {
  enum class Kind { None, Median, Trend, Ewma };
  Kind kind = Kind::None;
  int window = 8;        // Median
  double lambda = 15.0;  // Trend
  int order = 2;         // Trend
  double alpha = 0.3;    // Ewma

  static FilterSpec none() { return {}; }
  static FilterSpec median(int window);
  static FilterSpec trend(double lambda, int order = 2);
  static FilterSpec exponential(double alpha);
  std::string label() const;
};

/// Applies the chosen filter independently per sensor per day. Outputs are
/// clamped at 0 so the result remains a valid speed field.
data::SpeedField filter_field(const data::SpeedField& field,
                              const FilterSpec& spec);

}  // namespace flowcast::filters
