#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/datastore.hpp"
#include "flowcast/deepnet.hpp"
#include "flowcast/filters.hpp"
#include "flowcast/hypersearch.hpp"
#include "flowcast/sparsevar.hpp"

namespace flowcast::eval {

double mse(std::span<const double> y, std::span<const double> yhat);
/// 1 - SSE/SST with SST about mean(y); errors on constant y.
double r2(std::span<const double> y, std::span<const double> yhat);

/// Persistence forecast yhat_{t+h} = y_t per sensor, within days. Column t of
/// the result holds the prediction *for* time t (made h steps earlier); the
/// first h columns of each day are NaN.
Eigen::MatrixXd naive_forecast(const data::SpeedField& field, int h);

/// One Table-1-style pipeline variant: filter x selector x model.
struct PipelineSpec {
  std::string label;
  filters::FilterSpec filter;  // default: none

  struct Selector {
    enum class Kind { None, Lasso };
    Kind kind = Kind::None;
    double lambda = -1.0;  // < 0: validation-grid choice
  } selector;

  struct Model {
    enum class Kind { Var, Dl, DlSearch, Naive };
    Kind kind = Kind::Naive;
    double var_lambda = -1.0;  // < 0: validation-grid choice
    nn::NetConfig net;         // Dl / base config for DlSearch
    search::SearchSpace space; // DlSearch
  } model;

  int horizon = 8;  // 40 minutes at 5-minute steps
  int lags = 6;
  int target_sensor = 0;
};

struct EvalRow {
  std::string label;
  double is_mse = 0.0;
  double is_r2 = 0.0;
  double os_mse = 0.0;
  double os_r2 = 0.0;
  bool failed = false;
  std::string error;
};

struct PipelineResult {
  EvalRow row;
  // raw-unit targets and predictions over exactly the split rows
  std::vector<double> train_y, train_yhat;
  std::vector<std::int64_t> train_times;
  std::vector<double> test_y, test_yhat;
  std::vector<std::int64_t> test_times;
  Eigen::MatrixXd test_regressors;  // model inputs (raw units) on test rows
  std::optional<var::SparseVarModel> var_model;      // Var / selector fit
  std::optional<nn::DeepNet> net;                    // Dl / DlSearch winner
  std::vector<search::Candidate> leaderboard;        // DlSearch only
  std::vector<std::string> provenance;               // per-stage notes
};

struct RunOptions {
  data::SplitPolicy split;   // default FirstHalfDays
  double valid_frac = 0.25;  // trailing fraction of train days for validation
  int lambda_grid = 10;
  int search_workers = 0;
  int search_epochs = 50;
  std::uint64_t seed = 0;
};

/// filter -> lag design -> split -> optional lasso selection -> model fit ->
/// IS/OS metrics. Training targets come from the filtered field; metrics and
/// the naive baseline always score against unfiltered measured speeds.
PipelineResult run_pipeline(const PipelineSpec& spec,
                            const data::SpeedField& field,
                            const RunOptions& opts = {});

/// One EvalRow per spec; failures are marked on the row, not fatal.
std::vector<EvalRow> compare_models(const std::vector<PipelineSpec>& specs,
                                    const data::SpeedField& field,
                                    const RunOptions& opts = {});

std::string format_table(const std::vector<EvalRow>& rows);

/// Wide time-by-corridor grid with the target sensor's column replaced by
/// predictions at the matching timestamps (measured values elsewhere).
void export_heatmap(const data::SpeedField& field,
                    std::span<const double> predictions,
                    std::span<const std::int64_t> prediction_times,
                    int target_sensor, const std::string& path);

}  // namespace flowcast::eval
