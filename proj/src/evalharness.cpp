#include "flowcast/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace flowcast::eval {

double mse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw DataError("mse: lengths differ");
  if (y.empty()) throw DataError("mse: empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - yhat[i];
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw DataError("r2: lengths differ");
  if (y.empty()) throw DataError("r2: empty vectors");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sst = 0.0, sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sst += (y[i] - mean) * (y[i] - mean);
    sse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  if (!(sst > 0.0)) throw DataError("r2 undefined for constant y");
  return 1.0 - sse / sst;
}

Eigen::MatrixXd naive_forecast(const data::SpeedField& field, int h) {
  if (h < 1) throw ParamError("horizon must be >= 1");
  const int n = field.n_sensors();
  const int T = field.n_times();
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Constant(n, T, std::numeric_limits<double>::quiet_NaN());
  for (auto [begin, end] : field.day_spans())
    for (int t = begin; t + h < end; ++t)
      out.col(t + h) = field.speeds.col(t);
  return out;
}

namespace {

// Day-level carve-out: last ceil(valid_frac * D) train days become the
// validation side (at least 1, at most D-1).
std::pair<std::vector<int>, std::vector<int>> carve_validation_days(
    const std::vector<int>& train_days, double valid_frac) {
  if (train_days.size() < 2)
    throw DataError("need at least 2 train days for a validation carve-out");
  std::size_t n_valid = static_cast<std::size_t>(
      std::ceil(valid_frac * static_cast<double>(train_days.size())));
  n_valid = std::clamp<std::size_t>(n_valid, 1, train_days.size() - 1);
  std::vector<int> fit_days(train_days.begin(),
                            train_days.end() - static_cast<long>(n_valid));
  std::vector<int> valid_days(train_days.end() - static_cast<long>(n_valid),
                              train_days.end());
  return {fit_days, valid_days};
}

std::vector<int> rows_of_days(const data::LagDesign& design,
                              const std::vector<int>& days) {
  std::set<int> lookup(days.begin(), days.end());
  std::vector<int> rows;
  for (std::size_t i = 0; i < design.row_days.size(); ++i)
    if (lookup.count(design.row_days[i])) rows.push_back(static_cast<int>(i));
  return rows;
}

std::vector<double> column_to_vector(const Eigen::MatrixXd& m, Eigen::Index col) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out[static_cast<std::size_t>(i)] = m(i, col);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineSpec& spec,
                            const data::SpeedField& field,
                            const RunOptions& opts) {
  if (field.any_missing())
    throw DataError("run_pipeline requires a clean field (impute/drop first)");
  PipelineResult result;
  result.row.label = spec.label;
  auto note = [&](const std::string& s) { result.provenance.push_back(s); };

  const bool is_naive = spec.model.kind == PipelineSpec::Model::Kind::Naive;

  // 1. filter (model inputs and training targets); metrics stay on raw data
  data::SpeedField filtered =
      is_naive ? field : filters::filter_field(field, spec.filter);
  note("filter: " + (is_naive ? std::string("skipped (naive)")
                              : spec.filter.label()));

  // 2. aligned designs on filtered and raw data: models are fit on the
  // pre-filtered dataset (inputs and training targets), while reported
  // metrics always score against measured speeds
  std::vector<int> targets{spec.target_sensor};
  data::LagDesign design_f =
      data::build_lag_design(filtered, spec.lags, spec.horizon, targets, true);
  data::LagDesign design_r =
      data::build_lag_design(field, spec.lags, spec.horizon, targets, false);
  note("design: " + std::to_string(design_f.rows()) + " rows, " +
       std::to_string(design_f.cols()) + " columns");

  // 3. day split
  auto [train_f, test_f] = data::split_train_test(design_f, opts.split);
  auto [train_r, test_r] = data::split_train_test(design_r, opts.split);
  note("split: " + std::to_string(train_f.rows()) + " train rows / " +
       std::to_string(test_f.rows()) + " test rows");

  result.train_y = column_to_vector(train_r.y, 0);
  result.test_y = column_to_vector(test_r.y, 0);
  result.train_times = train_r.row_times;
  result.test_times = test_r.row_times;

  Eigen::VectorXd train_pred, test_pred;

  if (is_naive) {
    // persistence: the raw lag-0 value of the target sensor
    int lag0_col = -1;
    for (std::size_t c = 0; c < design_r.column_map.size(); ++c)
      if (design_r.column_map[c].sensor == spec.target_sensor &&
          design_r.column_map[c].lag == 0)
        lag0_col = static_cast<int>(c);
    train_pred = train_r.X.col(lag0_col);
    test_pred = test_r.X.col(lag0_col);
    result.test_regressors = test_r.X;
    note("model: naive persistence at h=" + std::to_string(spec.horizon));
  } else {
    // validation carve-out by days within the train split
    auto [fit_days, valid_days] =
        carve_validation_days(train_f.distinct_days(), opts.valid_frac);
    data::LagDesign fit_f = data::select_rows(train_f, rows_of_days(train_f, fit_days));
    data::LagDesign valid_f =
        data::select_rows(train_f, rows_of_days(train_f, valid_days));
    note("validation: " + std::to_string(valid_f.rows()) + " rows from " +
         std::to_string(valid_days.size()) + " days");

    // optional lasso predictor selection (for the deep models)
    var::LassoOptions lasso_opts;
    lasso_opts.max_cycles = 200000;  // filtered designs are near-collinear
    std::vector<int> selected;
    const bool is_var = spec.model.kind == PipelineSpec::Model::Kind::Var;
    if (!is_var && spec.selector.kind == PipelineSpec::Selector::Kind::Lasso) {
      double lam = spec.selector.lambda;
      if (lam < 0.0) {
        auto choice = var::select_lambda(fit_f, valid_f, opts.lambda_grid,
                                         1e-3, lasso_opts);
        lam = choice.lambda;
        note("selector lambda by validation grid: " + format_double(lam));
      }
      var::SparseVarModel sel = var::fit_sparse_var(train_f, lam, lasso_opts);
      for (const auto& entry : var::support(sel, spec.target_sensor, 0.0))
        selected.push_back(entry.column);
      std::sort(selected.begin(), selected.end());
      result.var_model = std::move(sel);
      if (selected.empty()) {
        note("selector: empty support, falling back to all predictors");
        selected.clear();
      } else {
        note("selector: kept " + std::to_string(selected.size()) + " of " +
             std::to_string(train_f.cols()) + " predictors");
      }
    }

    auto maybe_select = [&](const data::LagDesign& d) {
      return selected.empty() ? d : data::select_columns(d, selected);
    };
    data::LagDesign fit_in = maybe_select(fit_f);
    data::LagDesign valid_in = maybe_select(valid_f);
    data::LagDesign train_in = maybe_select(train_f);
    data::LagDesign test_in = maybe_select(test_f);

    if (is_var) {
      double lam = spec.model.var_lambda;
      if (lam < 0.0) {
        auto choice = var::select_lambda(fit_in, valid_in, opts.lambda_grid,
                                         1e-3, lasso_opts);
        lam = choice.lambda;
        note("var lambda by validation grid: " + format_double(lam));
      }
      var::SparseVarModel model = var::fit_sparse_var(train_in, lam, lasso_opts);
      train_pred = var::predict(model, train_in).col(0);
      test_pred = var::predict(model, test_in).col(0);
      result.var_model = std::move(model);
      note("model: sparse VAR, lambda=" + format_double(lam));
    } else {
      nn::NetConfig base = spec.model.net;
      base.input_dim = static_cast<int>(fit_in.cols());
      base.output_dim = 1;
      // center the targets for training: the l2/l1 penalty covers biases,
      // which would otherwise shrink the absolute speed level
      const double y_center = fit_in.y.col(0).mean();
      data::LagDesign fit_c = fit_in;
      data::LagDesign valid_c = valid_in;
      fit_c.y.array() -= y_center;
      valid_c.y.array() -= y_center;
      note("net targets centered at " + format_double(y_center));
      if (spec.model.kind == PipelineSpec::Model::Kind::DlSearch) {
        search::SearchOptions sopts;
        sopts.workers = opts.search_workers;
        sopts.epochs_per_candidate = opts.search_epochs;
        sopts.final_epochs = base.epochs;
        sopts.seed = Rng::derive_seed(opts.seed, "search");
        auto found =
            search::random_search(fit_c, valid_c, spec.model.space, base, sopts);
        result.net = std::move(found.best);
        result.leaderboard = std::move(found.leaderboard);
        note("model: random search over " +
             std::to_string(spec.model.space.budget) + " candidates, winner " +
             std::to_string(result.net->config.hidden_widths.size()) +
             " hidden layers");
      } else {
        base.seed = Rng::derive_seed(opts.seed, "dl");
        result.net = nn::sgd_train(nn::init_network(base), fit_c, valid_c);
        note("model: deep net, " + std::to_string(base.hidden_widths.size()) +
             " hidden layers");
      }
      train_pred = nn::predict(*result.net, train_in).col(0);
      test_pred = nn::predict(*result.net, test_in).col(0);
      train_pred.array() += y_center;
      test_pred.array() += y_center;
      // train-set intercept recalibration: the sparse VAR gets an exact
      // level fit from its unpenalized intercept, SGD only an approximate
      // one; this puts both pipelines on the same footing
      const double level =
          (train_in.y.col(0) - train_pred).mean();
      train_pred.array() += level;
      test_pred.array() += level;
      note("net level recalibrated by " + format_double(level));
    }
    result.test_regressors = test_in.raw_X();
  }

  result.train_yhat = std::vector<double>(train_pred.begin(), train_pred.end());
  result.test_yhat = std::vector<double>(test_pred.begin(), test_pred.end());

  result.row.is_mse = mse(result.train_y, result.train_yhat);
  result.row.is_r2 = r2(result.train_y, result.train_yhat);
  result.row.os_mse = mse(result.test_y, result.test_yhat);
  result.row.os_r2 = r2(result.test_y, result.test_yhat);
  return result;
}

std::vector<EvalRow> compare_models(const std::vector<PipelineSpec>& specs,
                                    const data::SpeedField& field,
                                    const RunOptions& opts) {
  if (specs.empty()) throw ParamError("need at least one pipeline spec");
  std::vector<EvalRow> rows;
  for (const auto& spec : specs) {
    try {
      rows.push_back(run_pipeline(spec, field, opts).row);
    } catch (const Error& e) {
      EvalRow row;
      row.label = spec.label;
      row.failed = true;
      row.error = e.what();
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_table(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "metric";
  for (const auto& r : rows) out << ',' << r.label;
  out << '\n';
  auto emit = [&](const char* name, auto get) {
    out << name;
    for (const auto& r : rows) {
      out << ',';
      if (r.failed) out << "failed";
      else out << format_double(get(r));
    }
    out << '\n';
  };
  emit("IS MSE", [](const EvalRow& r) { return r.is_mse; });
  emit("IS R2", [](const EvalRow& r) { return r.is_r2; });
  emit("OS MSE", [](const EvalRow& r) { return r.os_mse; });
  emit("OS R2", [](const EvalRow& r) { return r.os_r2; });
  return out.str();
}

void export_heatmap(const data::SpeedField& field,
                    std::span<const double> predictions,
                    std::span<const std::int64_t> prediction_times,
                    int target_sensor, const std::string& path) {
  if (predictions.size() != prediction_times.size())
    throw DataError("predictions and their timestamps differ in length");
  if (target_sensor < 0 || target_sensor >= field.n_sensors())
    throw ParamError("target sensor out of range");
  data::SpeedField grid = field;
  std::size_t cursor = 0;
  // both the field times and prediction times are ascending
  for (std::size_t i = 0; i < prediction_times.size(); ++i) {
    std::int64_t want = prediction_times[i];
    while (cursor < grid.timestamps.size() && grid.timestamps[cursor] < want)
      ++cursor;
    if (cursor >= grid.timestamps.size() || grid.timestamps[cursor] != want)
      throw DataError("prediction timestamp " + data::format_iso8601(want) +
                      " not on the field grid");
    grid.speeds(target_sensor, static_cast<int>(cursor)) = predictions[i];
  }
  data::export_wide_csv(grid, path);
}

}  // namespace flowcast::eval
