#include "flowcast/sparsevar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace flowcast::var {

using nlohmann::json;

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0 || X.cols() == 0) throw DataError("empty design");
  if (X.rows() != y.size()) throw DataError("X and y row counts differ");
  const double T = static_cast<double>(X.rows());
  Eigen::VectorXd centered = y.array() - y.mean();
  return (X.transpose() * centered).cwiseAbs().maxCoeff() / T;
}

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& coef, double intercept,
                       double lambda) {
  const double T = static_cast<double>(X.rows());
  Eigen::VectorXd r = y - X * coef;
  r.array() -= intercept;
  return r.squaredNorm() / (2.0 * T) + lambda * coef.lpNorm<1>();
}

LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   double lambda, const LassoOptions& opts,
                   const Eigen::VectorXd* warm_start) {
  if (X.rows() < 1 || X.cols() < 1) throw DataError("empty design");
  if (X.rows() != y.size()) throw DataError("X and y row counts differ");
  if (!X.allFinite() || !y.allFinite())
    throw DataError("design contains non-finite values");
  if (lambda < 0.0) throw ParamError("lambda must be non-negative");

  const Eigen::Index p = X.cols();
  const double T = static_cast<double>(X.rows());

  // Center columns and y; the intercept is recovered at the end.
  Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  Eigen::VectorXd yc = y.array() - y_mean;

  // Covariance updates: G = Xc^T Xc / T, c = Xc^T yc / T.
  Eigen::MatrixXd G = (Xc.transpose() * Xc) / T;
  Eigen::VectorXd c = (Xc.transpose() * yc) / T;

  LassoFit fit;
  fit.coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(p);  // G * coef
  if (warm_start) {
    if (warm_start->size() != p)
      throw ParamError("warm start length does not match the design");
    fit.coef = *warm_start;
    q = G * fit.coef;
  }

  auto soft = [](double v, double thr) {
    double mag = std::abs(v) - thr;
    return mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
  };

  // one exact coordinate-minimization pass over the given index set
  std::vector<Eigen::Index> active;
  auto sweep = [&](bool full) {
    double max_delta = 0.0;
    const Eigen::Index count = full ? p : static_cast<Eigen::Index>(active.size());
    for (Eigen::Index k = 0; k < count; ++k) {
      const Eigen::Index j = full ? k : active[static_cast<std::size_t>(k)];
      const double gjj = G(j, j);
      const double old = fit.coef[j];
      double w = 0.0;
      if (gjj > 1e-300) {
        double rho_j = c[j] - q[j] + gjj * old;
        w = soft(rho_j, lambda) / gjj;
      }
      const double delta = w - old;
      if (delta != 0.0) {
        fit.coef[j] = w;
        q += delta * G.col(j);
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    return max_delta;
  };
  auto collect_active = [&] {
    active.clear();
    for (Eigen::Index j = 0; j < p; ++j)
      if (fit.coef[j] != 0.0) active.push_back(j);
  };

  // glmnet-style schedule: full pass to refresh the active set, then cheap
  // active-set passes until stable, then a confirming full pass
  bool converged = false;
  bool full_pass = true;
  double last_delta = 0.0;
  while (fit.cycles < opts.max_cycles) {
    const double max_delta = sweep(full_pass);
    last_delta = max_delta;
    ++fit.cycles;
    if (opts.keep_trace) {
      double b = y_mean - x_mean.dot(fit.coef);
      fit.objective_trace.push_back(lasso_objective(X, y, fit.coef, b, lambda));
    }
    if (max_delta < opts.tol) {
      if (full_pass) {
        converged = true;
        break;
      }
      full_pass = true;  // active set stable; confirm over all coordinates
    } else if (full_pass) {
      collect_active();
      full_pass = active.empty();  // nothing active: keep doing full passes
    }
  }

  // stationarity violation as a duality-gap proxy
  Eigen::VectorXd grad = c - q;  // (1/T) Xc^T (yc - Xc w)
  double gap = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (fit.coef[j] != 0.0)
      gap = std::max(gap, std::abs(grad[j] - lambda * (fit.coef[j] > 0 ? 1.0 : -1.0)));
    else
      gap = std::max(gap, std::max(0.0, std::abs(grad[j]) - lambda));
  }
  fit.kkt_gap = gap;
  fit.intercept = y_mean - x_mean.dot(fit.coef);
  if (!converged)
    throw NumericError("lasso did not converge in " +
                       std::to_string(opts.max_cycles) +
                       " cycles (last max coefficient change " +
                       format_double(last_delta) + ", KKT gap " +
                       format_double(gap) + ")");
  return fit;
}

SparseVarModel fit_sparse_var(const data::LagDesign& design, double lambda,
                              const LassoOptions& opts) {
  if (!design.standardization.active)
    throw DataError("fit_sparse_var requires a standardized design");
  if (design.rows() < 2) throw DataError("need at least 2 rows");

  const Eigen::Index p = design.cols();
  const Eigen::Index n_targets = design.y.cols();
  SparseVarModel model;
  model.lambda = lambda;
  model.column_map = design.column_map;
  model.sensor_ids = design.sensor_ids;
  model.target_sensors = design.target_sensors;
  model.coef.resize(n_targets, p);
  model.intercept.resize(n_targets);
  model.residual_variance.resize(n_targets);

  const auto& st = design.standardization;
  for (Eigen::Index i = 0; i < n_targets; ++i) {
    LassoFit fit = lasso_fit(design.X, design.y.col(i), lambda, opts);
    // back to original units: w_raw = w_std / scale
    for (Eigen::Index j = 0; j < p; ++j)
      model.coef(i, j) = fit.coef[j] / st.scale[j];
    model.intercept[i] =
        fit.intercept - (fit.coef.array() * st.center.array() / st.scale.array()).sum();
    Eigen::VectorXd yhat = design.X * fit.coef;
    yhat.array() += fit.intercept;
    model.residual_variance[i] = (design.y.col(i) - yhat).squaredNorm() /
                                 static_cast<double>(design.rows());
    model.fit_meta.total_cycles += fit.cycles;
    model.fit_meta.max_kkt_gap = std::max(model.fit_meta.max_kkt_gap, fit.kkt_gap);
  }
  model.support = model.coef.array() != 0.0;
  return model;
}

namespace {

Eigen::Index target_row(const SparseVarModel& model, int target_sensor) {
  for (std::size_t i = 0; i < model.target_sensors.size(); ++i)
    if (model.target_sensors[i] == target_sensor)
      return static_cast<Eigen::Index>(i);
  throw DataError("sensor " + std::to_string(target_sensor) +
                  " is not a target of this model");
}

}  // namespace

std::vector<SupportEntry> support(const SparseVarModel& model,
                                  int target_sensor, double threshold) {
  if (threshold < 0.0) throw ParamError("threshold must be non-negative");
  Eigen::Index row = target_row(model, target_sensor);
  std::vector<SupportEntry> out;
  for (Eigen::Index j = 0; j < model.n_predictors(); ++j) {
    double a = model.coef(row, j);
    if (std::abs(a) > threshold)
      out.push_back({static_cast<int>(j),
                     model.column_map[static_cast<std::size_t>(j)], a});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SupportEntry& a, const SupportEntry& b) {
                     return std::abs(a.coefficient) > std::abs(b.coefficient);
                   });
  return out;
}

Eigen::VectorXd var_forecast(const SparseVarModel& model,
                             const Eigen::VectorXd& x_t) {
  if (x_t.size() != model.n_predictors())
    throw DataError("lag vector length " + std::to_string(x_t.size()) +
                    " does not match model (" +
                    std::to_string(model.n_predictors()) + ")");
  return model.coef * x_t + model.intercept;
}

Eigen::MatrixXd predict(const SparseVarModel& model,
                        const data::LagDesign& design) {
  if (design.cols() != model.n_predictors())
    throw DataError("design width does not match model");
  Eigen::MatrixXd raw = design.raw_X();
  Eigen::MatrixXd out = raw * model.coef.transpose();
  out.array().rowwise() += model.intercept.transpose().array();
  return out;
}

LambdaChoice select_lambda(const data::LagDesign& train,
                           const data::LagDesign& valid, int grid_size,
                           double ratio_min, const LassoOptions& opts) {
  if (grid_size < 2) throw ParamError("lambda grid needs at least 2 points");
  if (!(ratio_min > 0.0 && ratio_min < 1.0))
    throw ParamError("ratio_min must be in (0, 1)");
  double lmax = 0.0;
  for (Eigen::Index i = 0; i < train.y.cols(); ++i)
    lmax = std::max(lmax, lambda_max(train.X, train.y.col(i)));
  if (lmax <= 0.0) lmax = 1.0;

  // walk lambda downward with warm starts; score each grid point on the
  // validation rows in raw units
  const Eigen::Index n_targets = train.y.cols();
  std::vector<Eigen::VectorXd> warm(
      static_cast<std::size_t>(n_targets),
      Eigen::VectorXd::Zero(train.cols()));
  LambdaChoice choice;
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid_size; ++g) {
    double f = static_cast<double>(g) / (grid_size - 1);
    double lam = lmax * std::pow(ratio_min, f);
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n_targets; ++i) {
      LassoFit fit = lasso_fit(train.X, train.y.col(i), lam, opts,
                               &warm[static_cast<std::size_t>(i)]);
      warm[static_cast<std::size_t>(i)] = fit.coef;
      // standardized coefficients applied to the valid design, which shares
      // the train standardization
      Eigen::VectorXd yhat = valid.X * fit.coef;
      yhat.array() += fit.intercept;
      sse += (valid.y.col(i) - yhat).squaredNorm();
    }
    double mse = sse / static_cast<double>(valid.y.size());
    choice.grid.emplace_back(lam, mse);
    if (mse < best) {
      best = mse;
      choice.lambda = lam;
    }
  }
  return choice;
}

void save_json(const SparseVarModel& model, const std::string& path) {
  json j;
  j["format"] = "flowcast-var";
  j["version"] = 1;
  j["lambda"] = model.lambda;
  j["sensor_ids"] = model.sensor_ids;
  j["target_sensors"] = model.target_sensors;
  json cols = json::array();
  for (const auto& c : model.column_map)
    cols.push_back({{"sensor", c.sensor}, {"lag", c.lag}});
  j["column_map"] = cols;
  json coef = json::array();
  for (Eigen::Index i = 0; i < model.coef.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < model.coef.cols(); ++k)
      row.push_back(model.coef(i, k));
    coef.push_back(row);
  }
  j["coefficients"] = coef;
  j["intercept"] = std::vector<double>(model.intercept.begin(), model.intercept.end());
  j["residual_variance"] = std::vector<double>(model.residual_variance.begin(),
                                               model.residual_variance.end());
  j["fit_meta"] = {{"total_cycles", model.fit_meta.total_cycles},
                   {"max_kkt_gap", model.fit_meta.max_kkt_gap}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

SparseVarModel load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad model JSON in '" + path + "': " + e.what());
  }
  if (j.value("format", "") != "flowcast-var" || j.value("version", 0) != 1)
    throw DataError("'" + path + "' is not a flowcast-var v1 model");
  SparseVarModel m;
  m.lambda = j.at("lambda").get<double>();
  m.sensor_ids = j.at("sensor_ids").get<std::vector<std::string>>();
  m.target_sensors = j.at("target_sensors").get<std::vector<int>>();
  for (const auto& c : j.at("column_map"))
    m.column_map.push_back({c.at("sensor").get<int>(), c.at("lag").get<int>()});
  const auto& coef = j.at("coefficients");
  Eigen::Index rows = static_cast<Eigen::Index>(coef.size());
  Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(coef[0].size()) : 0;
  m.coef.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k)
      m.coef(i, k) = coef[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  auto ic = j.at("intercept").get<std::vector<double>>();
  m.intercept = Eigen::Map<Eigen::VectorXd>(ic.data(), static_cast<Eigen::Index>(ic.size()));
  auto rv = j.at("residual_variance").get<std::vector<double>>();
  m.residual_variance =
      Eigen::Map<Eigen::VectorXd>(rv.data(), static_cast<Eigen::Index>(rv.size()));
  m.fit_meta.total_cycles = j.at("fit_meta").value("total_cycles", 0);
  m.fit_meta.max_kkt_gap = j.at("fit_meta").value("max_kkt_gap", 0.0);
  m.support = m.coef.array() != 0.0;
  return m;
}

}  // namespace flowcast::var
