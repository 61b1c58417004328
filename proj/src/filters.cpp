#include "flowcast/filters.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/banded.hpp"

namespace flowcast::filters {

namespace {

void check_series(std::span<const double> series) {
  if (series.empty()) throw ParamError("series must be non-empty");
  for (double v : series)
    if (!std::isfinite(v)) throw ParamError("series must be finite");
}

double lower_median(std::vector<double>& window) {
  auto mid = window.begin() + (static_cast<long>(window.size()) - 1) / 2;
  std::nth_element(window.begin(), mid, window.end());
  return *mid;
}

}  // namespace

std::vector<double> ewma(std::span<const double> series, double alpha) {
  check_series(series);
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ParamError("ewma alpha must be in (0, 1]");
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t t = 1; t < series.size(); ++t)
    out[t] = alpha * series[t] + (1.0 - alpha) * out[t - 1];
  return out;
}

std::vector<double> median_filter(std::span<const double> series, int window) {
  check_series(series);
  if (window <= 0) throw ParamError("median window must be positive");
  const int T = static_cast<int>(series.size());
  std::vector<double> out(series.size());
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(window));
  const bool centered = (window % 2 == 1);
  const int radius = window / 2;
  for (int t = 0; t < T; ++t) {
    int lo, hi;  // inclusive
    if (centered) {
      lo = std::max(0, t - radius);
      hi = std::min(T - 1, t + radius);
    } else {
      lo = std::max(0, t - window + 1);
      hi = t;
    }
    buf.assign(series.begin() + lo, series.begin() + hi + 1);
    out[static_cast<std::size_t>(t)] = lower_median(buf);
  }
  return out;
}

double trend_filter_lambda_max(std::span<const double> series, int order) {
  check_series(series);
  if (order != 1 && order != 2) throw ParamError("difference order must be 1 or 2");
  const int T = static_cast<int>(series.size());
  const int m = T - order;
  if (m < 1) throw ParamError("series too short for difference order");
  std::vector<double> dy(static_cast<std::size_t>(m));
  linalg::apply_diff(series, order, dy);
  auto ddt = linalg::gram_ddt(T, order);
  ddt.factorize();
  ddt.solve(dy);
  double mx = 0.0;
  for (double v : dy) mx = std::max(mx, std::abs(v));
  return mx;
}

TrendFilterFit trend_filter(std::span<const double> series, double lambda,
                            int order, const TrendFilterOptions& opts) {
  check_series(series);
  if (order != 1 && order != 2) throw ParamError("difference order must be 1 or 2");
  if (lambda < 0.0) throw ParamError("lambda must be non-negative");
  const int T = static_cast<int>(series.size());
  const int m = T - order;
  if (m < 1) throw ParamError("series too short for difference order");

  TrendFilterFit fit;
  fit.input.assign(series.begin(), series.end());
  fit.order = order;
  fit.lambda = lambda;

  auto objective_of = [&](std::span<const double> f) {
    double quad = 0.0;
    for (int i = 0; i < T; ++i) {
      double d = series[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(i)];
      quad += d * d;
    }
    std::vector<double> df(static_cast<std::size_t>(m));
    linalg::apply_diff(f, order, df);
    double l1 = 0.0;
    for (double v : df) l1 += std::abs(v);
    return 0.5 * quad + lambda * l1;
  };

  if (lambda == 0.0) {
    fit.fitted = fit.input;
    fit.objective = 0.0;
    fit.dual.assign(static_cast<std::size_t>(m), 0.0);
    std::vector<double> z(static_cast<std::size_t>(m));
    linalg::apply_diff(fit.fitted, order, z);
    double zmax = 0.0;
    for (double v : z) zmax = std::max(zmax, std::abs(v));
    double tol = 1e-8 * zmax;
    for (int r = 0; r < m; ++r)
      if (std::abs(z[static_cast<std::size_t>(r)]) > tol) fit.kinks.push_back(r);
    return fit;
  }

  double rho = opts.rho > 0.0 ? opts.rho : std::max(lambda, 1.0);
  std::vector<double> f(fit.input), z(static_cast<std::size_t>(m)),
      u(static_cast<std::size_t>(m), 0.0), df(static_cast<std::size_t>(m)),
      z_prev, rhs(static_cast<std::size_t>(T)), dtv(static_cast<std::size_t>(T));
  linalg::apply_diff(f, order, z);

  auto factor = [&](double r) {
    auto A = linalg::gram_dtd(T, order, r, 1.0);
    A.factorize();
    return A;
  };
  auto system = factor(rho);

  const double sqrt_m = std::sqrt(static_cast<double>(m));
  const double sqrt_T = std::sqrt(static_cast<double>(T));
  // the returned solution is the best-objective iterate seen, which also
  // makes the recorded trace non-increasing
  std::vector<double> f_best = f;
  double best_objective = objective_of(f);
  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    // f-update: (I + rho D^T D) f = y + rho D^T (z - u)
    for (int r = 0; r < m; ++r)
      df[static_cast<std::size_t>(r)] =
          z[static_cast<std::size_t>(r)] - u[static_cast<std::size_t>(r)];
    linalg::apply_diff_transpose(df, order, dtv);
    for (int i = 0; i < T; ++i)
      rhs[static_cast<std::size_t>(i)] =
          series[static_cast<std::size_t>(i)] + rho * dtv[static_cast<std::size_t>(i)];
    system.solve(rhs);
    f = rhs;

    // z-update: soft threshold of Df + u at lambda / rho
    linalg::apply_diff(f, order, df);
    z_prev = z;
    const double thr = lambda / rho;
    for (int r = 0; r < m; ++r) {
      double v = df[static_cast<std::size_t>(r)] + u[static_cast<std::size_t>(r)];
      double mag = std::abs(v) - thr;
      z[static_cast<std::size_t>(r)] = mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
    }
    // scaled dual update
    double pri = 0.0;
    for (int r = 0; r < m; ++r) {
      double resid = df[static_cast<std::size_t>(r)] - z[static_cast<std::size_t>(r)];
      u[static_cast<std::size_t>(r)] += resid;
      pri += resid * resid;
    }
    pri = std::sqrt(pri);

    std::vector<double> dz(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r)
      dz[static_cast<std::size_t>(r)] =
          z[static_cast<std::size_t>(r)] - z_prev[static_cast<std::size_t>(r)];
    linalg::apply_diff_transpose(dz, order, dtv);
    double dual = 0.0;
    for (int i = 0; i < T; ++i) dual += dtv[static_cast<std::size_t>(i)] * dtv[static_cast<std::size_t>(i)];
    dual = rho * std::sqrt(dual);

    const double objective = objective_of(f);
    if (objective < best_objective) {
      best_objective = objective;
      f_best = f;
    }
    if (opts.keep_trace) fit.objective_trace.push_back(best_objective);

    double df_norm = 0.0, z_norm = 0.0;
    for (int r = 0; r < m; ++r) {
      df_norm += df[static_cast<std::size_t>(r)] * df[static_cast<std::size_t>(r)];
      z_norm += z[static_cast<std::size_t>(r)] * z[static_cast<std::size_t>(r)];
    }
    std::vector<double> dtu(static_cast<std::size_t>(T));
    linalg::apply_diff_transpose(u, order, dtu);
    double dtu_norm = 0.0;
    for (int i = 0; i < T; ++i) dtu_norm += dtu[static_cast<std::size_t>(i)] * dtu[static_cast<std::size_t>(i)];
    dtu_norm = rho * std::sqrt(dtu_norm);

    double eps_pri = sqrt_m * opts.abs_tol +
                     opts.rel_tol * std::max(std::sqrt(df_norm), std::sqrt(z_norm));
    double eps_dual = sqrt_T * opts.abs_tol + opts.rel_tol * dtu_norm;
    fit.primal_residual = pri;
    fit.dual_residual = dual;
    if (pri <= eps_pri && dual <= eps_dual) {
      converged = true;
      ++iter;
      break;
    }
    // residual balancing
    if (pri > 10.0 * dual) {
      rho *= 2.0;
      for (auto& v : u) v *= 0.5;
      system = factor(rho);
    } else if (dual > 10.0 * pri) {
      rho *= 0.5;
      for (auto& v : u) v *= 2.0;
      system = factor(rho);
    }
  }
  fit.iterations = iter;
  if (!converged)
    throw NumericError(
        "trend_filter did not converge in " + std::to_string(iter) +
        " iterations (primal residual " + format_double(fit.primal_residual) +
        ", dual residual " + format_double(fit.dual_residual) + ")");

  fit.fitted = f_best;
  fit.objective = best_objective;
  fit.dual.resize(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r)
    fit.dual[static_cast<std::size_t>(r)] = rho * u[static_cast<std::size_t>(r)];
  double zmax = 0.0;
  for (double v : z) zmax = std::max(zmax, std::abs(v));
  double tol = 1e-8 * zmax;
  for (int r = 0; r < m; ++r)
    if (std::abs(z[static_cast<std::size_t>(r)]) > tol) fit.kinks.push_back(r);
  return fit;
}

std::vector<int> kinks(const TrendFilterFit& fit, double tol) {
  if (!(tol > 0.0)) throw ParamError("kink tolerance must be positive");
  const int T = static_cast<int>(fit.fitted.size());
  const int m = T - fit.order;
  std::vector<double> df(static_cast<std::size_t>(m));
  linalg::apply_diff(fit.fitted, fit.order, df);
  std::vector<int> out;
  for (int r = 0; r < m; ++r)
    if (std::abs(df[static_cast<std::size_t>(r)]) > tol) out.push_back(r);
  return out;
}

FilterSpec FilterSpec::median(int window) {
  FilterSpec s;
  s.kind = Kind::Median;
  s.window = window;
  return s;
}

FilterSpec FilterSpec::trend(double lambda, int order) {
  FilterSpec s;
  s.kind = Kind::Trend;
  s.lambda = lambda;
  s.order = order;
  return s;
}

FilterSpec FilterSpec::exponential(double alpha) {
  FilterSpec s;
  s.kind = Kind::Ewma;
  s.alpha = alpha;
  return s;
}

std::string FilterSpec::label() const {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Median: return "M" + std::to_string(window);
    case Kind::Trend: return "TF" + format_double(lambda);
    case Kind::Ewma: return "EWMA" + format_double(alpha);
  }
  return "?";
}

data::SpeedField filter_field(const data::SpeedField& field,
                              const FilterSpec& spec) {
  if (field.any_missing())
    throw DataError("filter_field requires a field without missing cells");
  data::SpeedField out = field;
  if (spec.kind == FilterSpec::Kind::None) return out;
  auto spans = field.day_spans();
  for (int s = 0; s < field.n_sensors(); ++s) {
    for (auto [begin, end] : spans) {
      std::vector<double> series(static_cast<std::size_t>(end - begin));
      for (int t = begin; t < end; ++t)
        series[static_cast<std::size_t>(t - begin)] = field.speeds(s, t);
      std::vector<double> filtered;
      switch (spec.kind) {
        case FilterSpec::Kind::Median:
          filtered = median_filter(series, spec.window);
          break;
        case FilterSpec::Kind::Trend:
          filtered = trend_filter(series, spec.lambda, spec.order).fitted;
          break;
        case FilterSpec::Kind::Ewma:
          filtered = ewma(series, spec.alpha);
          break;
        case FilterSpec::Kind::None:
          filtered = series;
          break;
      }
      for (int t = begin; t < end; ++t)
        out.speeds(s, t) =
            std::max(0.0, filtered[static_cast<std::size_t>(t - begin)]);
    }
  }
  return out;
}

}  // namespace flowcast::filters
