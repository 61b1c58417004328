#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flowcast/cli.hpp"
#include "flowcast/datastore.hpp"
#include "flowcast/deepnet.hpp"
#include "flowcast/diagnostics.hpp"
#include "flowcast/evalharness.hpp"
#include "flowcast/filters.hpp"
#include "flowcast/hypersearch.hpp"
#include "flowcast/sparsevar.hpp"
#include "flowcast/synthgen.hpp"

namespace py = pybind11;
using namespace flowcast;

namespace {

// JSON string -> parsed pipeline run, metrics back as a dict.
py::dict eval_pipeline(const data::SpeedField& field, const std::string& spec_json,
                       std::uint64_t seed, int search_epochs) {
  auto j = nlohmann::json::parse(spec_json);
  eval::PipelineSpec spec = cli::parse_pipeline_spec(j, field);
  eval::RunOptions opts;
  opts.seed = seed;
  opts.search_epochs = search_epochs;
  eval::PipelineResult result = eval::run_pipeline(spec, field, opts);
  py::dict out;
  out["label"] = result.row.label;
  out["is_mse"] = result.row.is_mse;
  out["is_r2"] = result.row.is_r2;
  out["os_mse"] = result.row.os_mse;
  out["os_r2"] = result.row.os_r2;
  out["test_y"] = result.test_y;
  out["test_yhat"] = result.test_yhat;
  return out;
}

py::dict test_result_dict(const diag::TestResult& r) {
  py::dict d;
  d["name"] = r.name;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["parameters"] = r.parameters;
  d["null_hypothesis"] = r.null_hypothesis;
  return d;
}

}  // namespace

PYBIND11_MODULE(flowcast, m) {
  m.doc() = "Short-term corridor speed forecasting: filters, sparse VAR, "
            "deep nets, diagnostics";
  m.attr("__version__") = kVersion;

  py::register_exception<ParamError>(m, "ParamError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<data::SpeedField>(m, "SpeedField")
      .def_readonly("sensor_ids", &data::SpeedField::sensor_ids)
      .def_readonly("mileposts", &data::SpeedField::mileposts)
      .def_readonly("timestamps", &data::SpeedField::timestamps)
      .def_readonly("step_minutes", &data::SpeedField::step_minutes)
      .def_readonly("speeds", &data::SpeedField::speeds)
      .def_readonly("day_labels", &data::SpeedField::day_labels)
      .def_property_readonly("missing",
                             [](const data::SpeedField& f) {
                               return Eigen::MatrixXd(f.missing.cast<double>());
                             })
      .def("n_sensors", &data::SpeedField::n_sensors)
      .def("n_times", &data::SpeedField::n_times)
      .def("n_days", &data::SpeedField::n_days)
      .def("weekend_days", &data::SpeedField::weekend_days);

  py::class_<data::LagDesign>(m, "LagDesign")
      .def_readonly("X", &data::LagDesign::X)
      .def_readonly("y", &data::LagDesign::y)
      .def_readonly("lag_count", &data::LagDesign::lag_count)
      .def_readonly("horizon", &data::LagDesign::horizon)
      .def_property_readonly("column_map",
                             [](const data::LagDesign& d) {
                               std::vector<std::pair<int, int>> out;
                               for (const auto& c : d.column_map)
                                 out.emplace_back(c.sensor, c.lag);
                               return out;
                             })
      .def("rows", &data::LagDesign::rows)
      .def("cols", &data::LagDesign::cols);

  m.def("load_speed_csv",
        [](const std::string& path, const std::string& metadata) {
          return data::load_speed_csv(path, {}, metadata);
        },
        py::arg("path"), py::arg("metadata") = "");
  m.def("export_speed_csv", &data::export_speed_csv, py::arg("field"),
        py::arg("path"));
  m.def("export_wide_csv", &data::export_wide_csv, py::arg("field"),
        py::arg("path"));
  m.def("impute_spatial",
        [](const data::SpeedField& f) {
          auto r = data::impute_spatial(f);
          return py::make_tuple(r.field, r.remaining_missing);
        },
        py::arg("field"));
  m.def("drop_bad_days", &data::drop_bad_days, py::arg("field"),
        py::arg("max_missing_frac"), py::arg("exclude_days") = std::vector<int>{});
  m.def("build_lag_design", &data::build_lag_design, py::arg("field"),
        py::arg("lags"), py::arg("horizon"), py::arg("targets"),
        py::arg("standardize") = true);
  m.def("split_train_test",
        [](const data::LagDesign& d, const std::vector<int>& train_days) {
          data::SplitPolicy policy;
          if (train_days.empty()) {
            policy.kind = data::SplitPolicy::Kind::FirstHalfDays;
          } else {
            policy.kind = data::SplitPolicy::Kind::DayList;
            policy.train_days = train_days;
          }
          return data::split_train_test(d, policy);
        },
        py::arg("design"), py::arg("train_days") = std::vector<int>{});

  m.def("ewma",
        [](const std::vector<double>& s, double a) { return filters::ewma(s, a); },
        py::arg("series"), py::arg("alpha"));
  m.def("median_filter",
        [](const std::vector<double>& s, int w) {
          return filters::median_filter(s, w);
        },
        py::arg("series"), py::arg("window"));

  py::class_<filters::TrendFilterFit>(m, "TrendFilterFit")
      .def_readonly("fitted", &filters::TrendFilterFit::fitted)
      .def_readonly("order", &filters::TrendFilterFit::order)
      .def_readonly("lambda_", &filters::TrendFilterFit::lambda)
      .def_readonly("objective", &filters::TrendFilterFit::objective)
      .def_readonly("iterations", &filters::TrendFilterFit::iterations)
      .def_readonly("kinks", &filters::TrendFilterFit::kinks);
  m.def("trend_filter",
        [](const std::vector<double>& s, double lam, int order) {
          return filters::trend_filter(s, lam, order);
        },
        py::arg("series"), py::arg("lambda_"), py::arg("order") = 2);
  m.def("trend_filter_lambda_max",
        [](const std::vector<double>& s, int order) {
          return filters::trend_filter_lambda_max(s, order);
        },
        py::arg("series"), py::arg("order") = 2);
  m.def("kinks", &filters::kinks, py::arg("fit"), py::arg("tol"));

  m.def("filter_field",
        [](const data::SpeedField& f, const std::string& kind, int window,
           double lam, int order, double alpha) {
          filters::FilterSpec spec;
          if (kind == "none") spec = filters::FilterSpec::none();
          else if (kind == "median") spec = filters::FilterSpec::median(window);
          else if (kind == "tf") spec = filters::FilterSpec::trend(lam, order);
          else if (kind == "ewma") spec = filters::FilterSpec::exponential(alpha);
          else throw ParamError("unknown filter kind '" + kind + "'");
          return filters::filter_field(f, spec);
        },
        py::arg("field"), py::arg("kind"), py::arg("window") = 8,
        py::arg("lambda_") = 15.0, py::arg("order") = 2, py::arg("alpha") = 0.3);

  m.def("lambda_max", &var::lambda_max, py::arg("X"), py::arg("y"));
  m.def("lasso_fit",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lam) {
          auto fit = var::lasso_fit(X, y, lam);
          return py::make_tuple(fit.coef, fit.intercept);
        },
        py::arg("X"), py::arg("y"), py::arg("lambda_"));

  py::class_<var::SparseVarModel>(m, "SparseVarModel")
      .def_readonly("coef", &var::SparseVarModel::coef)
      .def_readonly("intercept", &var::SparseVarModel::intercept)
      .def_readonly("lambda_", &var::SparseVarModel::lambda)
      .def_readonly("residual_variance", &var::SparseVarModel::residual_variance)
      .def("support",
           [](const var::SparseVarModel& m_, int target, double threshold) {
             std::vector<std::tuple<int, int, double>> out;
             for (const auto& e : var::support(m_, target, threshold))
               out.emplace_back(e.predictor.sensor, e.predictor.lag,
                                e.coefficient);
             return out;
           },
           py::arg("target"), py::arg("threshold") = 0.0);
  m.def("fit_sparse_var",
        [](const data::LagDesign& d, double lam) {
          return var::fit_sparse_var(d, lam);
        },
        py::arg("design"), py::arg("lambda_"));
  m.def("var_forecast", &var::var_forecast, py::arg("model"), py::arg("x_t"));
  m.def("var_predict",
        [](const var::SparseVarModel& m_, const data::LagDesign& d) {
          return var::predict(m_, d);
        },
        py::arg("model"), py::arg("design"));
  m.def("save_var_json", &var::save_json, py::arg("model"), py::arg("path"));
  m.def("load_var_json", &var::load_json, py::arg("path"));

  py::class_<nn::NetConfig>(m, "NetConfig")
      .def(py::init([](int input_dim, std::vector<int> hidden,
                       const std::string& activation, int output_dim,
                       const std::string& penalty, double penalty_weight,
                       double dropout, double lr, double decay, int batch,
                       int epochs, std::uint64_t seed) {
             nn::NetConfig c;
             c.input_dim = input_dim;
             c.hidden_widths = std::move(hidden);
             c.activation = nn::activation_from_string(activation);
             c.output_dim = output_dim;
             c.penalty_kind = penalty == "none"
                                  ? nn::Penalty::None
                                  : (penalty == "l1" ? nn::Penalty::L1
                                                     : nn::Penalty::L2);
             c.penalty_weight = penalty_weight;
             c.dropout_p = dropout;
             c.learning_rate = lr;
             c.lr_decay = decay;
             c.batch_size = batch;
             c.epochs = epochs;
             c.seed = seed;
             return c;
           }),
           py::arg("input_dim"), py::arg("hidden") = std::vector<int>{},
           py::arg("activation") = "tanh", py::arg("output_dim") = 1,
           py::arg("penalty") = "none", py::arg("penalty_weight") = 0.0,
           py::arg("dropout") = 0.0, py::arg("lr") = 0.01,
           py::arg("decay") = 1e-4, py::arg("batch") = 32,
           py::arg("epochs") = 100, py::arg("seed") = 0);

  py::class_<nn::DeepNet>(m, "DeepNet")
      .def_readonly("weights", &nn::DeepNet::weights)
      .def_readonly("biases", &nn::DeepNet::biases)
      .def_readonly("train_trace", &nn::DeepNet::train_trace)
      .def_readonly("valid_trace", &nn::DeepNet::valid_trace)
      .def("parameter_count", &nn::DeepNet::parameter_count);
  m.def("init_network", &nn::init_network, py::arg("config"));
  m.def("sgd_train", &nn::sgd_train, py::arg("net"), py::arg("train"),
        py::arg("valid"));
  m.def("net_predict",
        [](const nn::DeepNet& net, const Eigen::MatrixXd& X) {
          return nn::predict(net, X);
        },
        py::arg("net"), py::arg("X"));
  m.def("dropout_ridge_penalty", &nn::dropout_ridge_penalty, py::arg("X"),
        py::arg("w"), py::arg("p"));
  m.def("save_net_json", &nn::save_json, py::arg("net"), py::arg("path"));
  m.def("load_net_json", &nn::load_json, py::arg("path"));

  m.def("acf",
        [](const std::vector<double>& s, int max_lag) {
          return diag::acf(s, max_lag);
        },
        py::arg("series"), py::arg("max_lag"));
  m.def("ljung_box",
        [](const std::vector<double>& resid, int lags) {
          return test_result_dict(
              diag::box_pierce(resid, lags, diag::PortmanteauVariant::LjungBox));
        },
        py::arg("resid"), py::arg("lags") = 24);
  m.def("box_pierce",
        [](const std::vector<double>& resid, int lags) {
          return test_result_dict(diag::box_pierce(
              resid, lags, diag::PortmanteauVariant::BoxPierce));
        },
        py::arg("resid"), py::arg("lags") = 24);
  m.def("adf",
        [](const std::vector<double>& series, int lags, bool trend) {
          return test_result_dict(
              diag::adf(series, lags,
                        trend ? diag::AdfSpec::ConstantTrend
                              : diag::AdfSpec::Constant));
        },
        py::arg("series"), py::arg("lags") = 4, py::arg("trend") = false);
  m.def("ks_normality",
        [](const std::vector<double>& resid) {
          return test_result_dict(diag::ks_normality(resid));
        },
        py::arg("resid"));
  m.def("diagnostics_report",
        [](const std::vector<double>& y, const std::vector<double>& yhat,
           const Eigen::MatrixXd& regressors, std::uint64_t seed) {
          diag::ReportOptions opts;
          opts.seed = seed;
          return diag::to_json_string(
              diag::diagnostics_report(y, yhat, regressors, opts));
        },
        py::arg("y"), py::arg("yhat"),
        py::arg("regressors") = Eigen::MatrixXd(0, 0), py::arg("seed") = 1);

  m.def("mse",
        [](const std::vector<double>& y, const std::vector<double>& yhat) {
          return eval::mse(y, yhat);
        },
        py::arg("y"), py::arg("yhat"));
  m.def("r2",
        [](const std::vector<double>& y, const std::vector<double>& yhat) {
          return eval::r2(y, yhat);
        },
        py::arg("y"), py::arg("yhat"));
  m.def("naive_forecast", &eval::naive_forecast, py::arg("field"), py::arg("h"));

  m.def("gen_dataset",
        [](int days, int sensors, double normal, double event, double weather,
           std::uint64_t seed, double noise_sd) {
          synth::CorridorParams params;
          params.n_sensors = sensors;
          params.noise_sd = noise_sd;
          synth::DayMix mix{normal, event, weather};
          return synth::gen_dataset(params, days, mix, seed);
        },
        py::arg("days"), py::arg("sensors") = 21, py::arg("normal") = 0.8,
        py::arg("event") = 0.1, py::arg("weather") = 0.1, py::arg("seed") = 0,
        py::arg("noise_sd") = 4.0);

  m.def("eval_pipeline", &eval_pipeline, py::arg("field"), py::arg("spec_json"),
        py::arg("seed") = 0, py::arg("search_epochs") = 50);
}
