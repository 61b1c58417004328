#include "flowcast/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "flowcast/diagnostics.hpp"
#include "flowcast/synthgen.hpp"

namespace flowcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw DataError("bad JSON in '" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path + "'");
}

json make_manifest(const std::string& subcommand, const json& config,
                   const std::vector<std::string>& inputs,
                   const std::vector<std::string>& outputs, double wall_s) {
  json m;
  m["subcommand"] = subcommand;
  m["config"] = config;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["seed"] = config.value("seed", 0ULL);
  m["version"] = kVersion;
  m["wall_time_s"] = wall_s;
  return m;
}

void write_manifest(const json& manifest, const std::string& path) {
  write_text(path, manifest.dump(2) + "\n");
}

int resolve_sensor(const json& v, const data::SpeedField& field) {
  if (v.is_number_integer()) {
    int idx = v.get<int>();
    if (idx < 0 || idx >= field.n_sensors())
      throw DataError("target sensor index out of range");
    return idx;
  }
  std::string id = v.get<std::string>();
  for (int i = 0; i < field.n_sensors(); ++i)
    if (field.sensor_ids[static_cast<std::size_t>(i)] == id) return i;
  throw DataError("unknown sensor id '" + id + "'");
}

filters::FilterSpec parse_filter(const json& j) {
  if (j.is_null()) return filters::FilterSpec::none();
  std::string kind = j.value("kind", "none");
  if (kind == "none") return filters::FilterSpec::none();
  if (kind == "median")
    return filters::FilterSpec::median(j.value("window", 8));
  if (kind == "tf" || kind == "trend")
    return filters::FilterSpec::trend(j.value("lambda", 15.0),
                                      j.value("order", 2));
  if (kind == "ewma")
    return filters::FilterSpec::exponential(j.value("alpha", 0.3));
  throw ParamError("unknown filter kind '" + kind + "'");
}

nn::NetConfig parse_net(const json& j) {
  nn::NetConfig cfg;
  cfg.hidden_widths = j.value("hidden", std::vector<int>{32, 16});
  cfg.activation = nn::activation_from_string(j.value("activation", "tanh"));
  std::string pk = j.value("penalty", "l2");
  cfg.penalty_kind = pk == "none" ? nn::Penalty::None
                                  : (pk == "l1" ? nn::Penalty::L1 : nn::Penalty::L2);
  cfg.penalty_weight = j.value("penalty_weight", 1e-3);
  cfg.dropout_p = j.value("dropout", 0.0);
  cfg.learning_rate = j.value("lr", 0.01);
  cfg.lr_decay = j.value("decay", 1e-4);
  cfg.batch_size = j.value("batch", 32);
  cfg.epochs = j.value("epochs", 100);
  cfg.seed = j.value("seed", 0ULL);
  return cfg;
}

synth::CorridorParams parse_corridor(const json& j, int sensors) {
  synth::CorridorParams p;
  p.n_sensors = sensors;
  if (j.is_object()) {
    p.free_flow_speed = j.value("free_flow_speed", p.free_flow_speed);
    p.congested_speed = j.value("congested_speed", p.congested_speed);
    p.bottleneck_sensor = j.value("bottleneck_sensor", p.bottleneck_sensor);
    p.breakdown_step_mean = j.value("breakdown_step_mean", p.breakdown_step_mean);
    p.recovery_step_mean = j.value("recovery_step_mean", p.recovery_step_mean);
    p.step_jitter_sd = j.value("step_jitter_sd", p.step_jitter_sd);
    p.wave_speed = j.value("wave_speed", p.wave_speed);
    p.transition_steps = j.value("transition_steps", p.transition_steps);
    p.noise_sd = j.value("noise_sd", p.noise_sd);
    p.event_prob = j.value("event_prob", p.event_prob);
    p.event_magnitude = j.value("event_magnitude", p.event_magnitude);
    p.event_start_step_mean = j.value("event_start_step_mean", p.event_start_step_mean);
    p.event_duration_steps = j.value("event_duration_steps", p.event_duration_steps);
    p.weather_factor = j.value("weather_factor", p.weather_factor);
  }
  return p;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace

search::SearchSpace parse_search_space(const json& j) {
  search::SearchSpace space;
  if (j.contains("activations")) {
    space.activations.clear();
    for (const auto& a : j.at("activations"))
      space.activations.push_back(
          nn::activation_from_string(a.get<std::string>()));
  }
  if (j.contains("depth")) {
    space.depth_min = j.at("depth").at(0).get<int>();
    space.depth_max = j.at("depth").at(1).get<int>();
  }
  if (j.contains("width")) {
    space.width_min = j.at("width").at(0).get<int>();
    space.width_max = j.at("width").at(1).get<int>();
  }
  if (j.contains("lambda")) {
    space.lambda_min = j.at("lambda").at(0).get<double>();
    space.lambda_max = j.at("lambda").at(1).get<double>();
  }
  space.budget = j.value("budget", 50);
  space.validate();
  return space;
}

eval::PipelineSpec parse_pipeline_spec(const json& j,
                                       const data::SpeedField& field) {
  eval::PipelineSpec spec;
  spec.label = j.value("label", "spec");
  spec.filter = parse_filter(j.contains("filter") ? j.at("filter") : json());
  if (j.contains("selector") && !j.at("selector").is_null()) {
    std::string kind = j.at("selector").value("kind", "none");
    if (kind == "lasso") {
      spec.selector.kind = eval::PipelineSpec::Selector::Kind::Lasso;
      spec.selector.lambda = j.at("selector").value("lambda", -1.0);
    } else if (kind != "none") {
      throw ParamError("unknown selector kind '" + kind + "'");
    }
  }
  const json& m = j.at("model");
  std::string kind = m.value("kind", "naive");
  if (kind == "naive") {
    spec.model.kind = eval::PipelineSpec::Model::Kind::Naive;
  } else if (kind == "var") {
    spec.model.kind = eval::PipelineSpec::Model::Kind::Var;
    spec.model.var_lambda = m.value("lambda", -1.0);
  } else if (kind == "dl") {
    spec.model.kind = eval::PipelineSpec::Model::Kind::Dl;
    spec.model.net = parse_net(m);
  } else if (kind == "dl_search") {
    spec.model.kind = eval::PipelineSpec::Model::Kind::DlSearch;
    spec.model.net = parse_net(m);
    spec.model.space = parse_search_space(
        m.contains("space") ? m.at("space") : json::object());
  } else {
    throw ParamError("unknown model kind '" + kind + "'");
  }
  spec.horizon = j.value("horizon", 8);
  spec.lags = j.value("lags", 6);
  spec.target_sensor =
      j.contains("target") ? resolve_sensor(j.at("target"), field) : 0;
  return spec;
}

json run_synth(const json& cfg) {
  Stopwatch watch;
  const int days = cfg.value("days", 180);
  const int sensors = cfg.value("sensors", 21);
  synth::DayMix mix;
  if (cfg.contains("mix")) {
    mix.normal = cfg.at("mix").value("normal", 0.8);
    mix.event = cfg.at("mix").value("event", 0.1);
    mix.weather = cfg.at("mix").value("weather", 0.1);
  }
  auto params = parse_corridor(cfg.contains("corridor") ? cfg.at("corridor")
                                                        : json(),
                               sensors);
  const auto seed = cfg.value("seed", 0ULL);
  const std::string out = cfg.value("out", "speeds.csv");
  data::SpeedField field = synth::gen_dataset(params, days, mix, seed);
  if (fs::path(out).has_parent_path())
    fs::create_directories(fs::path(out).parent_path());
  data::export_speed_csv(field, out);
  json manifest = make_manifest("synth", cfg, {}, {out}, watch.seconds());
  write_manifest(manifest, out + ".manifest.json");
  return manifest;
}

json run_filter(const json& cfg) {
  Stopwatch watch;
  const std::string in = cfg.at("in").get<std::string>();
  const std::string out = cfg.at("out").get<std::string>();
  data::SpeedField field = data::load_speed_csv(in);
  if (field.any_missing()) {
    auto imputed = data::impute_spatial(field);
    if (imputed.remaining_missing > 0)
      throw DataError("field still has " +
                      std::to_string(imputed.remaining_missing) +
                      " missing cells after spatial imputation; drop bad days "
                      "first");
    field = std::move(imputed.field);
  }
  filters::FilterSpec spec = parse_filter(cfg);
  if (cfg.contains("method")) {
    json jf;
    jf["kind"] = cfg.at("method");
    if (cfg.contains("window")) jf["window"] = cfg.at("window");
    if (cfg.contains("lambda")) jf["lambda"] = cfg.at("lambda");
    if (cfg.contains("order")) jf["order"] = cfg.at("order");
    if (cfg.contains("alpha")) jf["alpha"] = cfg.at("alpha");
    spec = parse_filter(jf);
  }
  data::SpeedField filtered = filters::filter_field(field, spec);
  if (fs::path(out).has_parent_path())
    fs::create_directories(fs::path(out).parent_path());
  if (cfg.value("format", "long") == "wide")
    data::export_wide_csv(filtered, out);
  else
    data::export_speed_csv(filtered, out);
  json manifest = make_manifest("filter", cfg, {in}, {out}, watch.seconds());
  write_manifest(manifest, out + ".manifest.json");
  return manifest;
}

namespace {

// Shared data -> design plumbing for fit-var / fit-dl / search.
struct DesignBundle {
  data::SpeedField field;
  data::LagDesign fit;
  data::LagDesign valid;
  data::LagDesign all;
  int target = 0;
};

DesignBundle prepare_designs(const json& cfg) {
  DesignBundle b;
  b.field = data::load_speed_csv(cfg.at("data").get<std::string>());
  if (b.field.any_missing()) {
    auto imputed = data::impute_spatial(b.field);
    b.field = std::move(imputed.field);
    b.field = data::drop_bad_days(b.field, cfg.value("max_missing_frac", 0.0));
  }
  b.target = cfg.contains("target") ? resolve_sensor(cfg.at("target"), b.field)
                                    : 0;
  const int lags = cfg.value("lags", 12);
  const int horizon = cfg.value("horizon", 8);
  b.all = data::build_lag_design(b.field, lags, horizon, {b.target}, true);
  auto days = b.all.distinct_days();
  if (days.size() < 2) {
    b.fit = b.all;
    b.valid = b.all;
    return b;
  }
  double valid_frac = cfg.value("valid_frac", 0.25);
  std::size_t n_valid = std::clamp<std::size_t>(
      static_cast<std::size_t>(
          std::ceil(valid_frac * static_cast<double>(days.size()))),
      1, days.size() - 1);
  data::SplitPolicy policy;
  policy.kind = data::SplitPolicy::Kind::DayList;
  policy.train_days.assign(days.begin(),
                           days.end() - static_cast<long>(n_valid));
  auto [fit, valid] = data::split_train_test(b.all, policy);
  b.fit = std::move(fit);
  b.valid = std::move(valid);
  return b;
}

}  // namespace

json run_fit_var(const json& cfg) {
  Stopwatch watch;
  DesignBundle b = prepare_designs(cfg);
  double lambda = cfg.value("lambda", -1.0);
  json grid = json::array();
  if (lambda < 0.0) {
    auto choice = var::select_lambda(b.fit, b.valid, cfg.value("lambda_grid", 10));
    lambda = choice.lambda;
    for (auto [lam, m] : choice.grid) grid.push_back({{"lambda", lam}, {"mse", m}});
  }
  var::SparseVarModel model = var::fit_sparse_var(b.all, lambda);
  const std::string out = cfg.value("out", "var_model.json");
  if (fs::path(out).has_parent_path())
    fs::create_directories(fs::path(out).parent_path());
  var::save_json(model, out);
  json manifest = make_manifest("fit-var", cfg,
                                {cfg.at("data").get<std::string>()}, {out},
                                watch.seconds());
  if (!grid.empty()) manifest["lambda_grid"] = grid;
  manifest["lambda"] = lambda;
  write_manifest(manifest, out + ".manifest.json");
  return manifest;
}

json run_fit_dl(const json& cfg) {
  Stopwatch watch;
  DesignBundle b = prepare_designs(cfg);
  nn::NetConfig net_cfg = parse_net(cfg);
  net_cfg.input_dim = static_cast<int>(b.fit.cols());
  net_cfg.output_dim = 1;
  nn::DeepNet net = nn::sgd_train(nn::init_network(net_cfg), b.fit, b.valid);
  const std::string out = cfg.value("out", "dl_model.json");
  if (fs::path(out).has_parent_path())
    fs::create_directories(fs::path(out).parent_path());
  nn::save_json(net, out);
  json manifest = make_manifest("fit-dl", cfg,
                                {cfg.at("data").get<std::string>()}, {out},
                                watch.seconds());
  manifest["final_valid_mse"] =
      net.valid_trace.empty() ? 0.0
                              : *std::min_element(net.valid_trace.begin(),
                                                  net.valid_trace.end());
  write_manifest(manifest, out + ".manifest.json");
  return manifest;
}

json run_search(const json& cfg) {
  Stopwatch watch;
  DesignBundle b = prepare_designs(cfg);
  search::SearchSpace space = parse_search_space(
      cfg.contains("space") ? cfg.at("space") : json::object());
  if (cfg.contains("budget")) space.budget = cfg.at("budget").get<int>();
  nn::NetConfig base = parse_net(cfg);
  base.input_dim = static_cast<int>(b.fit.cols());
  base.output_dim = 1;
  search::SearchOptions opts;
  opts.workers = cfg.value("workers", 0);
  opts.epochs_per_candidate = cfg.value("search_epochs", 50);
  opts.final_epochs = base.epochs;
  opts.seed = cfg.value("seed", 0ULL);
  search::SearchResult result =
      search::random_search(b.fit, b.valid, space, base, opts);
  const std::string out_csv = cfg.value("out", "leaderboard.csv");
  const std::string out_model = cfg.value("out_model", "search_model.json");
  for (const auto& p : {out_csv, out_model})
    if (fs::path(p).has_parent_path())
      fs::create_directories(fs::path(p).parent_path());
  search::save_leaderboard_csv(result.leaderboard, out_csv);
  nn::save_json(result.best, out_model);
  json manifest = make_manifest("search", cfg,
                                {cfg.at("data").get<std::string>()},
                                {out_model, out_csv}, watch.seconds());
  manifest["best_index"] = result.best_index;
  write_manifest(manifest, out_model + ".manifest.json");
  return manifest;
}

json run_eval(const json& cfg) {
  Stopwatch watch;
  const std::string data_path = cfg.at("data").get<std::string>();
  const std::string out_dir = cfg.value("out", "report");
  data::SpeedField field = data::load_speed_csv(data_path);
  if (field.any_missing()) {
    auto imputed = data::impute_spatial(field);
    field = std::move(imputed.field);
    field = data::drop_bad_days(field, cfg.value("max_missing_frac", 0.0));
  }
  json specs_json = cfg.at("specs");
  if (specs_json.is_string())
    specs_json = load_json_file(specs_json.get<std::string>());
  if (!specs_json.is_array() || specs_json.empty())
    throw DataError("specs must be a non-empty array");

  eval::RunOptions opts;
  opts.seed = cfg.value("seed", 0ULL);
  opts.valid_frac = cfg.value("valid_frac", 0.25);
  opts.lambda_grid = cfg.value("lambda_grid", 10);
  opts.search_workers = cfg.value("workers", 0);
  opts.search_epochs = cfg.value("search_epochs", 50);
  if (cfg.contains("split") && cfg.at("split").is_array()) {
    opts.split.kind = data::SplitPolicy::Kind::DayList;
    opts.split.train_days = cfg.at("split").get<std::vector<int>>();
  }

  fs::create_directories(out_dir);
  std::vector<eval::EvalRow> rows;
  std::vector<std::string> outputs;
  diag::ReportOptions diag_opts;
  diag_opts.seed = Rng::derive_seed(opts.seed, "diagnose");

  for (const auto& sj : specs_json) {
    eval::PipelineSpec spec = parse_pipeline_spec(sj, field);
    try {
      eval::PipelineResult result = eval::run_pipeline(spec, field, opts);
      rows.push_back(result.row);
      // predictions
      std::string pred_path = out_dir + "/predictions_" + spec.label + ".csv";
      {
        std::ostringstream text;
        text << "timestamp,y,yhat\n";
        for (std::size_t i = 0; i < result.test_y.size(); ++i)
          text << data::format_iso8601(result.test_times[i]) << ','
               << format_double(result.test_y[i]) << ','
               << format_double(result.test_yhat[i]) << '\n';
        write_text(pred_path, text.str());
      }
      outputs.push_back(pred_path);
      // heatmap grid
      std::string heat_path = out_dir + "/heatmap_" + spec.label + ".csv";
      eval::export_heatmap(field, result.test_yhat, result.test_times,
                           spec.target_sensor, heat_path);
      outputs.push_back(heat_path);
      // residual diagnostics on the out-of-sample rows
      std::string diag_path = out_dir + "/diagnostics_" + spec.label + ".json";
      diag::DiagnosticsReport report = diag::diagnostics_report(
          result.test_y, result.test_yhat, result.test_regressors, diag_opts);
      write_text(diag_path, diag::to_json_string(report) + "\n");
      outputs.push_back(diag_path);
    } catch (const Error& e) {
      eval::EvalRow row;
      row.label = spec.label;
      row.failed = true;
      row.error = e.what();
      rows.push_back(row);
      std::cerr << "spec '" << spec.label << "' failed: " << e.what() << "\n";
    }
  }
  std::string table_path = out_dir + "/table.csv";
  write_text(table_path, eval::format_table(rows));
  outputs.insert(outputs.begin(), table_path);
  json manifest =
      make_manifest("eval", cfg, {data_path}, outputs, watch.seconds());
  write_manifest(manifest, out_dir + "/manifest.json");
  return manifest;
}

json run_diagnose(const json& cfg) {
  Stopwatch watch;
  const std::string data_path = cfg.at("data").get<std::string>();
  std::ifstream in(data_path);
  if (!in) throw DataError("cannot open '" + data_path + "'");
  std::string line;
  std::vector<double> y, yhat;
  // accept either a headerless two-column file or any header that names
  // columns `y` and `yhat` (extra columns such as timestamps are ignored)
  int col_y = 0, col_yhat = 1;
  bool first = true;
  std::size_t row_no = 0;
  auto split = [](const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  auto parse_number = [&](const std::string& cell) {
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
      throw DataError("row " + std::to_string(row_no) + ": bad number '" +
                      cell + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (first) {
      first = false;
      int hy = -1, hyhat = -1;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "y") hy = static_cast<int>(i);
        if (cells[i] == "yhat") hyhat = static_cast<int>(i);
      }
      if (hy >= 0 && hyhat >= 0) {
        col_y = hy;
        col_yhat = hyhat;
        continue;
      }
      char* end = nullptr;
      std::strtod(cells[0].c_str(), &end);
      if (end == cells[0].c_str() || *end != '\0')
        throw DataError("header must name columns 'y' and 'yhat'");
    }
    if (static_cast<int>(cells.size()) <= std::max(col_y, col_yhat))
      throw DataError("row " + std::to_string(row_no) + ": too few columns");
    y.push_back(parse_number(cells[static_cast<std::size_t>(col_y)]));
    yhat.push_back(parse_number(cells[static_cast<std::size_t>(col_yhat)]));
  }
  if (y.empty()) throw DataError("no rows in '" + data_path + "'");

  Eigen::MatrixXd regressors(static_cast<Eigen::Index>(y.size()), 0);
  if (cfg.contains("regressors")) {
    const std::string rpath = cfg.at("regressors").get<std::string>();
    std::ifstream rin(rpath);
    if (!rin) throw DataError("cannot open '" + rpath + "'");
    std::vector<std::vector<double>> rows_vals;
    std::string rline;
    bool rfirst = true;
    while (std::getline(rin, rline)) {
      if (rline.empty()) continue;
      std::istringstream ss(rline);
      std::string cell;
      std::vector<double> vals;
      bool numeric = true;
      while (std::getline(ss, cell, ',')) {
        char* end = nullptr;
        double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') { numeric = false; break; }
        vals.push_back(v);
      }
      if (!numeric) {
        if (rfirst) { rfirst = false; continue; }  // header
        throw DataError("non-numeric cell in '" + rpath + "'");
      }
      rfirst = false;
      rows_vals.push_back(std::move(vals));
    }
    if (rows_vals.size() != y.size())
      throw DataError("regressor rows do not match the y/yhat rows");
    if (!rows_vals.empty()) {
      regressors.resize(static_cast<Eigen::Index>(rows_vals.size()),
                        static_cast<Eigen::Index>(rows_vals[0].size()));
      for (std::size_t i = 0; i < rows_vals.size(); ++i) {
        if (rows_vals[i].size() != rows_vals[0].size())
          throw DataError("ragged regressor CSV");
        for (std::size_t j = 0; j < rows_vals[i].size(); ++j)
          regressors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              rows_vals[i][j];
      }
    }
  }

  diag::ReportOptions opts;
  opts.portmanteau_lags = cfg.value("portmanteau_lags", 24);
  opts.bg_order = cfg.value("bg_order", 4);
  opts.lwg_units = cfg.value("lwg_units", 10);
  opts.adf_lags = cfg.value("adf_lags", 4);
  opts.seed = cfg.value("seed", 1ULL);
  if (cfg.value("adf_spec", "constant") == "constant+trend")
    opts.adf_spec = diag::AdfSpec::ConstantTrend;
  if (cfg.value("bg_form", "f") == "lm") opts.bg_form = diag::BgForm::LM;

  diag::DiagnosticsReport report =
      diag::diagnostics_report(y, yhat, regressors, opts);
  const std::string out = cfg.value("out", "diagnostics.json");
  if (fs::path(out).has_parent_path())
    fs::create_directories(fs::path(out).parent_path());
  write_text(out, diag::to_json_string(report) + "\n");
  std::cout << diag::format_table(report);
  std::vector<std::string> inputs{data_path};
  if (cfg.contains("regressors"))
    inputs.push_back(cfg.at("regressors").get<std::string>());
  json manifest = make_manifest("diagnose", cfg, inputs, {out}, watch.seconds());
  write_manifest(manifest, out + ".manifest.json");
  return manifest;
}

json dispatch(const std::string& subcommand, const json& config) {
  if (subcommand == "synth") return run_synth(config);
  if (subcommand == "filter") return run_filter(config);
  if (subcommand == "fit-var") return run_fit_var(config);
  if (subcommand == "fit-dl") return run_fit_dl(config);
  if (subcommand == "search") return run_search(config);
  if (subcommand == "eval") return run_eval(config);
  if (subcommand == "diagnose") return run_diagnose(config);
  throw ParamError("unknown subcommand '" + subcommand + "'");
}

json rerun_manifest(const std::string& manifest_path) {
  json manifest = load_json_file(manifest_path);
  if (!manifest.contains("subcommand") || !manifest.contains("config"))
    throw DataError("'" + manifest_path + "' is not a run manifest");
  return dispatch(manifest.at("subcommand").get<std::string>(),
                  manifest.at("config"));
}

namespace {

// Overlay: flags beat config file beats defaults. `flag_set` reports which
// keys were given on the command line.
json resolve_config(const json& defaults, const std::string& config_path,
                    const json& flags) {
  json resolved = defaults;
  if (!config_path.empty()) {
    json file = load_json_file(config_path);
    resolved.update(file);
  }
  resolved.update(flags);
  return resolved;
}

}  // namespace

int main_entry(int argc, const char* const* argv) {
  CLI::App app{"flowcast: corridor speed forecasting pipeline"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(kVersion));

  // collected per subcommand: explicit flags land in `flags`
  struct Ctx {
    std::string config_path;
    json flags = json::object();
    std::string subcommand;
  } ctx;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", ctx.config_path, "JSON config file");
    sub->parse_complete_callback([&, sub] { ctx.subcommand = sub->get_name(); });
  };
  auto opt_int = [&](CLI::App* sub, const std::string& name, const char* help) {
    sub->add_option_function<long long>(
        name, [&ctx, key = name.substr(2)](long long v) { ctx.flags[key] = v; },
        help);
  };
  auto opt_double = [&](CLI::App* sub, const std::string& name, const char* help) {
    sub->add_option_function<double>(
        name, [&ctx, key = name.substr(2)](double v) { ctx.flags[key] = v; },
        help);
  };
  auto opt_str = [&](CLI::App* sub, const std::string& name, const char* help) {
    sub->add_option_function<std::string>(
        name,
        [&ctx, key = name.substr(2)](const std::string& v) { ctx.flags[key] = v; },
        help);
  };

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic corridor data");
  add_common(synth);
  opt_int(synth, "--days", "number of days");
  opt_int(synth, "--sensors", "number of sensors");
  opt_int(synth, "--seed", "root seed");
  opt_str(synth, "--out", "output CSV path");
  synth->add_option_function<std::string>(
      "--mix",
      [&ctx](const std::string& v) {
        json mix;
        std::istringstream ss(v);
        std::string part;
        while (std::getline(ss, part, ',')) {
          auto eq = part.find('=');
          if (eq == std::string::npos)
            throw CLI::ValidationError("--mix", "expected k=v pairs");
          mix[part.substr(0, eq)] = std::stod(part.substr(eq + 1));
        }
        ctx.flags["mix"] = mix;
      },
      "day-type mix, e.g. normal=0.8,event=0.1,weather=0.1");

  CLI::App* filter = app.add_subcommand("filter", "denoise a speed CSV");
  add_common(filter);
  opt_str(filter, "--in", "input CSV");
  opt_str(filter, "--out", "output CSV");
  opt_str(filter, "--method", "median | tf | ewma | none");
  opt_int(filter, "--window", "median window");
  opt_double(filter, "--lambda", "trend-filter penalty");
  opt_int(filter, "--order", "trend-filter difference order (1 or 2)");
  opt_double(filter, "--alpha", "ewma smoothing factor");
  opt_str(filter, "--format", "output format: long | wide");

  CLI::App* fit_var = app.add_subcommand("fit-var", "fit the sparse linear VAR");
  add_common(fit_var);
  opt_str(fit_var, "--data", "speeds CSV");
  opt_str(fit_var, "--target", "target sensor id");
  opt_int(fit_var, "--lags", "lag count");
  opt_int(fit_var, "--horizon", "forecast horizon, steps");
  opt_double(fit_var, "--lambda", "l1 penalty (omit for validation grid)");
  opt_str(fit_var, "--out", "model JSON path");

  CLI::App* fit_dl = app.add_subcommand("fit-dl", "train the deep predictor");
  add_common(fit_dl);
  opt_str(fit_dl, "--data", "speeds CSV");
  opt_str(fit_dl, "--target", "target sensor id");
  opt_int(fit_dl, "--lags", "lag count");
  opt_int(fit_dl, "--horizon", "forecast horizon, steps");
  fit_dl->add_option_function<std::string>(
      "--hidden",
      [&ctx](const std::string& v) {
        std::vector<int> widths;
        std::istringstream ss(v);
        std::string part;
        while (std::getline(ss, part, ',')) widths.push_back(std::stoi(part));
        ctx.flags["hidden"] = widths;
      },
      "hidden widths, e.g. 7,3");
  opt_str(fit_dl, "--activation", "tanh | relu");
  opt_double(fit_dl, "--lambda", "penalty weight");
  opt_str(fit_dl, "--penalty", "l2 | l1 | none");
  opt_double(fit_dl, "--dropout", "dropout probability");
  opt_int(fit_dl, "--epochs", "training epochs");
  opt_int(fit_dl, "--batch", "mini-batch size");
  opt_double(fit_dl, "--lr", "initial learning rate");
  opt_int(fit_dl, "--seed", "seed");
  opt_str(fit_dl, "--out", "model JSON path");

  CLI::App* search = app.add_subcommand("search", "random architecture search");
  add_common(search);
  opt_str(search, "--data", "speeds CSV");
  opt_str(search, "--target", "target sensor id");
  opt_int(search, "--lags", "lag count");
  opt_int(search, "--horizon", "forecast horizon, steps");
  opt_int(search, "--budget", "number of sampled configs");
  opt_int(search, "--workers", "concurrent trainings (0 = all cores)");
  opt_int(search, "--seed", "seed");
  opt_str(search, "--space", "search-space JSON file");
  opt_str(search, "--out", "leaderboard CSV path");
  opt_str(search, "--out-model", "winner model JSON path");

  CLI::App* eval_cmd = app.add_subcommand("eval", "run pipeline variants");
  add_common(eval_cmd);
  opt_str(eval_cmd, "--specs", "pipeline specs JSON file");
  opt_str(eval_cmd, "--data", "speeds CSV");
  opt_str(eval_cmd, "--out", "report directory");
  opt_int(eval_cmd, "--seed", "root seed");
  opt_int(eval_cmd, "--workers", "search workers");

  CLI::App* diagnose = app.add_subcommand("diagnose", "residual diagnostics");
  add_common(diagnose);
  opt_str(diagnose, "--data", "two-column CSV (y, yhat)");
  opt_str(diagnose, "--regressors", "optional regressor CSV");
  opt_str(diagnose, "--out", "report JSON path");
  opt_int(diagnose, "--seed", "seed for the phantom units");

  CLI::App* rerun = app.add_subcommand("rerun", "replay a run manifest");
  std::string rerun_path;
  rerun->add_option("manifest", rerun_path, "manifest JSON")->required();
  rerun->parse_complete_callback([&] { ctx.subcommand = "rerun"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (ctx.subcommand.empty()) {
    std::cerr << app.help();
    return 1;
  }

  try {
    if (ctx.subcommand == "rerun") {
      rerun_manifest(rerun_path);
      return 0;
    }
    // map CLI key aliases onto config keys
    if (ctx.flags.contains("out-model")) {
      ctx.flags["out_model"] = ctx.flags["out-model"];
      ctx.flags.erase("out-model");
    }
    if (ctx.subcommand == "fit-dl" && ctx.flags.contains("lambda")) {
      ctx.flags["penalty_weight"] = ctx.flags["lambda"];
      ctx.flags.erase("lambda");
    }
    if (ctx.subcommand == "search" && ctx.flags.contains("space"))
      ctx.flags["space"] = load_json_file(ctx.flags["space"].get<std::string>());
    json config = resolve_config(json::object(), ctx.config_path, ctx.flags);
    dispatch(ctx.subcommand, config);
    return 0;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace flowcast::cli
