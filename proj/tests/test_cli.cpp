#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "flowcast/cli.hpp"

using namespace flowcast;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct WorkDir {
  fs::path path;
  WorkDir() {
    path = fs::temp_directory_path() /
           ("flowcast_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~WorkDir() { std::error_code ec; fs::remove_all(path, ec); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() { static int c = 0; return c; }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

json synth_config(const WorkDir& dir, int days = 4, int sensors = 5) {
  json cfg;
  cfg["days"] = days;
  cfg["sensors"] = sensors;
  cfg["seed"] = 99;
  cfg["out"] = dir.file("speeds.csv");
  return cfg;
}

}  // namespace

TEST_CASE("synth writes data plus a manifest") {
  WorkDir dir;
  auto manifest = cli::run_synth(synth_config(dir));
  CHECK(fs::exists(dir.file("speeds.csv")));
  CHECK(fs::exists(dir.file("speeds.csv.manifest.json")));
  CHECK(manifest.at("subcommand") == "synth");
  CHECK(manifest.at("outputs").size() == 1);
  auto field = data::load_speed_csv(dir.file("speeds.csv"));
  CHECK(field.n_days() == 4);
  CHECK(field.n_sensors() == 5);
}

TEST_CASE("filter subcommand round-trips through CSV") {
  WorkDir dir;
  cli::run_synth(synth_config(dir));
  json cfg;
  cfg["in"] = dir.file("speeds.csv");
  cfg["out"] = dir.file("filtered.csv");
  cfg["method"] = "median";
  cfg["window"] = 8;
  cli::run_filter(cfg);
  auto filtered = data::load_speed_csv(dir.file("filtered.csv"));
  CHECK(filtered.n_times() == 4 * 288);
  SUBCASE("wide output format") {
    cfg["out"] = dir.file("wide.csv");
    cfg["format"] = "wide";
    cli::run_filter(cfg);
    std::ifstream in(dir.file("wide.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("timestamp,", 0) == 0);
  }
}

TEST_CASE("fit-var and fit-dl write loadable models") {
  WorkDir dir;
  cli::run_synth(synth_config(dir, 6));
  json var_cfg;
  var_cfg["data"] = dir.file("speeds.csv");
  var_cfg["target"] = "s03";
  var_cfg["lags"] = 3;
  var_cfg["horizon"] = 4;
  var_cfg["out"] = dir.file("var.json");
  auto m1 = cli::run_fit_var(var_cfg);
  CHECK(m1.contains("lambda"));
  auto var_model = var::load_json(dir.file("var.json"));
  CHECK(var_model.n_predictors() == 5 * 3);

  json dl_cfg;
  dl_cfg["data"] = dir.file("speeds.csv");
  dl_cfg["target"] = "s03";
  dl_cfg["lags"] = 3;
  dl_cfg["horizon"] = 4;
  dl_cfg["hidden"] = std::vector<int>{6};
  dl_cfg["epochs"] = 5;
  dl_cfg["out"] = dir.file("dl.json");
  cli::run_fit_dl(dl_cfg);
  auto net = nn::load_json(dir.file("dl.json"));
  CHECK(net.config.input_dim == 15);
}

TEST_CASE("search subcommand emits a leaderboard") {
  WorkDir dir;
  cli::run_synth(synth_config(dir, 6));
  json cfg;
  cfg["data"] = dir.file("speeds.csv");
  cfg["target"] = "s03";
  cfg["lags"] = 2;
  cfg["horizon"] = 2;
  cfg["budget"] = 3;
  cfg["epochs"] = 5;
  cfg["search_epochs"] = 5;
  cfg["space"] = {{"depth", {1, 2}}, {"width", {2, 6}}};
  cfg["out"] = dir.file("leaderboard.csv");
  cfg["out_model"] = dir.file("winner.json");
  auto manifest = cli::run_search(cfg);
  CHECK(fs::exists(dir.file("leaderboard.csv")));
  auto lines = slurp(dir.file("leaderboard.csv"));
  CHECK(lines.rfind("rank,depth,widths,activation,lambda,val_mse,train_mse,seconds",
                    0) == 0);
  CHECK(manifest.contains("best_index"));
  auto winner = nn::load_json(dir.file("winner.json"));
  CHECK(winner.config.input_dim == 10);
}

TEST_CASE("eval subcommand produces the report bundle") {
  WorkDir dir;
  cli::run_synth(synth_config(dir, 6));
  json cfg;
  cfg["data"] = dir.file("speeds.csv");
  cfg["out"] = dir.file("report");
  cfg["seed"] = 3;
  cfg["specs"] = json::array(
      {{{"label", "naive"},
        {"model", {{"kind", "naive"}}},
        {"lags", 3},
        {"horizon", 4},
        {"target", "s03"}},
       {{"label", "VARM8L"},
        {"filter", {{"kind", "median"}, {"window", 8}}},
        {"model", {{"kind", "var"}}},
        {"lags", 3},
        {"horizon", 4},
        {"target", "s03"}}});
  cli::run_eval(cfg);
  for (const char* name :
       {"table.csv", "predictions_naive.csv", "heatmap_naive.csv",
        "diagnostics_naive.json", "predictions_VARM8L.csv",
        "heatmap_VARM8L.csv", "diagnostics_VARM8L.json", "manifest.json"})
    CHECK(fs::exists(dir.path / "report" / name));
  auto table = slurp(dir.file("report/table.csv"));
  CHECK(table.find("naive") != std::string::npos);
  CHECK(table.find("VARM8L") != std::string::npos);
  CHECK(table.find("OS MSE") != std::string::npos);
}

TEST_CASE("diagnose subcommand reads y,yhat CSV") {
  WorkDir dir;
  {
    std::ofstream out(dir.file("resid.csv"));
    out << "y,yhat\n";
    Rng rng(1);
    for (int i = 0; i < 300; ++i) {
      double y = rng.normal();
      out << y << ',' << y * 0.5 << '\n';
    }
  }
  json cfg;
  cfg["data"] = dir.file("resid.csv");
  cfg["out"] = dir.file("diag.json");
  cli::run_diagnose(cfg);
  auto report = json::parse(slurp(dir.file("diag.json")));
  CHECK(report.contains("tests"));
  CHECK(report.at("tests").size() >= 5);
}

TEST_CASE("manifest replay is byte identical") {
  WorkDir dir;
  auto cfg = synth_config(dir, 3);
  cli::run_synth(cfg);
  auto original = slurp(dir.file("speeds.csv"));
  // replay from the recorded manifest into the same paths
  auto manifest_path = dir.file("speeds.csv.manifest.json");
  cli::rerun_manifest(manifest_path);
  CHECK(slurp(dir.file("speeds.csv")) == original);
}

TEST_CASE("dispatch rejects unknown subcommands") {
  CHECK_THROWS_AS(cli::dispatch("bogus", json::object()), ParamError);
}

TEST_CASE("main_entry maps errors to exit codes") {
  WorkDir dir;
  SUBCASE("--help exits 0") {
    const char* argv[] = {"flowcast", "--help"};
    CHECK(cli::main_entry(2, argv) == 0);
  }
  SUBCASE("unknown subcommand exits 1") {
    const char* argv[] = {"flowcast", "bogus"};
    CHECK(cli::main_entry(2, argv) == 1);
  }
  SUBCASE("missing data file exits 2") {
    auto out = dir.file("x.csv");
    std::string in_flag = "--in=" + dir.file("nope.csv");
    std::string out_flag = "--out=" + out;
    const char* argv[] = {"flowcast", "filter", in_flag.c_str(),
                          out_flag.c_str(), "--method=median"};
    CHECK(cli::main_entry(5, argv) == 2);
  }
  SUBCASE("bad parameter exits 1") {
    // alpha outside (0,1] surfaces as a parameter error
    auto csv = dir.file("s.csv");
    {
      json cfg = synth_config(dir, 1, 3);
      cfg["out"] = csv;
      cli::run_synth(cfg);
    }
    std::string in_flag = "--in=" + csv;
    std::string out_flag = "--out=" + dir.file("f.csv");
    const char* argv[] = {"flowcast", "filter",        in_flag.c_str(),
                          out_flag.c_str(), "--method=ewma", "--alpha=7"};
    CHECK(cli::main_entry(6, argv) == 1);
  }
}
