#include "emgkey/cli/commands.hpp"
#include "emgkey/core/csv.hpp"
#include "emgkey/core/error.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <map>

using namespace emgkey;
using namespace emgkey::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("emgkey_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kSmall = R"(
[experiment]
seed = 3

[synth]
participants = 2
recordings = 2
keystrokes = 40
tasks = xkcd, pwgen

[model]
lstm_units = 8
initial_filters = 4

[train]
max_epochs = 2
patience = 2
batch_size = 64
)";

ExperimentConfig small(const fs::path& dir, const std::vector<Override>& extra = {}) {
  return parse_config(kSmall, dir, extra);
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = csv::read_text(e.path());
  }
  return out;
}

void pipeline(const RunContext& ctx) {
  run_synth(ctx);
  run_preprocess(ctx);
  run_train(ctx);
  run_eval(ctx);
}

bool all_populated(const json& j) {
  if (j.is_null()) return false;
  if (j.is_object() || j.is_array()) {
    for (const auto& v : j) {
      if (!all_populated(v)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("config files parse sections, overrides and relative paths") {
  const auto c = parse_config(kSmall, "/base", {{"sensors.subset", "acc, gyro"}, {"eval.topn", "1,3"}});
  CHECK(c.seed == 3);
  CHECK(c.train.seed == 3);
  CHECK(c.synth.participants == 2);
  CHECK(c.synth.base.n_keystrokes == 40);
  CHECK(c.synth.tasks == std::vector<TaskType>{TaskType::xkcd, TaskType::pwgen});
  CHECK(c.output == fs::path("/base/out"));
  CHECK(c.dataset_roots() == std::vector<fs::path>{"/base/out/data"});
  CHECK(sensor_label(c.sensors) == "acc+gyro");
  CHECK(model_tag(c) == "crnn_binary_acc+gyro");
  CHECK(c.eval.topn == std::vector<int>{1, 3});

  const auto moved = parse_config(kSmall, "/base", {{"experiment.output", "../elsewhere"}});
  CHECK(moved.output == fs::path("/elsewhere"));
  CHECK(config_hash(moved) == config_hash(small("/base")));
  CHECK(config_hash(small("/base", {{"experiment.seed", "4"}})) != config_hash(small("/base")));

  CHECK(parse_override("train.max_epochs = 9") == Override{"train.max_epochs", "9"});
  CHECK_THROWS_AS(parse_override("no_equals"), ConfigError);
}

TEST_CASE("invalid configuration is rejected with ConfigError") {
  CHECK_THROWS_AS(parse_config("[train]\nmax_epoch = 3\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nosuch]\nkey = 1\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sensors]\nsubset =\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nlearning_rate = fast\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("[eval]\ntopn = 60\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\narchitecture = transformer\n", "/"), ConfigError);
  CHECK_THROWS_AS(small("/", {{"synth.text", "ß€"}}), ConfigError);
  CHECK_THROWS_AS(small("/", {{"model.resnet11_filters", "4, 8, 8"}}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/experiment.ini"), ConfigError);
}

TEST_CASE("synth twice produces identical dataset trees") {
  TempDir a("synth_a"), b("synth_b");
  run_synth(RunContext(small(a.path)));
  run_synth(RunContext(small(b.path), 3));
  const auto ta = tree_contents(a.path / "out" / "data");
  CHECK(ta.size() == 4 * 6 + 1);
  CHECK(ta == tree_contents(b.path / "out" / "data"));
  CHECK(ta.count("p01/s1/r2/keys.csv") == 1);
  const auto manifest = json::parse(ta.at("manifest.json"));
  CHECK(manifest.at("config_hash") == config_hash(small(a.path)));
  CHECK(manifest.at("seed") == 3);
}

TEST_CASE("train then eval writes a fully populated metrics file") {
  TempDir dir("train_eval");
  const RunContext ctx(small(dir.path));
  pipeline(ctx);
  const auto out = dir.path / "out";
  CHECK(fs::exists(out / "models" / "crnn_binary_emg+acc+gyro.emgk"));
  const auto metrics = json::parse(csv::read_text(out / "eval" / "crnn_binary_emg+acc+gyro" / "metrics.json"));
  CHECK(metrics.at("config_hash") == ctx.hash);
  CHECK(metrics.at("held_out") == json::array({"p02"}));
  REQUIRE(metrics.at("recordings").size() == 2);
  for (const auto& r : metrics.at("recordings")) {
    CHECK(r.at("participant") == "p02");
    for (const char* k : {"accuracy", "balanced_accuracy", "precision", "recall", "specificity", "f1"}) {
      CHECK(r.at("metrics").contains(k));
    }
    CHECK(r.at("confusion").at("tn").get<long>() > 0);
    CHECK(r.at("presses").get<int>() > 30);
  }
  const auto& agg = metrics.at("aggregate").at("balanced_accuracy");
  CHECK(agg.at("n") == 2);
  CHECK_FALSE(agg.at("mean").is_null());

  // Most windows carry no press, so even an untrained model yields every rate.
  const auto side = json::parse(csv::read_text(out / "models" / "crnn_binary_emg+acc+gyro.json"));
  CHECK(side.at("config_hash") == ctx.hash);
  CHECK(side.at("train_recordings").size() == 2);

  run_sweep(ctx);
  const auto sweep = json::parse(csv::read_text(out / "eval" / "crnn_binary_emg+acc+gyro" / "sweep.json"));
  CHECK(sweep.at("aggregate").size() == ctx.cfg.eval.tolerances.size());
  const auto table_text = csv::read_text(out / "eval" / "crnn_binary_emg+acc+gyro" / "sweep.csv");
  CHECK(csv::lines_of(table_text).size() == ctx.cfg.eval.tolerances.size() + 1);

  run_analyze(ctx);
  const auto analysis = json::parse(csv::read_text(out / "analysis" / "analysis.json"));
  CHECK(analysis.at("recordings").size() == 4);
  CHECK(all_populated(analysis.at("keys_per_minute")));
  CHECK(analysis.at("class_skew").at("mean").get<double>() > 0.9);

  run_report(ctx);
  CHECK(fs::exists(out / "report" / "report.md"));
}

TEST_CASE("sensor subsets and the multiclass head run end to end") {
  TempDir dir("multiclass");
  const RunContext ctx(small(dir.path, {{"model.head", "multiclass"},
                                        {"model.architecture", "tsc_resnet11"},
                                        {"model.resnet11_filters", "28, 28, 28"},
                                        {"sensors.subset", "emg"}}));
  pipeline(ctx);
  const auto dir_eval = dir.path / "out" / "eval" / "tsc_resnet11_multiclass_emg";
  const auto metrics = json::parse(csv::read_text(dir_eval / "metrics.json"));
  CHECK(metrics.at("sensors") == "emg");
  for (const auto& r : metrics.at("recordings")) {
    CHECK(all_populated(r.at("topn")));
    CHECK(r.at("topn").at("top1").get<double>() <= r.at("topn").at("top5").get<double>());
  }
  const auto preds = csv::read_text(dir_eval / "predictions" / "p02_s1_r1.csv");
  CHECK(csv::split(csv::lines_of(preds).at(0), ',').size() == 53);
  CHECK_THROWS_AS(run_sweep(ctx), ConfigError);
}

TEST_CASE("report groups recordings by password type") {
  TempDir dir("report");
  const RunContext ctx(small(dir.path));
  json m = {{"model", "fixture"}, {"head", "binary"}, {"config_hash", "x"}, {"seed", 1}};
  auto entry = [](const std::string& task, const std::string& person, double bacc) {
    return json{{"id", person + task},
                {"participant", person},
                {"task_type", task},
                {"typing_style", "touch"},
                {"sensors", "emg"},
                {"metrics",
                 {{"balanced_accuracy", bacc}, {"precision", 1.0}, {"recall", 0.5}, {"f1", nullptr}}}};
  };
  m["recordings"] = {entry("xkcd", "p1", 0.8), entry("xkcd", "p2", 0.6), entry("pwgen", "p1", 0.9)};
  fs::create_directories(dir.path / "out" / "eval" / "fixture");
  csv::write_text(dir.path / "out" / "eval" / "fixture" / "metrics.json", m.dump());
  run_report(ctx);

  const auto report = json::parse(csv::read_text(dir.path / "out" / "report" / "report.json"));
  const json* by_task = nullptr;
  for (const auto& t : report.at("tables")) {
    if (t.at("group_by") == "task_type") by_task = &t;
  }
  REQUIRE(by_task != nullptr);
  const auto& rows = by_task->at("rows");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("group") == "pwgen");
  CHECK(rows[0].at("n") == 1);
  CHECK(rows[1].at("group") == "xkcd");
  CHECK(rows[1].at("n") == 2);
  CHECK(rows[1].at("metrics").at("balanced_accuracy").at("mean").get<double>() == doctest::Approx(0.7));
  CHECK(rows[1].at("metrics").at("balanced_accuracy").at("text") == "70.0 (14.1)");
  CHECK(rows[1].at("metrics").at("f1").at("text") == "n/a");
  CHECK(report.at("tables").size() == 4);
}

TEST_CASE("commands fail with data errors on missing inputs") {
  TempDir dir("missing");
  const RunContext ctx(small(dir.path));
  CHECK_THROWS_AS(run_preprocess(ctx), DataError);
  CHECK_THROWS_AS(run_train(ctx), DataError);
  CHECK_THROWS_AS(run_eval(ctx), DataError);
  CHECK_THROWS_AS(run_report(ctx), DataError);

  CHECK(exit_code(ConfigError("x")) == 1);
  CHECK(exit_code(DataError("x")) == 2);
  CHECK(exit_code(ShapeError("x")) == 2);
  CHECK(exit_code(NumericError("x")) == 3);
  CHECK(error_code(NumericError("x")) == "numeric_error");
}

TEST_CASE("the executable maps failures to exit codes and one stderr line") {
  TempDir dir("exe");
  const auto cfg = dir.path / "c.ini";
  csv::write_text(cfg, kSmall);
  const auto err = dir.path / "stderr.txt";
  auto run = [&](const std::string& args) {
    const auto cmd = std::string(EMGKEY_BINARY) + " " + args + " 2>" + err.string() + " >/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  auto stderr_line = [&] {
    const auto text = csv::read_text(err);
    const auto lines = csv::lines_of(text);
    REQUIRE(lines.size() == 1);
    return std::string(lines[0]);
  };
  CHECK(run("train --config " + cfg.string()) == 2);
  CHECK(stderr_line().rfind("error code=data_error message=", 0) == 0);
  CHECK(run("train --config " + cfg.string() + " --set train.bogus=1") == 1);
  CHECK(stderr_line().rfind("error code=config_error message=", 0) == 0);

  CHECK(run("frobnicate") == 1);
  CHECK(run("synth --config " + cfg.string() + " -q") == 0);
  CHECK(fs::exists(dir.path / "out" / "data" / "manifest.json"));
}
