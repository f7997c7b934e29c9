#include "emgkey/cli/commands.hpp"
#include "emgkey/core/error.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

using namespace emgkey;

int main(int argc, char** argv) {
  CLI::App app{"Keystroke detection and identification from armband EMG and IMU"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::size_t jobs = 1;
  bool quiet = false;

  const std::map<std::string, std::pair<std::string, std::function<void(const cli::RunContext&)>>> commands{
      {"synth", {"Generate a synthetic dataset in the canonical layout", cli::run_synth}},
      {"preprocess", {"Fuse every recording onto the common 200 Hz grid", cli::run_preprocess}},
      {"train", {"Train the configured model on the training participants", cli::run_train}},
      {"eval", {"Score the held-out recordings", cli::run_eval}},
      {"sweep", {"Tolerance curves from stored binary predictions", cli::run_sweep}},
      {"analyze", {"Typing statistics, class skew and DTW similarity", cli::run_analyze}},
      {"report", {"Group evaluation metrics into mean (sd) tables", cli::run_report}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("-c,--config", config_path, "Experiment INI file")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "Override a setting, section.key=value (repeatable)");
    sub->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("-q,--quiet", quiet, "Suppress progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    std::vector<cli::Override> overrides;
    for (const auto& s : sets) overrides.push_back(cli::parse_override(s));
    cli::RunContext ctx(cli::load_config(config_path, overrides), jobs, quiet ? nullptr : &std::cerr);
    const auto& name = app.get_subcommands().front()->get_name();
    commands.at(name).second(ctx);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error code=" << cli::error_code(e) << " message=" << e.what() << '\n';
    return cli::exit_code(e);
  }
}
