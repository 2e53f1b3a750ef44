#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fulfillkit/commands.hpp"

using namespace fulfillkit;

namespace {

struct Common {
  std::string config;
  std::optional<long long> seed;
  std::vector<std::string> tp;
  std::string out;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "INI configuration file");
  cmd->add_option("--seed", c.seed, "Master seed (overrides run.seed)");
  cmd->add_option("--tp", c.tp, "Time points to process (TP1..TP4)")->delimiter(',');
  cmd->add_option("--out", c.out, "Output directory (overrides paths.out)");
  cmd->add_option("--jobs", c.jobs, "Worker threads (overrides run.jobs)");
}

std::map<std::string, std::string> overrides_of(const Common& c) {
  std::map<std::string, std::string> o;
  if (c.seed) o["run.seed"] = std::to_string(*c.seed);
  if (!c.out.empty()) o["paths.out"] = c.out;
  if (c.jobs) o["run.jobs"] = std::to_string(*c.jobs);
  if (!c.tp.empty()) {
    std::string joined;
    for (const auto& t : c.tp) joined += (joined.empty() ? "" : ",") + t;
    o["run.time_points"] = joined;
    o["evaluate.ablation_tp"] = c.tp.front();
  }
  return o;
}

std::optional<std::filesystem::path> config_path(const Common& c) {
  if (c.config.empty()) return std::nullopt;
  if (!std::filesystem::exists(c.config)) throw config_error("config file " + c.config + " does not exist");
  return std::filesystem::path(c.config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delivery-risk prediction for crowdfunding rewards"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::map<std::string, Common> common;
  std::map<std::string, CLI::App*> commands;
  const std::map<std::string, std::string> about{
      {"synth", "Generate a synthetic labeled corpus"},
      {"embed", "Train word embeddings on reward descriptions"},
      {"cluster", "Cluster words and rewards; write the difficulty table"},
      {"featurize", "Extract feature matrices per time point"},
      {"select", "Run VIF elimination and Boruta per time point"},
      {"train-classifier", "Fit the late/on-time classifier per time point"},
      {"train-regressor", "Fit the delivery-duration regressor per time point"},
      {"evaluate", "Cross-validate models against both baselines"},
      {"predict", "Score one project at every available time point"},
      {"ablate", "Cross-validate with each feature group removed"}};
  for (const auto& name : kCommands) {
    commands[name] = app.add_subcommand(name, about.at(name));
    add_common(commands[name], common[name]);
  }
  PredictRequest req;
  std::string project, events;
  std::optional<double> now;
  commands["predict"]->add_option("--project", project, "Project record (JSON or JSONL)")->required();
  commands["predict"]->add_option("--events", events, "Activity events (JSONL)");
  commands["predict"]->add_option("--id", req.id, "Project id when the file holds several");
  commands["predict"]->add_option("--now", now, "Current time in epoch seconds");

  Common vc;
  auto* validate = app.add_subcommand("validate-config", "Check a configuration and list every problem");
  add_common(validate, vc);
  bool print_defaults = false;
  app.add_subcommand("default-config", "Print the default configuration")->callback([&] { print_defaults = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Config);
  }

  try {
    if (print_defaults) {
      std::cout << default_config_text();
      return 0;
    }
    if (validate->parsed()) {
      const auto errors = validate_config(config_path(vc), process_environment(), overrides_of(vc));
      for (const auto& e : errors) std::cerr << e << '\n';
      if (!errors.empty()) return static_cast<int>(ErrorKind::Config);
      std::cout << "ok\n";
      return 0;
    }
    for (const auto& [name, cmd] : commands) {
      if (!cmd->parsed()) continue;
      const Common& c = common[name];
      const RunConfig cfg = load_config(config_path(c), process_environment(), overrides_of(c));
      if (name == "predict") {
        req.project = project;
        req.events = events;
        req.now = now;
        std::cout << cmd_predict(cfg, req).dump(2) << '\n';
      } else {
        run_command(name, cfg);
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "fulfillkit: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "fulfillkit: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Data);
  }
}
