#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "dpl/cli/run.hpp"

int main(int argc, char** argv) {
  using namespace dpl::cli;
  CLI::App app{"Goal-conditioned stochastic SLD resolution: training, evaluation and proofs", "dproflog"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::vector<std::string> overrides;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"dp-train", "train by exact dynamic programming over the proof space"},
      {"pg-train", "train by policy gradient (PPO or REINFORCE)"},
      {"eval", "evaluate a checkpoint"},
      {"prove", "score one query and export its best proof"},
      {"oracle-check", "check the exact solvers against brute-force enumeration"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "flat key = value configuration file")->required();
    sub->add_option("--override", overrides, "key=value, applied after the file (repeatable)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = RunConfig::from_file(config_path);
    for (const auto& o : overrides) cfg.override_with(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return run_command(command, cfg, std::cout, std::cerr);
}
