#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "roelab/common.hpp"
#include "roelab/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"finite quotient geometry toolkit"};
  app.require_subcommand(1);

  struct SubState {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
  };
  std::vector<std::pair<std::string, SubState>> states;
  states.reserve(roelab::pipeline_subcommands().size());
  for (const std::string& name : roelab::pipeline_subcommands()) {
    states.emplace_back(name, SubState{});
    SubState& state = states.back().second;
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", state.config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", state.out_dir, "output directory (overrides config and ROELAB_OUT)");
    sub->add_option("--threads", state.threads, "worker threads (overrides config and ROELAB_THREADS)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (const auto& [name, state] : states) {
      if (!app.got_subcommand(name)) continue;
      roelab::RunConfig config = roelab::load_config(state.config_path);
      roelab::apply_env_overrides(config);
      if (!state.out_dir.empty()) config.out_dir = state.out_dir;
      if (state.threads > 0) config.threads = state.threads;
      return roelab::run_pipeline(name, config);
    }
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const roelab::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const roelab::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
