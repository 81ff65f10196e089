#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roelab/expander.hpp"
#include "roelab/groups.hpp"

namespace roelab {

// Knobs for the lift pipeline stage: how many random trials to run and how
// the propagation budget is split across each pair.
struct LiftConfig {
  int window = 1;          // S: lift window, must satisfy 2S < cover radius
  int trials = 50;         // random operator pairs per cover
  std::size_t entries = 30;  // stored entries per random operator
  double fraction = 0.5;   // localization constant for the witness search
};

// One structured config drives every subcommand. Parsed from a JSON file
// with typed keys; unknown keys are rejected so typos fail loudly.
struct RunConfig {
  Family family = Family::sl2;
  std::vector<std::uint32_t> moduli;
  MeasureSpec measure;
  std::vector<double> p_values = {2.0};
  std::vector<int> n_grid = {1, 2, 4, 8, 16, 24};
  std::vector<int> ghost_radii = {0, 1, 2};
  std::size_t ball_radius = 26;
  double cheeger_tau = 0.1;
  std::size_t cheeger_exact_threshold = 20;
  double tolerance = 1e-12;
  std::uint64_t seed = 0x5eedULL;
  int threads = 1;
  std::string out_dir;
  LiftConfig lift;

  // cross-field checks shared by every subcommand; cover-specific checks
  // (divisibility of consecutive moduli) run where covers are built
  void validate() const;

  QuotientChain chain() const;
};

RunConfig load_config(const std::string& path);

// Environment overrides (output directory and thread count only), applied
// after the file and before command-line flags.
void apply_env_overrides(RunConfig& config);

int run_pipeline(const std::string& subcommand, const RunConfig& config);

const std::vector<std::string>& pipeline_subcommands();

}  // namespace roelab
