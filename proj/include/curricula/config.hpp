#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "curricula/clip_pipeline.hpp"
#include "curricula/curriculum.hpp"

namespace curricula {

/// Everything one experiment needs: data locations, training profile,
/// strategies, and the master seed all artifacts derive from. Relative paths
/// resolve against the config file's directory.
struct RunConfig {
  std::uint64_t master_seed = 1;
  Architecture arch = Architecture::Linear;
  int hidden = 0;
  TrainingProfile profile;
  std::vector<std::string> strategies;
  WindowingConfig windowing;
  std::size_t target_per_class = 60;
  ConvergencePolicy convergence;
  /// Defaults for the "progressive" strategy name (rounds/fractions).
  StrategyKind progressive = StrategyKind::progressive();
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  bool reset_optimizer_each_round = false;

  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);

/// Deterministic JSON dump; archived into every run directory.
std::string dump_run_config(const RunConfig& config);

}  // namespace curricula
