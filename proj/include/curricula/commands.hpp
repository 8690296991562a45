#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace curricula {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitTraining = 3;
inline constexpr int kExitCompare = 4;

/// Global CLI flags; flags win over config values.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool force = false;
};

/// Windows, filters and balances the configured domains into pool files
/// under <out>/prepared and prints per-class counts.
int cmd_prepare(const std::filesystem::path& config_path, const CliOverrides& overrides);

/// Generates a benchmark bundle from a spec file into --out.
int cmd_bench(const std::filesystem::path& spec_path, const CliOverrides& overrides);

/// Executes one strategy end to end, writing the run directory.
/// `direction` applies to two_step_ft only ("" keeps the default).
int cmd_run(const std::filesystem::path& config_path, const std::string& strategy,
            const std::string& direction, const CliOverrides& overrides);

/// Evaluates each run's final checkpoint on the target test pool and writes
/// report.json/report.csv/report.md plus plots.
int cmd_compare(const std::filesystem::path& config_path, const std::string& base_label,
                const std::vector<std::filesystem::path>& run_dirs,
                const CliOverrides& overrides);

/// Re-renders tables and plots from an existing report.json.
/// `format` is md, csv, json or all.
int cmd_report(const std::filesystem::path& report_json, const std::string& format,
               const CliOverrides& overrides);

}  // namespace curricula
