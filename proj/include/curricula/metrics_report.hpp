#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "curricula/sampling.hpp"
#include "curricula/trainer.hpp"

namespace curricula {

struct EvalResult {
  std::size_t n_samples = 0;
  double top1 = 0.0;
  /// confusion[true_class][predicted_class]
  std::vector<std::vector<std::uint64_t>> confusion;
  /// Per-class recall; 0 for classes with no support.
  std::vector<double> per_class_accuracy;
};

/// Argmax classification of every sample (ties break to the smaller class
/// id), with confusion counts and top-1 accuracy.
EvalResult evaluate(const ModelCheckpoint& ckpt, const SamplePool& test_pool);

struct StrategyOutcome {
  std::string label;
  std::uint64_t total_iterations = 0;
  double top1 = 0.0;
  EvalResult eval;  // optional detail; confusion may be empty
};

struct DeltaRow {
  std::string label;
  /// base.total_iterations - entry.total_iterations (positive = cheaper).
  std::int64_t iteration_delta = 0;
  /// iteration_delta / base.total_iterations.
  double percent_savings = 0.0;
  /// (entry.top1 - base.top1) * 100.
  double accuracy_delta_points = 0.0;
};

struct EfficiencyReport {
  std::string base_label;
  std::vector<StrategyOutcome> entries;
  std::vector<DeltaRow> deltas;  // one per non-base entry, in entry order
};

/// Deltas of every entry against the named base. Labels must be unique and
/// the base present; at least two entries.
EfficiencyReport build_efficiency_report(const std::vector<StrategyOutcome>& entries,
                                         const std::string& base_label);

enum class TableFormat { Csv, Json, Markdown };

/// Accuracy renders as percent with two decimals; savings as the nearest
/// integer percent. CSV and JSON keep full numeric precision.
std::string render_table(const EfficiencyReport& report, TableFormat format);

/// Inverse of render_table(Csv); carries labels, iterations, top1 and deltas.
EfficiencyReport parse_table_csv(const std::string& text);

void save_report(const EfficiencyReport& report, const std::filesystem::path& path);
EfficiencyReport load_report(const std::filesystem::path& path);

/// Emits accuracy-vs-iterations scatter, accuracy bars, iteration bars and a
/// confusion heatmap per entry (entries with empty confusion are skipped) as
/// SVG files in `dir`.
void render_plots(const EfficiencyReport& report, const std::filesystem::path& dir);

}  // namespace curricula
