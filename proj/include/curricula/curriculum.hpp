#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "curricula/sampling.hpp"
#include "curricula/trainer.hpp"

namespace curricula {

enum class StrategyType { NaiveCombined, TwoStepFT, Progressive, SynOnly, RealOnly };
enum class Direction { SynToReal, RealToSyn };

std::string to_string(Direction direction);
Direction parse_direction(std::string_view text);

/// A training strategy. SynOnly/RealOnly are the single-domain baselines the
/// combined strategies are measured against.
struct StrategyKind {
  StrategyType type = StrategyType::NaiveCombined;
  Direction direction = Direction::SynToReal;  // TwoStepFT only
  int rounds = 3;                              // Progressive only
  double first_fraction = 0.5;
  /// Explicit per-round expansion ladder for Progressive with rounds != 3;
  /// strictly increasing, last entry 1.0.
  std::vector<double> fractions;

  static StrategyKind naive_combined();
  static StrategyKind two_step_ft(Direction direction);
  static StrategyKind progressive(int rounds = 3, double first_fraction = 0.5);
  static StrategyKind syn_only();
  static StrategyKind real_only();

  std::string label() const;
};

/// Parses a strategy name such as "naive_combined", "two_step_ft_s_to_r" or
/// "progressive"; `progressive_defaults` supplies rounds/fractions.
StrategyKind parse_strategy(std::string_view name, const StrategyKind& progressive_defaults);
StrategyKind parse_strategy(std::string_view name);

enum class DatasetKind { SynSubset, SynFull, RealFull, Combined };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Combined;
  double fraction = 1.0;  // SynSubset only

  bool operator==(const DatasetSpec&) const = default;
};

std::string to_string(DatasetKind kind);

struct Duration {
  bool until_convergence = false;
  int epochs = 0;  // fixed-epoch rounds only

  static Duration fixed(int epochs) { return {false, epochs}; }
  static Duration convergence() { return {true, 0}; }

  bool operator==(const Duration&) const = default;
};

struct RoundPlan {
  int round_index = 0;  // 1-based
  DatasetSpec dataset;
  Duration duration;
  double learning_rate = 0.0;

  bool operator==(const RoundPlan&) const = default;
};

struct TrainingProfile {
  std::string name;
  double base_lr = 0.0;
  double finetune_lr = 0.0;
  int e1 = 0;
  int e2 = 0;
  int batch_size = 0;

  void validate() const;
};

/// Stop policy for the final round. eval_every is an iteration budget between
/// holdout evaluations; 0 means every epoch. Because the trainer is driven in
/// whole epochs, evaluation points land on epoch boundaries: at least
/// eval_every iterations pass between evaluations.
struct ConvergencePolicy {
  std::uint64_t eval_every = 0;
  int patience = 10;
  double min_delta = 1e-4;
  int max_epochs = 200;
  double holdout_fraction = 0.1;

  void validate() const;
};

std::vector<RoundPlan> build_schedule(const StrategyKind& strategy,
                                      const TrainingProfile& profile,
                                      const ConvergencePolicy& policy);

/// Materializes one round's training pool from the raw domain pools:
/// balanced subset selection for SynSubset, then class-balanced
/// oversampling; Combined concatenates the two oversampled domains. All
/// randomness derives from `seed`.
SamplePool stage_dataset(const DatasetSpec& spec, const SamplePool& syn, const SamplePool& real,
                         std::size_t target_per_class, std::uint64_t seed);

/// Gradient steps for a fixed-epoch round: epochs * ceil(n / batch).
std::uint64_t iterations_for(std::size_t n_samples, int batch_size, int epochs);

/// The only trainer surface the curriculum depends on; external trainers
/// plug in here.
class TrainerHandle {
 public:
  virtual ~TrainerHandle() = default;

  virtual TrainResult train_epochs(const SamplePool& pool, int batch_size, double lr,
                                   int epochs, std::uint64_t seed) = 0;
  virtual double evaluate(const SamplePool& pool) = 0;
  virtual void save(const std::filesystem::path& path) const = 0;
  virtual void load(const std::filesystem::path& path) = 0;
  virtual void append_stage(const std::string& strategy, int round_index) = 0;
  virtual void reset_optimizer() = 0;
};

/// TrainerHandle over the built-in reference classifier.
class BuiltinTrainer final : public TrainerHandle {
 public:
  explicit BuiltinTrainer(ModelCheckpoint checkpoint) : ckpt_(std::move(checkpoint)) {}

  const ModelCheckpoint& checkpoint() const { return ckpt_; }

  TrainResult train_epochs(const SamplePool& pool, int batch_size, double lr, int epochs,
                           std::uint64_t seed) override;
  double evaluate(const SamplePool& pool) override;
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;
  void append_stage(const std::string& strategy, int round_index) override;
  void reset_optimizer() override;

 private:
  ModelCheckpoint ckpt_;
};

struct RoundResult {
  RoundPlan plan;
  std::uint64_t seed = 0;
  std::uint64_t iterations_executed = 0;
  int epochs_executed = 0;
  /// Path of the round's saved checkpoint relative to the run directory;
  /// empty when the run kept no artifacts.
  std::string final_checkpoint_id;

  bool operator==(const RoundResult&) const = default;
};

struct RunRecord {
  std::string strategy;
  std::string run_id;
  std::vector<RoundResult> rounds;
  std::uint64_t total_iterations = 0;

  bool operator==(const RunRecord&) const = default;
};

/// Deterministic serialization; no timestamps, sorted keys.
std::string to_json(const RunRecord& record);
RunRecord parse_run_record(const std::string& text);
void save_run_record(const RunRecord& record, const std::filesystem::path& path);
RunRecord load_run_record(const std::filesystem::path& path);

struct RunContext {
  std::string strategy_label;
  int batch_size = 1;
  std::size_t target_per_class = 1;
  ConvergencePolicy policy;
  /// Round artifacts (checkpoint.ckpt, pool.pool, log.jsonl) and
  /// run_record.json land here; empty keeps everything in memory.
  std::filesystem::path run_dir;
  /// Ablation: zero optimizer moments at every round boundary instead of
  /// carrying them.
  bool reset_optimizer_each_round = false;
};

/// Executes the rounds in order on one trainer. Round r's staging and
/// training randomness derives from (master_seed, plan.round_index), so a
/// suffix of a schedule resumed from a checkpoint replays identically.
/// eval_set, when non-empty, is scored at each round end for the log only.
RunRecord run_schedule(const std::vector<RoundPlan>& plans, const SamplePool& syn,
                       const SamplePool& real, TrainerHandle& trainer,
                       const SamplePool& eval_set, std::uint64_t master_seed,
                       const RunContext& ctx);

}  // namespace curricula
