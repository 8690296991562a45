#include "curricula/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "json.hpp"

#include "curricula/errors.hpp"
#include "curricula/log.hpp"

namespace curricula {

namespace {

// derive_seed index namespaces for one round's sub-streams
constexpr std::uint64_t kSeedSubsetSplit = 0x57a60001ULL;
constexpr std::uint64_t kSeedOversampleSyn = 0x57a60002ULL;
constexpr std::uint64_t kSeedOversampleReal = 0x57a60003ULL;
constexpr std::uint64_t kSeedHoldout = 0x57a60007ULL;
constexpr std::uint64_t kSeedTrain = 0x57a6e000ULL;

std::uint64_t ceil_div(std::uint64_t n, std::uint64_t b) { return (n + b - 1) / b; }

nlohmann::json plan_to_json(const RoundPlan& plan) {
  nlohmann::json dataset;
  dataset["kind"] = to_string(plan.dataset.kind);
  if (plan.dataset.kind == DatasetKind::SynSubset) dataset["fraction"] = plan.dataset.fraction;
  nlohmann::json duration;
  if (plan.duration.until_convergence) {
    duration["type"] = "until_convergence";
  } else {
    duration["type"] = "fixed_epochs";
    duration["epochs"] = plan.duration.epochs;
  }
  return {{"round_index", plan.round_index},
          {"dataset", dataset},
          {"duration", duration},
          {"learning_rate", plan.learning_rate}};
}

RoundPlan plan_from_json(const nlohmann::json& node) {
  RoundPlan plan;
  plan.round_index = node.at("round_index").get<int>();
  const auto& dataset = node.at("dataset");
  const std::string kind = dataset.at("kind").get<std::string>();
  if (kind == "syn_subset") {
    plan.dataset = {DatasetKind::SynSubset, dataset.at("fraction").get<double>()};
  } else if (kind == "syn_full") {
    plan.dataset = {DatasetKind::SynFull, 1.0};
  } else if (kind == "real_full") {
    plan.dataset = {DatasetKind::RealFull, 1.0};
  } else if (kind == "combined") {
    plan.dataset = {DatasetKind::Combined, 1.0};
  } else {
    throw ParseError("unknown dataset kind '" + kind + "'");
  }
  const auto& duration = node.at("duration");
  if (duration.at("type").get<std::string>() == "until_convergence") {
    plan.duration = Duration::convergence();
  } else {
    plan.duration = Duration::fixed(duration.at("epochs").get<int>());
  }
  plan.learning_rate = node.at("learning_rate").get<double>();
  return plan;
}

}  // namespace

std::string to_string(Direction direction) {
  return direction == Direction::SynToReal ? "s_to_r" : "r_to_s";
}

Direction parse_direction(std::string_view text) {
  if (text == "s_to_r" || text == "syn_to_real") return Direction::SynToReal;
  if (text == "r_to_s" || text == "real_to_syn") return Direction::RealToSyn;
  throw ParseError("unknown direction '" + std::string(text) + "'");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::SynSubset: return "syn_subset";
    case DatasetKind::SynFull: return "syn_full";
    case DatasetKind::RealFull: return "real_full";
    case DatasetKind::Combined: return "combined";
  }
  return "combined";
}

StrategyKind StrategyKind::naive_combined() {
  StrategyKind kind;
  kind.type = StrategyType::NaiveCombined;
  return kind;
}

StrategyKind StrategyKind::two_step_ft(Direction direction) {
  StrategyKind kind;
  kind.type = StrategyType::TwoStepFT;
  kind.direction = direction;
  return kind;
}

StrategyKind StrategyKind::progressive(int rounds, double first_fraction) {
  StrategyKind kind;
  kind.type = StrategyType::Progressive;
  kind.rounds = rounds;
  kind.first_fraction = first_fraction;
  return kind;
}

StrategyKind StrategyKind::syn_only() {
  StrategyKind kind;
  kind.type = StrategyType::SynOnly;
  return kind;
}

StrategyKind StrategyKind::real_only() {
  StrategyKind kind;
  kind.type = StrategyType::RealOnly;
  return kind;
}

std::string StrategyKind::label() const {
  switch (type) {
    case StrategyType::NaiveCombined: return "naive_combined";
    case StrategyType::TwoStepFT: return "two_step_ft_" + to_string(direction);
    case StrategyType::Progressive: return "progressive";
    case StrategyType::SynOnly: return "syn_only";
    case StrategyType::RealOnly: return "real_only";
  }
  return "naive_combined";
}

StrategyKind parse_strategy(std::string_view name, const StrategyKind& progressive_defaults) {
  if (name == "naive" || name == "naive_combined" || name == "combined") {
    return StrategyKind::naive_combined();
  }
  if (name == "two_step_ft" || name == "two_step" || name == "two_step_ft_s_to_r") {
    return StrategyKind::two_step_ft(Direction::SynToReal);
  }
  if (name == "two_step_ft_r_to_s") return StrategyKind::two_step_ft(Direction::RealToSyn);
  if (name == "progressive") {
    StrategyKind kind = progressive_defaults;
    kind.type = StrategyType::Progressive;
    return kind;
  }
  if (name == "syn_only") return StrategyKind::syn_only();
  if (name == "real_only") return StrategyKind::real_only();
  throw ParseError("unknown strategy '" + std::string(name) + "'");
}

StrategyKind parse_strategy(std::string_view name) {
  return parse_strategy(name, StrategyKind::progressive());
}

void TrainingProfile::validate() const {
  if (name.empty()) throw ConfigError("profile name must not be empty");
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (!(finetune_lr > 0.0)) throw ConfigError("finetune_lr must be positive");
  if (!(finetune_lr < base_lr)) {
    throw ConfigError("finetune_lr must be smaller than base_lr");
  }
  if (e1 < 1 || e2 < 1) throw ConfigError("e1 and e2 must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

void ConvergencePolicy::validate() const {
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be >= 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(holdout_fraction > 0.0) || !(holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must be in (0, 1)");
  }
}

std::vector<RoundPlan> build_schedule(const StrategyKind& strategy,
                                      const TrainingProfile& profile,
                                      const ConvergencePolicy& policy) {
  profile.validate();
  policy.validate();

  std::vector<RoundPlan> plans;
  switch (strategy.type) {
    case StrategyType::NaiveCombined:
      plans.push_back({1, {DatasetKind::Combined}, Duration::convergence(), profile.base_lr});
      break;
    case StrategyType::SynOnly:
      plans.push_back({1, {DatasetKind::SynFull}, Duration::convergence(), profile.base_lr});
      break;
    case StrategyType::RealOnly:
      plans.push_back({1, {DatasetKind::RealFull}, Duration::convergence(), profile.base_lr});
      break;
    case StrategyType::TwoStepFT: {
      const DatasetKind first = strategy.direction == Direction::SynToReal
                                    ? DatasetKind::SynFull
                                    : DatasetKind::RealFull;
      const DatasetKind second = strategy.direction == Direction::SynToReal
                                     ? DatasetKind::RealFull
                                     : DatasetKind::SynFull;
      plans.push_back({1, {first}, Duration::fixed(profile.e1), profile.base_lr});
      plans.push_back({2, {second}, Duration::convergence(), profile.finetune_lr});
      break;
    }
    case StrategyType::Progressive: {
      if (strategy.rounds < 2) throw ConfigError("progressive requires at least 2 rounds");
      std::vector<double> ladder = strategy.fractions;
      if (ladder.empty()) {
        if (strategy.rounds != 3) {
          throw ConfigError(
              "progressive with rounds != 3 requires an explicit fraction ladder");
        }
        ladder = {strategy.first_fraction, 1.0};
      }
      if (static_cast<int>(ladder.size()) != strategy.rounds - 1) {
        throw ConfigError("progressive fraction ladder needs rounds-1 entries");
      }
      for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] > 0.0) || ladder[i] > 1.0) {
          throw ConfigError("progressive fractions must lie in (0, 1]");
        }
        if (i > 0 && !(ladder[i] > ladder[i - 1])) {
          throw ConfigError("progressive fractions must be strictly increasing");
        }
      }
      if (ladder.back() != 1.0) {
        throw ConfigError("progressive fraction ladder must end at 1.0");
      }
      for (std::size_t i = 0; i < ladder.size(); ++i) {
        DatasetSpec dataset = ladder[i] == 1.0
                                  ? DatasetSpec{DatasetKind::SynFull, 1.0}
                                  : DatasetSpec{DatasetKind::SynSubset, ladder[i]};
        const int epochs = i == 0 ? profile.e1 : profile.e2;
        plans.push_back({static_cast<int>(i) + 1, dataset, Duration::fixed(epochs),
                         profile.base_lr});
      }
      plans.push_back({strategy.rounds, {DatasetKind::RealFull}, Duration::convergence(),
                       profile.finetune_lr});
      break;
    }
  }
  return plans;
}

SamplePool stage_dataset(const DatasetSpec& spec, const SamplePool& syn, const SamplePool& real,
                         std::size_t target_per_class, std::uint64_t seed) {
  if (target_per_class < 1) throw ConfigError("target_per_class must be >= 1");
  switch (spec.kind) {
    case DatasetKind::SynSubset: {
      SplitResult parts =
          split_balanced_subset(syn, spec.fraction, derive_seed(seed, kSeedSubsetSplit));
      parts.subset.seed = derive_seed(seed, kSeedOversampleSyn);
      return oversample_balance(parts.subset, target_per_class);
    }
    case DatasetKind::SynFull: {
      SamplePool pool = syn;
      pool.seed = derive_seed(seed, kSeedOversampleSyn);
      return oversample_balance(pool, target_per_class);
    }
    case DatasetKind::RealFull: {
      SamplePool pool = real;
      pool.seed = derive_seed(seed, kSeedOversampleReal);
      return oversample_balance(pool, target_per_class);
    }
    case DatasetKind::Combined: {
      SamplePool staged_syn =
          stage_dataset({DatasetKind::SynFull}, syn, real, target_per_class, seed);
      SamplePool staged_real =
          stage_dataset({DatasetKind::RealFull}, syn, real, target_per_class, seed);
      SamplePool out = combine_pools({staged_syn, staged_real});
      out.seed = seed;
      return out;
    }
  }
  throw ConfigError("unknown dataset kind");
}

std::uint64_t iterations_for(std::size_t n_samples, int batch_size, int epochs) {
  if (n_samples == 0 || batch_size < 1 || epochs < 1) {
    throw ConfigError("iterations_for requires positive sample count, batch size and epochs");
  }
  return static_cast<std::uint64_t>(epochs) *
         ceil_div(n_samples, static_cast<std::uint64_t>(batch_size));
}

TrainResult BuiltinTrainer::train_epochs(const SamplePool& pool, int batch_size, double lr,
                                         int epochs, std::uint64_t seed) {
  return curricula::train_epochs(ckpt_, pool, batch_size, lr, epochs, seed);
}

double BuiltinTrainer::evaluate(const SamplePool& pool) { return top1_accuracy(ckpt_, pool); }

void BuiltinTrainer::save(const std::filesystem::path& path) const {
  save_checkpoint(ckpt_, path);
}

void BuiltinTrainer::load(const std::filesystem::path& path) { ckpt_ = load_checkpoint(path); }

void BuiltinTrainer::append_stage(const std::string& strategy, int round_index) {
  ckpt_.lineage.push_back({strategy, round_index});
}

void BuiltinTrainer::reset_optimizer() {
  ckpt_.opt.step_count = 0;
  std::fill(ckpt_.opt.m.begin(), ckpt_.opt.m.end(), 0.0);
  std::fill(ckpt_.opt.v.begin(), ckpt_.opt.v.end(), 0.0);
}

std::string to_json(const RunRecord& record) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const RoundResult& round : record.rounds) {
    rounds.push_back({{"plan", plan_to_json(round.plan)},
                      {"seed", round.seed},
                      {"iterations_executed", round.iterations_executed},
                      {"epochs_executed", round.epochs_executed},
                      {"final_checkpoint", round.final_checkpoint_id}});
  }
  nlohmann::json doc{{"strategy", record.strategy},
                     {"run_id", record.run_id},
                     {"rounds", rounds},
                     {"total_iterations", record.total_iterations}};
  return doc.dump(2) + "\n";
}

RunRecord parse_run_record(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("run record: ") + e.what());
  }
  RunRecord record;
  try {
    record.strategy = doc.at("strategy").get<std::string>();
    record.run_id = doc.at("run_id").get<std::string>();
    record.total_iterations = doc.at("total_iterations").get<std::uint64_t>();
    for (const auto& node : doc.at("rounds")) {
      RoundResult round;
      round.plan = plan_from_json(node.at("plan"));
      round.seed = node.at("seed").get<std::uint64_t>();
      round.iterations_executed = node.at("iterations_executed").get<std::uint64_t>();
      round.epochs_executed = node.at("epochs_executed").get<int>();
      round.final_checkpoint_id = node.at("final_checkpoint").get<std::string>();
      record.rounds.push_back(std::move(round));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("run record: ") + e.what());
  }
  return record;
}

void save_run_record(const RunRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write run record: " + path.string());
  out << to_json(record);
  if (!out) throw IoError("failed writing run record: " + path.string());
}

RunRecord load_run_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run record: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_record(text);
}

namespace {

class RoundLogger {
 public:
  void open(const std::filesystem::path& path) {
    stream_.emplace(path, std::ios::binary);
    if (!*stream_) throw IoError("cannot write round log: " + path.string());
  }

  void line(const nlohmann::json& record) {
    if (stream_) *stream_ << record.dump() << '\n';
  }

 private:
  std::optional<std::ofstream> stream_;
};

}  // namespace

RunRecord run_schedule(const std::vector<RoundPlan>& plans, const SamplePool& syn,
                       const SamplePool& real, TrainerHandle& trainer,
                       const SamplePool& eval_set, std::uint64_t master_seed,
                       const RunContext& ctx) {
  if (plans.empty()) throw ConfigError("run_schedule requires at least one round");
  if (ctx.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (plans[i].round_index < 1) throw ConfigError("round_index must be >= 1");
    if (i > 0 && plans[i].round_index <= plans[i - 1].round_index) {
      throw ConfigError("round_index must be strictly increasing");
    }
    if (plans[i].duration.until_convergence && i + 1 != plans.size()) {
      throw ConfigError("only the final round may run until convergence");
    }
  }

  RunRecord record;
  record.strategy = ctx.strategy_label;
  record.run_id = ctx.strategy_label + "_seed" + std::to_string(master_seed);

  std::string last_checkpoint;
  std::uint64_t run_iterations = 0;

  for (std::size_t i = 0; i < plans.size(); ++i) {
    const RoundPlan& plan = plans[i];
    const std::uint64_t round_seed =
        derive_seed(master_seed, static_cast<std::uint64_t>(plan.round_index));
    SamplePool staged = stage_dataset(plan.dataset, syn, real, ctx.target_per_class, round_seed);

    if (ctx.reset_optimizer_each_round && i > 0) trainer.reset_optimizer();
    trainer.append_stage(ctx.strategy_label, plan.round_index);

    std::filesystem::path round_dir;
    RoundLogger logger;
    if (!ctx.run_dir.empty()) {
      round_dir = ctx.run_dir / ("round_" + std::to_string(plan.round_index));
      std::filesystem::create_directories(round_dir);
      save_pool(staged, round_dir / "pool.pool");
      logger.open(round_dir / "log.jsonl");
    }

    const std::uint64_t train_seed = derive_seed(round_seed, kSeedTrain);
    std::uint64_t round_iterations = 0;
    int round_epochs = 0;

    // Trains `epochs` epochs and logs one line per epoch with its mean loss.
    auto train_chunk = [&](const SamplePool& pool, int epochs) {
      const std::uint64_t per_epoch =
          ceil_div(pool.size(), static_cast<std::uint64_t>(ctx.batch_size));
      TrainResult result =
          trainer.train_epochs(pool, ctx.batch_size, plan.learning_rate, epochs, train_seed);
      for (int e = 0; e < epochs; ++e) {
        double sum = 0.0;
        for (std::uint64_t k = 0; k < per_epoch; ++k) {
          sum += result.loss_trace[static_cast<std::size_t>(e) * per_epoch + k];
        }
        run_iterations += per_epoch;
        logger.line({{"round", plan.round_index},
                     {"epoch", round_epochs + e + 1},
                     {"iteration", run_iterations},
                     {"loss", sum / static_cast<double>(per_epoch)}});
      }
      round_iterations += result.iterations;
      round_epochs += epochs;
    };

    try {
      if (plan.duration.until_convergence) {
        ctx.policy.validate();
        SplitResult parts = split_balanced_subset(staged, ctx.policy.holdout_fraction,
                                                  derive_seed(round_seed, kSeedHoldout));
        if (parts.subset.empty() || parts.remainder.empty()) {
          throw ConfigError("holdout split left an empty pool; adjust holdout_fraction");
        }
        const SamplePool& holdout = parts.subset;
        const SamplePool& train_pool = parts.remainder;
        const std::uint64_t per_epoch =
            ceil_div(train_pool.size(), static_cast<std::uint64_t>(ctx.batch_size));
        const int stride =
            ctx.policy.eval_every == 0
                ? 1
                : static_cast<int>(std::max<std::uint64_t>(
                      1, ceil_div(ctx.policy.eval_every, per_epoch)));
        double best = -std::numeric_limits<double>::infinity();
        int stale = 0;
        while (round_epochs < ctx.policy.max_epochs && stale < ctx.policy.patience) {
          const int chunk = std::min(stride, ctx.policy.max_epochs - round_epochs);
          train_chunk(train_pool, chunk);
          const double accuracy = trainer.evaluate(holdout);
          logger.line({{"round", plan.round_index},
                       {"epoch", round_epochs},
                       {"iteration", run_iterations},
                       {"holdout_accuracy", accuracy}});
          if (accuracy > best + ctx.policy.min_delta) {
            best = accuracy;
            stale = 0;
          } else {
            ++stale;
          }
        }
      } else {
        train_chunk(staged, plan.duration.epochs);
      }

      if (!round_dir.empty()) {
        trainer.save(round_dir / "checkpoint.ckpt");
        last_checkpoint = "round_" + std::to_string(plan.round_index) + "/checkpoint.ckpt";
      }
      if (!eval_set.empty()) {
        logger.line({{"round", plan.round_index},
                     {"event", "round_end"},
                     {"epochs", round_epochs},
                     {"iteration", run_iterations},
                     {"eval_accuracy", trainer.evaluate(eval_set)}});
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Trainer || e.code() == ErrorCode::NonFinite) {
        throw TrainerError("round " + std::to_string(plan.round_index) + " aborted: " +
                           e.what() + "; last durable checkpoint: " +
                           (last_checkpoint.empty() ? "none" : last_checkpoint));
      }
      throw;
    }

    RoundResult result;
    result.plan = plan;
    result.seed = round_seed;
    result.iterations_executed = round_iterations;
    result.epochs_executed = round_epochs;
    result.final_checkpoint_id = round_dir.empty() ? "" : last_checkpoint;
    record.total_iterations += round_iterations;
    record.rounds.push_back(std::move(result));
  }

  if (!ctx.run_dir.empty()) save_run_record(record, ctx.run_dir / "run_record.json");
  return record;
}

}  // namespace curricula
