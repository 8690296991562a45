#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "curricula/curriculum.hpp"
#include "curricula/errors.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace curricula;

namespace {

fs::path temp_dir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / "curricula_curriculum_tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 12 classes x per_class singleton identities with separable features.
SamplePool domain_pool(const std::string& prefix, int per_class, std::uint64_t seed) {
  SamplePool pool;
  pool.seed = seed;
  Rng rng(seed);
  for (int label = 0; label < 12; ++label) {
    for (int i = 0; i < per_class; ++i) {
      TrainingSample sample;
      sample.clip_id = prefix + "_c" + std::to_string(label) + "_" + std::to_string(i);
      sample.start_frame = 0;
      sample.label = label;
      sample.features.assign(4, 0.0);
      sample.features[static_cast<std::size_t>(label % 4)] = label < 6 ? 2.0 : -2.0;
      for (double& value : sample.features) value += 0.05 * rng.next_normal();
      pool.samples.push_back(std::move(sample));
    }
  }
  return pool;
}

TrainingProfile test_profile() { return {"test", 0.02, 0.004, 2, 1, 8}; }

ConvergencePolicy test_policy() {
  ConvergencePolicy policy;
  policy.eval_every = 0;
  policy.patience = 2;
  policy.min_delta = 0.01;
  policy.max_epochs = 50;
  policy.holdout_fraction = 0.2;
  return policy;
}

struct TrainCall {
  std::size_t pool_size = 0;
  int batch_size = 0;
  double lr = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
};

// Scripted trainer: records every call and replays canned accuracies, so the
// scheduling loop can be checked without real optimization.
class MockTrainer final : public TrainerHandle {
 public:
  std::vector<TrainCall> calls;
  std::vector<double> eval_script;
  std::vector<std::size_t> eval_sizes;
  std::vector<LineageStage> stages;
  int resets = 0;
  int throw_at_call = -1;  // 1-based train_epochs call index; -1 = never

  TrainResult train_epochs(const SamplePool& pool, int batch_size, double lr, int epochs,
                           std::uint64_t seed) override {
    calls.push_back({pool.size(), batch_size, lr, epochs, seed});
    if (throw_at_call > 0 && static_cast<int>(calls.size()) >= throw_at_call) {
      throw NonFiniteError("scripted blow-up");
    }
    const std::uint64_t per_epoch =
        (pool.size() + static_cast<std::size_t>(batch_size) - 1) /
        static_cast<std::size_t>(batch_size);
    TrainResult result;
    result.iterations = per_epoch * static_cast<std::uint64_t>(epochs);
    result.loss_trace.assign(result.iterations, 1.0);
    return result;
  }

  double evaluate(const SamplePool& pool) override {
    eval_sizes.push_back(pool.size());
    const std::size_t i = eval_sizes.size() - 1;
    return i < eval_script.size() ? eval_script[i] : eval_script.back();
  }

  void save(const fs::path& path) const override { std::ofstream(path) << "mock"; }
  void load(const fs::path&) override {}
  void append_stage(const std::string& strategy, int round_index) override {
    stages.push_back({strategy, round_index});
  }
  void reset_optimizer() override { ++resets; }
};

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("strategy labels and parsing") {
  CHECK(StrategyKind::naive_combined().label() == "naive_combined");
  CHECK(StrategyKind::two_step_ft(Direction::SynToReal).label() == "two_step_ft_s_to_r");
  CHECK(StrategyKind::two_step_ft(Direction::RealToSyn).label() == "two_step_ft_r_to_s");
  CHECK(StrategyKind::progressive().label() == "progressive");
  CHECK(StrategyKind::syn_only().label() == "syn_only");
  CHECK(StrategyKind::real_only().label() == "real_only");

  for (const char* alias : {"naive", "naive_combined", "combined"}) {
    CHECK(parse_strategy(alias).type == StrategyType::NaiveCombined);
  }
  CHECK(parse_strategy("two_step_ft").direction == Direction::SynToReal);
  CHECK(parse_strategy("two_step_ft_r_to_s").direction == Direction::RealToSyn);
  CHECK(parse_strategy("syn_only").type == StrategyType::SynOnly);
  CHECK(parse_strategy("real_only").type == StrategyType::RealOnly);
  CHECK_THROWS_AS(parse_strategy("curriculum"), ParseError);

  StrategyKind defaults = StrategyKind::progressive(4);
  defaults.fractions = {0.2, 0.6, 1.0};
  StrategyKind parsed = parse_strategy("progressive", defaults);
  CHECK(parsed.type == StrategyType::Progressive);
  CHECK(parsed.rounds == 4);
  CHECK(parsed.fractions == std::vector<double>{0.2, 0.6, 1.0});

  CHECK(parse_direction("s_to_r") == Direction::SynToReal);
  CHECK(parse_direction("real_to_syn") == Direction::RealToSyn);
  CHECK_THROWS_AS(parse_direction("up"), ParseError);
}

TEST_CASE("single-round strategies train one pool to convergence at base lr") {
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();

  for (auto [kind, dataset] :
       std::vector<std::pair<StrategyKind, DatasetKind>>{
           {StrategyKind::naive_combined(), DatasetKind::Combined},
           {StrategyKind::syn_only(), DatasetKind::SynFull},
           {StrategyKind::real_only(), DatasetKind::RealFull}}) {
    std::vector<RoundPlan> plans = build_schedule(kind, profile, policy);
    REQUIRE(plans.size() == 1);
    CHECK(plans[0].round_index == 1);
    CHECK(plans[0].dataset.kind == dataset);
    CHECK(plans[0].duration == Duration::convergence());
    CHECK(plans[0].learning_rate == profile.base_lr);
  }
}

TEST_CASE("two-step schedule pretrains fixed then fine-tunes to convergence") {
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();

  std::vector<RoundPlan> sr =
      build_schedule(StrategyKind::two_step_ft(Direction::SynToReal), profile, policy);
  REQUIRE(sr.size() == 2);
  CHECK(sr[0].dataset.kind == DatasetKind::SynFull);
  CHECK(sr[0].duration == Duration::fixed(profile.e1));
  CHECK(sr[0].learning_rate == profile.base_lr);
  CHECK(sr[1].dataset.kind == DatasetKind::RealFull);
  CHECK(sr[1].duration == Duration::convergence());
  CHECK(sr[1].learning_rate == profile.finetune_lr);

  std::vector<RoundPlan> rs =
      build_schedule(StrategyKind::two_step_ft(Direction::RealToSyn), profile, policy);
  CHECK(rs[0].dataset.kind == DatasetKind::RealFull);
  CHECK(rs[1].dataset.kind == DatasetKind::SynFull);
}

TEST_CASE("progressive schedule expands the pretraining pool before transfer") {
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();

  std::vector<RoundPlan> plans =
      build_schedule(StrategyKind::progressive(), profile, policy);
  REQUIRE(plans.size() == 3);
  CHECK(plans[0].dataset == DatasetSpec{DatasetKind::SynSubset, 0.5});
  CHECK(plans[0].duration == Duration::fixed(profile.e1));
  CHECK(plans[0].learning_rate == profile.base_lr);
  CHECK(plans[1].dataset.kind == DatasetKind::SynFull);
  CHECK(plans[1].duration == Duration::fixed(profile.e2));
  CHECK(plans[1].learning_rate == profile.base_lr);
  CHECK(plans[2].dataset.kind == DatasetKind::RealFull);
  CHECK(plans[2].duration == Duration::convergence());
  CHECK(plans[2].learning_rate == profile.finetune_lr);

  StrategyKind four = StrategyKind::progressive(4);
  four.fractions = {0.25, 0.5, 1.0};
  std::vector<RoundPlan> longer = build_schedule(four, profile, policy);
  REQUIRE(longer.size() == 4);
  CHECK(longer[0].dataset == DatasetSpec{DatasetKind::SynSubset, 0.25});
  CHECK(longer[1].dataset == DatasetSpec{DatasetKind::SynSubset, 0.5});
  CHECK(longer[1].duration == Duration::fixed(profile.e2));
  CHECK(longer[2].dataset.kind == DatasetKind::SynFull);
  CHECK(longer[3].dataset.kind == DatasetKind::RealFull);
  CHECK(longer[3].duration == Duration::convergence());
}

TEST_CASE("schedule construction rejects inconsistent inputs") {
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();

  CHECK_THROWS_AS(build_schedule(StrategyKind::progressive(1), profile, policy), ConfigError);
  CHECK_THROWS_AS(build_schedule(StrategyKind::progressive(4), profile, policy), ConfigError);

  StrategyKind short_ladder = StrategyKind::progressive(4);
  short_ladder.fractions = {0.5, 1.0};
  CHECK_THROWS_AS(build_schedule(short_ladder, profile, policy), ConfigError);

  StrategyKind not_increasing = StrategyKind::progressive(4);
  not_increasing.fractions = {0.5, 0.5, 1.0};
  CHECK_THROWS_AS(build_schedule(not_increasing, profile, policy), ConfigError);

  StrategyKind open_ladder = StrategyKind::progressive(4);
  open_ladder.fractions = {0.2, 0.5, 0.9};
  CHECK_THROWS_AS(build_schedule(open_ladder, profile, policy), ConfigError);

  StrategyKind out_of_range = StrategyKind::progressive(3);
  out_of_range.fractions = {1.5, 1.0};
  CHECK_THROWS_AS(build_schedule(out_of_range, profile, policy), ConfigError);

  TrainingProfile inverted = profile;
  inverted.finetune_lr = profile.base_lr;
  CHECK_THROWS_AS(build_schedule(StrategyKind::naive_combined(), inverted, policy),
                  ConfigError);
  TrainingProfile no_epochs = profile;
  no_epochs.e2 = 0;
  CHECK_THROWS_AS(build_schedule(StrategyKind::naive_combined(), no_epochs, policy),
                  ConfigError);
  TrainingProfile nameless = profile;
  nameless.name.clear();
  CHECK_THROWS_AS(build_schedule(StrategyKind::naive_combined(), nameless, policy),
                  ConfigError);

  ConvergencePolicy bad = policy;
  bad.patience = 0;
  CHECK_THROWS_AS(build_schedule(StrategyKind::naive_combined(), profile, bad), ConfigError);
  bad = policy;
  bad.holdout_fraction = 1.0;
  CHECK_THROWS_AS(build_schedule(StrategyKind::naive_combined(), profile, bad), ConfigError);
  bad = policy;
  bad.min_delta = -0.1;
  CHECK_THROWS_AS(build_schedule(StrategyKind::naive_combined(), profile, bad), ConfigError);
}

TEST_CASE("iterations_for rounds partial batches up") {
  CHECK(iterations_for(480, 32, 1) == 15);
  CHECK(iterations_for(960, 32, 1) == 30);
  CHECK(iterations_for(10, 4, 3) == 9);
  CHECK(iterations_for(100, 7, 2) == 30);
  CHECK(iterations_for(1, 32, 5) == 5);
  CHECK_THROWS_AS(iterations_for(0, 32, 1), ConfigError);
  CHECK_THROWS_AS(iterations_for(10, 0, 1), ConfigError);
  CHECK_THROWS_AS(iterations_for(10, 32, 0), ConfigError);
}

TEST_CASE("stage_dataset oversamples each class exactly to target") {
  SamplePool syn = domain_pool("syn", 5, 1);
  SamplePool real = domain_pool("real", 5, 2);

  SamplePool staged = stage_dataset({DatasetKind::SynFull}, syn, real, 8, 77);
  CHECK(staged.size() == 96);
  for (const auto& [label, count] : staged.class_counts()) CHECK(count == 8);
  for (const auto& sample : staged.samples) {
    CHECK(sample.clip_id.rfind("syn_", 0) == 0);
  }

  // At or below the existing count the pool passes through unchanged.
  SamplePool untouched = stage_dataset({DatasetKind::SynFull}, syn, real, 4, 77);
  CHECK(untouched.size() == 60);

  SamplePool staged_real = stage_dataset({DatasetKind::RealFull}, syn, real, 8, 77);
  CHECK(staged_real.size() == 96);
  CHECK(staged_real.samples.front().clip_id.rfind("real_", 0) == 0);

  CHECK_THROWS_AS(stage_dataset({DatasetKind::SynFull}, syn, real, 0, 77), ConfigError);
}

TEST_CASE("stage_dataset subset selects identities then rebalances") {
  SamplePool syn = domain_pool("syn", 5, 1);
  SamplePool real = domain_pool("real", 5, 2);

  SamplePool staged = stage_dataset({DatasetKind::SynSubset, 0.4}, syn, real, 8, 31);
  CHECK(staged.size() == 96);
  std::map<int, std::set<std::string>> identities;
  for (const auto& sample : staged.samples) {
    identities[sample.label].insert(sample.clip_id);
  }
  for (const auto& [label, clips] : identities) CHECK(clips.size() == 2);  // 40% of 5

  SamplePool again = stage_dataset({DatasetKind::SynSubset, 0.4}, syn, real, 8, 31);
  std::map<int, std::set<std::string>> identities_again;
  for (const auto& sample : again.samples) {
    identities_again[sample.label].insert(sample.clip_id);
  }
  CHECK(identities == identities_again);

  SamplePool reseeded = stage_dataset({DatasetKind::SynSubset, 0.4}, syn, real, 8, 32);
  std::map<int, std::set<std::string>> identities_reseeded;
  for (const auto& sample : reseeded.samples) {
    identities_reseeded[sample.label].insert(sample.clip_id);
  }
  CHECK(identities != identities_reseeded);
}

TEST_CASE("stage_dataset combined concatenates both balanced domains") {
  SamplePool syn = domain_pool("syn", 3, 1);
  SamplePool real = domain_pool("real", 5, 2);

  SamplePool staged = stage_dataset({DatasetKind::Combined}, syn, real, 5, 9);
  CHECK(staged.size() == 120);  // 12 * 5 from each domain
  for (const auto& [label, count] : staged.class_counts()) CHECK(count == 10);
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(staged.samples[i].clip_id.rfind("syn_", 0) == 0);
  }
  for (std::size_t i = 60; i < 120; ++i) {
    CHECK(staged.samples[i].clip_id.rfind("real_", 0) == 0);
  }
}

TEST_CASE("run_schedule drives fixed rounds then the convergence loop") {
  SamplePool syn = domain_pool("syn", 5, 1);
  SamplePool real = domain_pool("real", 5, 2);
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();
  std::vector<RoundPlan> plans =
      build_schedule(StrategyKind::two_step_ft(Direction::SynToReal), profile, policy);

  MockTrainer trainer;
  trainer.eval_script = {0.50, 0.60, 0.60, 0.60};
  RunContext ctx;
  ctx.strategy_label = "two_step_ft_s_to_r";
  ctx.batch_size = profile.batch_size;
  ctx.target_per_class = 5;
  ctx.policy = policy;

  RunRecord record = run_schedule(plans, syn, real, trainer, SamplePool{}, 3, ctx);

  // Round 1: one fixed chunk over the full staged pool (60 samples, 8 per batch).
  REQUIRE(trainer.calls.size() >= 1);
  CHECK(trainer.calls[0].pool_size == 60);
  CHECK(trainer.calls[0].epochs == 2);
  CHECK(trainer.calls[0].lr == profile.base_lr);

  // Round 2: holdout 20% (12 of 60), epoch-sized chunks at the finetune lr.
  // Script: improve, improve, stale, stale -> 4 evals with patience 2.
  REQUIRE(trainer.calls.size() == 5);
  for (std::size_t i = 1; i < trainer.calls.size(); ++i) {
    CHECK(trainer.calls[i].pool_size == 48);
    CHECK(trainer.calls[i].epochs == 1);
    CHECK(trainer.calls[i].lr == profile.finetune_lr);
    CHECK(trainer.calls[i].seed == trainer.calls[1].seed);
  }
  CHECK(trainer.calls[0].seed != trainer.calls[1].seed);
  CHECK(trainer.eval_sizes == std::vector<std::size_t>(4, 12));

  REQUIRE(record.rounds.size() == 2);
  CHECK(record.strategy == "two_step_ft_s_to_r");
  CHECK(record.run_id == "two_step_ft_s_to_r_seed3");
  CHECK(record.rounds[0].iterations_executed == 16);  // 2 epochs * ceil(60/8)
  CHECK(record.rounds[0].epochs_executed == 2);
  CHECK(record.rounds[1].iterations_executed == 24);  // 4 epochs * ceil(48/8)
  CHECK(record.rounds[1].epochs_executed == 4);
  CHECK(record.total_iterations == 40);
  CHECK(record.rounds[0].final_checkpoint_id.empty());  // in-memory run
  CHECK(trainer.stages ==
        std::vector<LineageStage>{{"two_step_ft_s_to_r", 1}, {"two_step_ft_s_to_r", 2}});
  CHECK(trainer.resets == 0);

  // Same master seed derives the same per-round seeds on a fresh trainer.
  MockTrainer again;
  again.eval_script = trainer.eval_script;
  run_schedule(plans, syn, real, again, SamplePool{}, 3, ctx);
  CHECK(again.calls[0].seed == trainer.calls[0].seed);
  CHECK(again.calls[1].seed == trainer.calls[1].seed);

  MockTrainer other_seed;
  other_seed.eval_script = trainer.eval_script;
  run_schedule(plans, syn, real, other_seed, SamplePool{}, 4, ctx);
  CHECK(other_seed.calls[0].seed != trainer.calls[0].seed);
}

TEST_CASE("eval_every batches epochs between holdout evaluations") {
  SamplePool syn = domain_pool("syn", 5, 1);
  SamplePool real = domain_pool("real", 5, 2);
  ConvergencePolicy policy = test_policy();
  policy.eval_every = 13;  // per_epoch = 6 -> stride = ceil(13/6) = 3 epochs

  std::vector<RoundPlan> plans{{1, {DatasetKind::RealFull}, Duration::convergence(), 0.01}};
  MockTrainer trainer;
  trainer.eval_script = {0.9};  // improve once, then stale forever
  RunContext ctx;
  ctx.strategy_label = "real_only";
  ctx.batch_size = 8;
  ctx.target_per_class = 5;
  ctx.policy = policy;

  RunRecord record = run_schedule(plans, syn, real, trainer, SamplePool{}, 1, ctx);
  REQUIRE(trainer.calls.size() == 3);
  for (const TrainCall& call : trainer.calls) CHECK(call.epochs == 3);
  CHECK(record.rounds[0].epochs_executed == 9);
  CHECK(trainer.eval_sizes.size() == 3);
}

TEST_CASE("convergence rounds never exceed max_epochs") {
  SamplePool syn = domain_pool("syn", 5, 1);
  SamplePool real = domain_pool("real", 5, 2);

  ConvergencePolicy policy = test_policy();
  policy.max_epochs = 5;
  policy.eval_every = 20;  // stride ceil(20/6) = 4, then a trimmed chunk of 1

  std::vector<RoundPlan> plans{{1, {DatasetKind::RealFull}, Duration::convergence(), 0.01}};
  MockTrainer trainer;
  // Always improving: only the epoch budget can stop the loop.
  trainer.eval_script = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  RunContext ctx;
  ctx.strategy_label = "real_only";
  ctx.batch_size = 8;
  ctx.target_per_class = 5;
  ctx.policy = policy;

  RunRecord record = run_schedule(plans, syn, real, trainer, SamplePool{}, 1, ctx);
  CHECK(record.rounds[0].epochs_executed == 5);
  REQUIRE(trainer.calls.size() == 2);
  CHECK(trainer.calls[0].epochs == 4);
  CHECK(trainer.calls[1].epochs == 1);
}

TEST_CASE("optimizer reset ablation fires at round boundaries only") {
  SamplePool syn = domain_pool("syn", 5, 1);
  SamplePool real = domain_pool("real", 5, 2);
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();
  std::vector<RoundPlan> plans =
      build_schedule(StrategyKind::progressive(), profile, policy);

  MockTrainer trainer;
  trainer.eval_script = {0.5, 0.5, 0.5};
  RunContext ctx;
  ctx.strategy_label = "progressive";
  ctx.batch_size = 8;
  ctx.target_per_class = 5;
  ctx.policy = policy;
  ctx.reset_optimizer_each_round = true;

  run_schedule(plans, syn, real, trainer, SamplePool{}, 1, ctx);
  CHECK(trainer.resets == 2);  // rounds 2 and 3, never before round 1
  REQUIRE(trainer.stages.size() == 3);
  CHECK(trainer.stages[2].round_index == 3);
}

TEST_CASE("run_schedule validates plan lists") {
  SamplePool syn = domain_pool("syn", 5, 1);
  SamplePool real = domain_pool("real", 5, 2);
  MockTrainer trainer;
  trainer.eval_script = {0.5};
  RunContext ctx;
  ctx.strategy_label = "x";
  ctx.batch_size = 8;
  ctx.target_per_class = 5;
  ctx.policy = test_policy();

  CHECK_THROWS_AS(run_schedule({}, syn, real, trainer, SamplePool{}, 1, ctx), ConfigError);

  std::vector<RoundPlan> zero_index{{0, {DatasetKind::SynFull}, Duration::fixed(1), 0.01}};
  CHECK_THROWS_AS(run_schedule(zero_index, syn, real, trainer, SamplePool{}, 1, ctx),
                  ConfigError);

  std::vector<RoundPlan> unordered{{2, {DatasetKind::SynFull}, Duration::fixed(1), 0.01},
                                   {1, {DatasetKind::RealFull}, Duration::fixed(1), 0.01}};
  CHECK_THROWS_AS(run_schedule(unordered, syn, real, trainer, SamplePool{}, 1, ctx),
                  ConfigError);

  std::vector<RoundPlan> mid_convergence{
      {1, {DatasetKind::SynFull}, Duration::convergence(), 0.01},
      {2, {DatasetKind::RealFull}, Duration::fixed(1), 0.01}};
  CHECK_THROWS_AS(run_schedule(mid_convergence, syn, real, trainer, SamplePool{}, 1, ctx),
                  ConfigError);
}

TEST_CASE("trainer failures surface the last durable checkpoint") {
  SamplePool syn = domain_pool("syn", 5, 1);
  SamplePool real = domain_pool("real", 5, 2);
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();
  std::vector<RoundPlan> plans =
      build_schedule(StrategyKind::two_step_ft(Direction::SynToReal), profile, policy);

  RunContext ctx;
  ctx.strategy_label = "two_step_ft_s_to_r";
  ctx.batch_size = 8;
  ctx.target_per_class = 5;
  ctx.policy = policy;

  SUBCASE("with artifacts the message names the surviving round") {
    ctx.run_dir = temp_dir("abort_with_artifacts");
    MockTrainer trainer;
    trainer.eval_script = {0.5};
    trainer.throw_at_call = 2;  // first chunk of round 2
    try {
      run_schedule(plans, syn, real, trainer, SamplePool{}, 1, ctx);
      FAIL("expected TrainerError");
    } catch (const TrainerError& e) {
      std::string what = e.what();
      CHECK(what.find("round 2 aborted") != std::string::npos);
      CHECK(what.find("round_1/checkpoint.ckpt") != std::string::npos);
      CHECK(e.code() == ErrorCode::Trainer);
    }
    CHECK(fs::exists(ctx.run_dir / "round_1" / "checkpoint.ckpt"));
  }

  SUBCASE("in-memory runs report no durable checkpoint") {
    MockTrainer trainer;
    trainer.eval_script = {0.5};
    trainer.throw_at_call = 1;
    try {
      run_schedule(plans, syn, real, trainer, SamplePool{}, 1, ctx);
      FAIL("expected TrainerError");
    } catch (const TrainerError& e) {
      CHECK(std::string(e.what()).find("none") != std::string::npos);
    }
  }
}

TEST_CASE("identical in-memory runs are bit-identical") {
  SamplePool syn = domain_pool("syn", 5, 21);
  SamplePool real = domain_pool("real", 5, 22);
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();
  std::vector<RoundPlan> plans =
      build_schedule(StrategyKind::progressive(), profile, policy);

  RunContext ctx;
  ctx.strategy_label = "progressive";
  ctx.batch_size = profile.batch_size;
  ctx.target_per_class = 5;
  ctx.policy = policy;

  BuiltinTrainer first(init_model(Architecture::OneHidden, 4, 900, 6));
  RunRecord record_a = run_schedule(plans, syn, real, first, SamplePool{}, 5, ctx);
  BuiltinTrainer second(init_model(Architecture::OneHidden, 4, 900, 6));
  RunRecord record_b = run_schedule(plans, syn, real, second, SamplePool{}, 5, ctx);

  CHECK(record_a == record_b);
  CHECK(bitwise_equal(first.checkpoint().params, second.checkpoint().params));
  CHECK(first.checkpoint().lineage == second.checkpoint().lineage);

  BuiltinTrainer reseeded(init_model(Architecture::OneHidden, 4, 900, 6));
  RunRecord record_c = run_schedule(plans, syn, real, reseeded, SamplePool{}, 6, ctx);
  CHECK(record_c.run_id != record_a.run_id);
}

TEST_CASE("a schedule suffix resumed from a checkpoint replays identically") {
  SamplePool syn = domain_pool("syn", 5, 31);
  SamplePool real = domain_pool("real", 5, 32);
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();
  std::vector<RoundPlan> plans =
      build_schedule(StrategyKind::two_step_ft(Direction::SynToReal), profile, policy);

  RunContext ctx;
  ctx.strategy_label = "two_step_ft_s_to_r";
  ctx.batch_size = profile.batch_size;
  ctx.target_per_class = 5;
  ctx.policy = policy;

  BuiltinTrainer whole(init_model(Architecture::OneHidden, 4, 71, 6));
  RunRecord whole_record = run_schedule(plans, syn, real, whole, SamplePool{}, 9, ctx);

  // Same schedule, interrupted after round 1 and resumed from the saved
  // checkpoint with the same master seed.
  fs::path dir = temp_dir("resume");
  RunContext save_ctx = ctx;
  save_ctx.run_dir = dir;
  BuiltinTrainer prefix(init_model(Architecture::OneHidden, 4, 71, 6));
  run_schedule({plans[0]}, syn, real, prefix, SamplePool{}, 9, save_ctx);

  BuiltinTrainer suffix(init_model(Architecture::OneHidden, 4, 999, 6));
  suffix.load(dir / "round_1" / "checkpoint.ckpt");
  RunRecord suffix_record = run_schedule({plans[1]}, syn, real, suffix, SamplePool{}, 9, ctx);

  CHECK(bitwise_equal(whole.checkpoint().params, suffix.checkpoint().params));
  CHECK(whole.checkpoint().opt.step_count == suffix.checkpoint().opt.step_count);
  REQUIRE(suffix_record.rounds.size() == 1);
  CHECK(suffix_record.rounds[0].seed == whole_record.rounds[1].seed);
  CHECK(suffix_record.rounds[0].iterations_executed ==
        whole_record.rounds[1].iterations_executed);
}

TEST_CASE("run directories hold pools, logs, checkpoints and the record") {
  SamplePool syn = domain_pool("syn", 5, 41);
  SamplePool real = domain_pool("real", 5, 42);
  SamplePool eval_set = domain_pool("tgt", 2, 43);
  TrainingProfile profile = test_profile();
  ConvergencePolicy policy = test_policy();
  std::vector<RoundPlan> plans =
      build_schedule(StrategyKind::progressive(), profile, policy);

  fs::path dir = temp_dir("artifacts");
  RunContext ctx;
  ctx.strategy_label = "progressive";
  ctx.batch_size = profile.batch_size;
  ctx.target_per_class = 5;
  ctx.policy = policy;
  ctx.run_dir = dir;

  BuiltinTrainer trainer(init_model(Architecture::OneHidden, 4, 5, 6));
  RunRecord record = run_schedule(plans, syn, real, trainer, eval_set, 11, ctx);

  for (int round = 1; round <= 3; ++round) {
    fs::path round_dir = dir / ("round_" + std::to_string(round));
    CHECK(fs::exists(round_dir / "pool.pool"));
    CHECK(fs::exists(round_dir / "checkpoint.ckpt"));
    CHECK(fs::exists(round_dir / "log.jsonl"));
  }
  CHECK(record.rounds[2].final_checkpoint_id == "round_3/checkpoint.ckpt");

  RunRecord reloaded = load_run_record(dir / "run_record.json");
  CHECK(reloaded == record);

  // Log lines are JSON with monotone iteration counters; each round ends
  // with an eval_accuracy event against the provided eval set.
  std::uint64_t last_iteration = 0;
  int round_end_events = 0;
  for (int round = 1; round <= 3; ++round) {
    std::ifstream log(dir / ("round_" + std::to_string(round)) / "log.jsonl");
    std::string line;
    while (std::getline(log, line)) {
      nlohmann::json node = nlohmann::json::parse(line);
      CHECK(node.at("round").get<int>() == round);
      std::uint64_t iteration = node.at("iteration").get<std::uint64_t>();
      CHECK(iteration >= last_iteration);
      last_iteration = iteration;
      if (node.contains("event")) {
        CHECK(node.at("event") == "round_end");
        CHECK(node.contains("eval_accuracy"));
        ++round_end_events;
      } else {
        CHECK((node.contains("loss") || node.contains("holdout_accuracy")));
      }
    }
  }
  CHECK(round_end_events == 3);
  CHECK(last_iteration == record.total_iterations);

  // The staged pool of the final round is loadable and class-balanced.
  std::ifstream pool_file(dir / "round_3" / "pool.pool");
  std::string header;
  std::getline(pool_file, header);
  CHECK(header == "#pool v1");
}

TEST_CASE("run records serialize deterministically and round trip") {
  RunRecord record;
  record.strategy = "progressive";
  record.run_id = "progressive_seed4";
  record.total_iterations = 79;
  record.rounds.push_back({{1, {DatasetKind::SynSubset, 0.5}, Duration::fixed(4), 0.016},
                           11,
                           60,
                           4,
                           "round_1/checkpoint.ckpt"});
  record.rounds.push_back({{2, {DatasetKind::RealFull}, Duration::convergence(), 0.002},
                           12,
                           19,
                           1,
                           "round_2/checkpoint.ckpt"});

  std::string text = to_json(record);
  CHECK(text == to_json(record));
  RunRecord parsed = parse_run_record(text);
  CHECK(parsed == record);

  fs::path path = temp_dir("records") / "run_record.json";
  save_run_record(record, path);
  CHECK(load_run_record(path) == record);

  CHECK_THROWS_AS(parse_run_record("not json"), ParseError);
  CHECK_THROWS_AS(parse_run_record("{\"strategy\": \"x\"}"), ParseError);
  nlohmann::json bad_kind = nlohmann::json::parse(text);
  bad_kind["rounds"][0]["plan"]["dataset"]["kind"] = "mystery";
  CHECK_THROWS_AS(parse_run_record(bad_kind.dump()), ParseError);
  CHECK_THROWS_AS(load_run_record(path.parent_path() / "missing.json"), IoError);
}

TEST_CASE("builtin trainer exposes checkpoint state through the handle") {
  SamplePool pool = domain_pool("d", 3, 51);
  BuiltinTrainer trainer(init_model(Architecture::Linear, 4, 1));
  double before = trainer.evaluate(pool);
  TrainResult result = trainer.train_epochs(pool, 8, 0.05, 10, 3);
  CHECK(result.iterations == 50);
  CHECK(trainer.evaluate(pool) > before);

  trainer.append_stage("unit", 1);
  REQUIRE(trainer.checkpoint().lineage.size() == 1);
  CHECK(trainer.checkpoint().lineage[0] == LineageStage{"unit", 1});

  CHECK(trainer.checkpoint().opt.step_count == 50);
  trainer.reset_optimizer();
  CHECK(trainer.checkpoint().opt.step_count == 0);
  for (double m : trainer.checkpoint().opt.m) CHECK(m == 0.0);

  fs::path path = temp_dir("builtin") / "handle.ckpt";
  trainer.save(path);
  BuiltinTrainer loaded(init_model(Architecture::Linear, 4, 2));
  loaded.load(path);
  CHECK(bitwise_equal(loaded.checkpoint().params, trainer.checkpoint().params));
}
