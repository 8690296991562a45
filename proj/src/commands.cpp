#include "curricula/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "curricula/benchgen.hpp"
#include "curricula/config.hpp"
#include "curricula/curriculum.hpp"
#include "curricula/errors.hpp"
#include "curricula/log.hpp"
#include "curricula/metrics_report.hpp"

namespace curricula {

namespace {

constexpr std::uint64_t kSeedPoolSyn = 0xda7a0001ULL;
constexpr std::uint64_t kSeedPoolReal = 0xda7a0002ULL;
constexpr std::uint64_t kSeedPoolTarget = 0xda7a0003ULL;
constexpr std::uint64_t kSeedModelInit = 0x1417ULL;

void require_writable(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw ConfigError(path.string() + " exists; pass --force to overwrite");
  }
}

RunConfig load_config_with_overrides(const std::filesystem::path& config_path,
                                     const CliOverrides& overrides) {
  RunConfig config = load_run_config(config_path);
  if (overrides.seed) config.master_seed = *overrides.seed;
  if (overrides.out) config.out_dir = *overrides.out;
  return config;
}

struct DataBundle {
  DatasetManifest syn;
  DatasetManifest real;
  DatasetManifest target;
  std::unique_ptr<SidecarFeatureSource> features;
  SamplePool syn_pool;
  SamplePool real_pool;
  SamplePool target_pool;
};

DatasetManifest load_domain_manifest(const std::filesystem::path& path,
                                     const std::vector<ActionClass>& registry,
                                     DomainTag expected) {
  if (!std::filesystem::exists(path)) {
    throw IoError("missing manifest: " + path.string());
  }
  DatasetManifest manifest = load_manifest(path, registry);
  for (const ClipRecord& record : manifest.records()) {
    if (record.domain != expected) {
      throw ValidationError(path.string() + ": clip '" + record.clip_id + "' has domain " +
                            to_string(record.domain) + ", expected " + to_string(expected));
    }
  }
  return manifest;
}

SamplePool build_raw_pool(const DatasetManifest& manifest, const RunConfig& config,
                          FeatureSource& source, const std::string& name,
                          std::uint64_t seed_tag) {
  SamplePool pool;
  pool.samples = build_sample_set(manifest, config.windowing, source);
  pool.seed = derive_seed(config.master_seed, seed_tag);
  pool.lineage.push_back("windowed " + name + " samples=" + std::to_string(pool.size()));
  return pool;
}

DataBundle load_data(const RunConfig& config) {
  DataBundle data;
  std::vector<ActionClass> registry = canonical_classes();
  const std::filesystem::path registry_path = config.data_dir / "classes.tsv";
  if (std::filesystem::exists(registry_path)) registry = load_class_registry(registry_path);

  data.syn = load_domain_manifest(config.data_dir / "syn_aerial.manifest", registry,
                                  DomainTag::SyntheticAerial);
  data.real = load_domain_manifest(config.data_dir / "real_ground.manifest", registry,
                                   DomainTag::RealGround);
  data.target = load_domain_manifest(config.data_dir / "target_test.manifest", registry,
                                     DomainTag::RealAerial);
  data.features = std::make_unique<SidecarFeatureSource>(config.data_dir / "features");
  data.syn_pool =
      build_raw_pool(data.syn, config, *data.features, "syn_aerial.manifest", kSeedPoolSyn);
  data.real_pool =
      build_raw_pool(data.real, config, *data.features, "real_ground.manifest", kSeedPoolReal);
  data.target_pool = build_raw_pool(data.target, config, *data.features,
                                    "target_test.manifest", kSeedPoolTarget);
  if (data.syn_pool.empty() || data.real_pool.empty() || data.target_pool.empty()) {
    throw ValidationError("a domain produced no training samples after windowing");
  }
  return data;
}

void print_pool_summary(const std::string& name, const SamplePool& pool) {
  std::map<int, std::size_t> counts = pool.class_counts();
  std::string line = name + ": total=" + std::to_string(pool.size()) + ", per_class={";
  bool first = true;
  for (const auto& [label, count] : counts) {
    if (!first) line += ", ";
    line += std::to_string(label) + ":" + std::to_string(count);
    first = false;
  }
  line += "}";
  std::cout << line << "\n";
}

int exit_code_for(const Error& error) {
  switch (error.code()) {
    case ErrorCode::Trainer:
    case ErrorCode::NonFinite:
      return kExitTraining;
    default:
      return kExitInput;
  }
}

}  // namespace

int cmd_prepare(const std::filesystem::path& config_path, const CliOverrides& overrides) {
  try {
    RunConfig config = load_config_with_overrides(config_path, overrides);
    const std::filesystem::path out_dir = config.out_dir / "prepared";
    const std::filesystem::path syn_path = out_dir / "syn_aerial.pool";
    const std::filesystem::path real_path = out_dir / "real_ground.pool";
    const std::filesystem::path target_path = out_dir / "target_test.pool";
    require_writable(syn_path, overrides.force);
    require_writable(real_path, overrides.force);
    require_writable(target_path, overrides.force);

    DataBundle data = load_data(config);
    SamplePool syn_balanced = oversample_balance(data.syn_pool, config.target_per_class);
    SamplePool real_balanced = oversample_balance(data.real_pool, config.target_per_class);

    std::filesystem::create_directories(out_dir);
    save_pool(syn_balanced, syn_path);
    save_pool(real_balanced, real_path);
    // The held-out test pool is archived unbalanced; oversampling an
    // evaluation set would skew its class weights.
    save_pool(data.target_pool, target_path);

    print_pool_summary("syn_aerial", syn_balanced);
    print_pool_summary("real_ground", real_balanced);
    print_pool_summary("target_test", data.target_pool);
    return kExitOk;
  } catch (const Error& e) {
    log_error(e.what());
    return kExitInput;
  }
}

int cmd_bench(const std::filesystem::path& spec_path, const CliOverrides& overrides) {
  try {
    if (!overrides.out) throw ConfigError("bench requires --out <dir>");
    BenchmarkSpec spec = load_benchmark_spec(spec_path);
    if (overrides.seed) spec.seed = *overrides.seed;
    require_writable(*overrides.out / "spec.json", overrides.force);
    BenchmarkBundle bundle = generate_benchmark(spec);
    emit_bundle(bundle, *overrides.out);
    std::cout << "benchmark: " << bundle.syn_pool.size() << " syn, " << bundle.real_pool.size()
              << " real, " << bundle.target_pool.size() << " target samples in "
              << overrides.out->string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    log_error(e.what());
    return kExitInput;
  }
}

int cmd_run(const std::filesystem::path& config_path, const std::string& strategy,
            const std::string& direction, const CliOverrides& overrides) {
  std::filesystem::path run_dir;
  try {
    RunConfig config = load_config_with_overrides(config_path, overrides);
    StrategyKind kind = parse_strategy(strategy, config.progressive);
    if (!direction.empty()) {
      if (kind.type != StrategyType::TwoStepFT) {
        throw ConfigError("--direction applies only to two_step_ft");
      }
      kind.direction = parse_direction(direction);
    }

    const std::string run_id = kind.label() + "_seed" + std::to_string(config.master_seed);
    run_dir = config.out_dir / run_id;
    require_writable(run_dir / "run_record.json", overrides.force);

    DataBundle data = load_data(config);
    std::filesystem::create_directories(run_dir);
    {
      std::ofstream out(run_dir / "effective_config.json", std::ios::binary);
      if (!out) throw IoError("cannot write effective config");
      out << dump_run_config(config);
    }

    std::vector<RoundPlan> plans = build_schedule(kind, config.profile, config.convergence);
    BuiltinTrainer trainer(init_model(config.arch, data.features->dimension(),
                                      derive_seed(config.master_seed, kSeedModelInit),
                                      config.hidden));
    RunContext ctx;
    ctx.strategy_label = kind.label();
    ctx.batch_size = config.profile.batch_size;
    ctx.target_per_class = config.target_per_class;
    ctx.policy = config.convergence;
    ctx.run_dir = run_dir;
    ctx.reset_optimizer_each_round = config.reset_optimizer_each_round;

    RunRecord record = run_schedule(plans, data.syn_pool, data.real_pool, trainer,
                                    data.target_pool, config.master_seed, ctx);
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.4f", trainer.evaluate(data.target_pool));
    std::cout << "run " << record.run_id << ": rounds=" << record.rounds.size()
              << " iterations=" << record.total_iterations << " target_top1=" << buffer << "\n";
    return kExitOk;
  } catch (const Error& e) {
    log_error(e.what());
    const int code = exit_code_for(e);
    if (code == kExitTraining && !run_dir.empty()) {
      log_warn("partial artifacts kept in " + run_dir.string());
    }
    return code;
  }
}

int cmd_compare(const std::filesystem::path& config_path, const std::string& base_label,
                const std::vector<std::filesystem::path>& run_dirs,
                const CliOverrides& overrides) {
  RunConfig config;
  DataBundle data;
  std::filesystem::path out_dir;
  try {
    config = load_config_with_overrides(config_path, overrides);
    out_dir = (overrides.out ? *overrides.out : config.out_dir / "report");
    require_writable(out_dir / "report.json", overrides.force);
    if (run_dirs.size() < 2) throw ConfigError("compare needs at least two run directories");
    data = load_data(config);
  } catch (const Error& e) {
    log_error(e.what());
    return kExitInput;
  }

  try {
    std::vector<StrategyOutcome> entries;
    for (const std::filesystem::path& dir : run_dirs) {
      RunRecord record = load_run_record(dir / "run_record.json");
      if (record.rounds.empty() || record.rounds.back().final_checkpoint_id.empty()) {
        throw IntegrityError(dir.string() + ": run record lists no final checkpoint");
      }
      const std::filesystem::path ckpt_path = dir / record.rounds.back().final_checkpoint_id;
      if (!std::filesystem::exists(ckpt_path)) {
        throw IntegrityError(dir.string() + ": missing final checkpoint " +
                             record.rounds.back().final_checkpoint_id);
      }
      ModelCheckpoint ckpt = load_checkpoint(ckpt_path);
      EvalResult eval = evaluate(ckpt, data.target_pool);
      StrategyOutcome entry;
      entry.label = record.strategy;
      entry.total_iterations = record.total_iterations;
      entry.top1 = eval.top1;
      entry.eval = std::move(eval);
      entries.push_back(std::move(entry));
    }

    EfficiencyReport report = build_efficiency_report(entries, base_label);
    std::filesystem::create_directories(out_dir);
    save_report(report, out_dir / "report.json");
    {
      std::ofstream csv(out_dir / "report.csv", std::ios::binary);
      csv << render_table(report, TableFormat::Csv);
      std::ofstream md(out_dir / "report.md", std::ios::binary);
      md << render_table(report, TableFormat::Markdown);
      if (!csv || !md) throw IoError("failed writing report tables");
    }
    render_plots(report, out_dir / "plots");
    std::cout << render_table(report, TableFormat::Markdown);
    return kExitOk;
  } catch (const Error& e) {
    log_error(e.what());
    return kExitCompare;
  }
}

int cmd_report(const std::filesystem::path& report_json, const std::string& format,
               const CliOverrides& overrides) {
  try {
    EfficiencyReport report = load_report(report_json);
    const std::filesystem::path out_dir =
        overrides.out ? *overrides.out : report_json.parent_path();
    std::filesystem::create_directories(out_dir);

    std::vector<std::pair<TableFormat, std::string>> jobs;
    if (format == "md" || format == "all") jobs.emplace_back(TableFormat::Markdown, "report.md");
    if (format == "csv" || format == "all") jobs.emplace_back(TableFormat::Csv, "report.csv");
    if (format == "json" || format == "all") {
      jobs.emplace_back(TableFormat::Json, "report.json");
    }
    if (jobs.empty()) throw ConfigError("unknown report format '" + format + "'");

    for (const auto& [table_format, name] : jobs) {
      const std::filesystem::path path = out_dir / name;
      if (std::filesystem::exists(path) &&
          std::filesystem::equivalent(path, report_json)) {
        throw ConfigError("refusing to overwrite the input " + path.string());
      }
      require_writable(path, overrides.force);
      std::ofstream out(path, std::ios::binary);
      if (!out) throw IoError("cannot write " + path.string());
      out << render_table(report, table_format);
    }
    render_plots(report, out_dir / "plots");
    return kExitOk;
  } catch (const Error& e) {
    log_error(e.what());
    return kExitInput;
  }
}

}  // namespace curricula
