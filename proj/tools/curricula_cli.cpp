#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "curricula.h"

namespace {

struct GlobalArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  CLI::Option* seed_opt = nullptr;

  int has_seed() const { return seed_opt != nullptr && seed_opt->count() > 0 ? 1 : 0; }
  const char* out_ptr() const { return out.empty() ? nullptr : out.c_str(); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum training over synthetic and real action-recognition domains"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs args;
  app.add_option("--config", args.config, "Run configuration file");
  args.seed_opt = app.add_option("--seed", args.seed, "Master seed override");
  app.add_option("--out", args.out, "Output directory override");
  app.add_flag("--force", args.force, "Overwrite existing outputs");

  auto* prepare = app.add_subcommand("prepare", "Window, filter and balance domain pools");

  std::string bench_spec;
  auto* bench = app.add_subcommand("bench", "Generate a benchmark bundle from a spec file");
  bench->add_option("spec", bench_spec, "Benchmark spec JSON")->required();

  std::string strategy;
  std::string direction;
  auto* run = app.add_subcommand("run", "Execute one training strategy end to end");
  run->add_option("--strategy", strategy, "naive_combined, two_step_ft, progressive, syn_only or real_only")
      ->required();
  run->add_option("--direction", direction, "two_step_ft order: s_to_r or r_to_s")
      ->check(CLI::IsMember({"s_to_r", "r_to_s"}));

  std::string base_label;
  std::vector<std::string> run_dirs;
  auto* compare = app.add_subcommand("compare", "Evaluate run directories against a baseline");
  compare->add_option("--base", base_label, "Strategy label used as the baseline")->required();
  compare->add_option("run_dirs", run_dirs, "Run directories to compare")->required();

  std::string report_json;
  std::string format = "all";
  auto* report = app.add_subcommand("report", "Re-render tables and plots from a report");
  report->add_option("report", report_json, "Existing report.json")->required();
  report->add_option("--format", format, "md, csv, json or all")
      ->check(CLI::IsMember({"md", "csv", "json", "all"}));

  CLI11_PARSE(app, argc, argv);

  if (args.config.empty() && (prepare->parsed() || run->parsed() || compare->parsed())) {
    std::fprintf(stderr, "%s: --config is required\n",
                 app.get_subcommands().front()->get_name().c_str());
    return 2;
  }
  const char* config = args.config.empty() ? nullptr : args.config.c_str();
  if (prepare->parsed())
    return curr_cmd_prepare(config, args.out_ptr(), args.seed, args.has_seed(), args.force);
  if (bench->parsed())
    return curr_cmd_bench(bench_spec.c_str(), args.out_ptr(), args.seed, args.has_seed(),
                          args.force);
  if (run->parsed())
    return curr_cmd_run(config, strategy.c_str(), direction.c_str(), args.out_ptr(), args.seed,
                        args.has_seed(), args.force);
  if (compare->parsed()) {
    std::vector<const char*> dirs;
    dirs.reserve(run_dirs.size());
    for (const auto& dir : run_dirs) dirs.push_back(dir.c_str());
    return curr_cmd_compare(config, base_label.c_str(), dirs.data(), dirs.size(),
                            args.out_ptr(), args.force);
  }
  return curr_cmd_report(report_json.c_str(), format.c_str(), args.out_ptr(), args.force);
}
