// Sweeps benchmark and profile knobs over seeds and prints, per combination,
// the strategy accuracies, iteration totals and how often each qualitative
// ordering holds. Output feeds the choice of the committed benchmark spec
// and the frozen acceptance margins.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "curricula/benchgen.hpp"
#include "curricula/curriculum.hpp"
#include "curricula/rng.hpp"
#include "curricula/trainer.hpp"

using namespace curricula;

namespace {

struct Outcome {
  double top1 = 0.0;
  std::uint64_t iterations = 0;
};

Outcome run_one(const StrategyKind& kind, const BenchmarkBundle& bundle,
                const TrainingProfile& profile, const ConvergencePolicy& policy,
                std::size_t target_per_class, std::uint64_t master_seed, int hidden) {
  const Architecture arch = hidden > 0 ? Architecture::OneHidden : Architecture::Linear;
  BuiltinTrainer trainer(
      init_model(arch, bundle.spec.d, derive_seed(master_seed, 0x1417), hidden));
  RunContext ctx;
  ctx.strategy_label = kind.label();
  ctx.batch_size = profile.batch_size;
  ctx.target_per_class = target_per_class;
  ctx.policy = policy;
  const auto record = run_schedule(build_schedule(kind, profile, policy), bundle.syn_pool,
                                   bundle.real_pool, trainer, SamplePool{}, master_seed, ctx);
  return {trainer.evaluate(bundle.target_pool), record.total_iterations};
}

struct Combo {
  int hidden;
  int d;
  int samples;
  double separation;
  double rotation;
  double bias;
  double inflation;
  double sigma;
  double base_lr;
  double finetune_lr;
  int e1;
  int e2;
  int patience;
  double min_delta;
  double holdout;
  std::size_t target;
  std::uint64_t eval_every;
};

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void run_combo(const Combo& combo, int n_seeds) {
  TrainingProfile profile{"pilot", combo.base_lr, combo.finetune_lr, combo.e1, combo.e2, 32};
  ConvergencePolicy policy;
  policy.patience = combo.patience;
  policy.min_delta = combo.min_delta;
  policy.holdout_fraction = combo.holdout;
  policy.eval_every = combo.eval_every;
  const std::size_t target = combo.target;

  const std::vector<StrategyKind> kinds = {
      StrategyKind::syn_only(),
      StrategyKind::real_only(),
      StrategyKind::naive_combined(),
      StrategyKind::two_step_ft(Direction::SynToReal),
      StrategyKind::two_step_ft(Direction::RealToSyn),
      StrategyKind::progressive(),
  };
  std::vector<std::vector<double>> acc(kinds.size());
  std::vector<std::vector<double>> iters(kinds.size());
  int a_pass = 0;
  int d_pass = 0;
  int syn_over_real = 0;
  int naive_ge_ts = 0;
  int ts_ge_prog = 0;
  double a_min_margin = 1.0;
  for (int s = 1; s <= n_seeds; ++s) {
    BenchmarkSpec spec;
    spec.d = combo.d;
    spec.samples_per_class_per_domain = combo.samples;
    spec.class_separation = combo.separation;
    spec.viewpoint_rotation_angle = combo.rotation;
    spec.realism_bias_scale = combo.bias;
    spec.noise_inflation = combo.inflation;
    spec.noise_sigma = combo.sigma;
    spec.seed = static_cast<std::uint64_t>(s);
    const auto bundle = generate_benchmark(spec);
    std::vector<Outcome> out(kinds.size());
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      out[k] = run_one(kinds[k], bundle, profile, policy, target,
                       static_cast<std::uint64_t>(s), combo.hidden);
      acc[k].push_back(out[k].top1);
      iters[k].push_back(static_cast<double>(out[k].iterations));
    }
    const double best_single = std::max(out[0].top1, out[1].top1);
    if (out[2].top1 > best_single) ++a_pass;
    a_min_margin = std::min(a_min_margin, out[2].top1 - best_single);
    if (out[3].top1 >= out[4].top1) ++d_pass;
    if (out[0].top1 > out[1].top1) ++syn_over_real;
    if (out[2].iterations >= out[3].iterations) ++naive_ge_ts;
    if (out[3].iterations >= out[5].iterations) ++ts_ge_prog;
  }

  const double m_naive = mean(acc[2]);
  const double m_ts = mean(acc[3]);
  const double m_prog = mean(acc[5]);
  const double i_naive = mean(iters[2]);
  const double i_ts = mean(iters[3]);
  const double i_prog = mean(iters[5]);
  const double savings = (i_ts - i_prog) / i_ts;

  std::printf(
      "h=%d d=%d n=%d sep=%.2f rot=%.2f bias=%.2f infl=%.2f sig=%.2f lr=%.3f/%.3f e1=%d e2=%d "
      "pat=%d md=%.3f hf=%.2f ee=%llu\n",
      combo.hidden, combo.d, combo.samples, combo.separation, combo.rotation, combo.bias, combo.inflation,
      combo.sigma, combo.base_lr, combo.finetune_lr, combo.e1, combo.e2, combo.patience,
      combo.min_delta, combo.holdout, (unsigned long long)combo.eval_every);
  std::printf("  acc: syn=%.4f real=%.4f naive=%.4f ts_sr=%.4f ts_rs=%.4f prog=%.4f\n",
              mean(acc[0]), mean(acc[1]), m_naive, m_ts, mean(acc[4]), m_prog);
  std::printf(
      "  iters: naive=%.0f ts_sr=%.0f prog=%.0f savings=%.1f%% naive>=ts %d/%d ts>=prog "
      "%d/%d\n",
      i_naive, i_ts, i_prog, savings * 100.0, naive_ge_ts, n_seeds, ts_ge_prog, n_seeds);
  const bool c_ok = i_prog <= i_ts && i_ts <= i_naive && savings >= 0.05;
  const bool pass = a_pass >= 8 && std::fabs(m_prog - m_naive) <= 0.03 &&
                    std::fabs(m_ts - m_naive) <= 0.03 && c_ok && d_pass >= 7 &&
                    syn_over_real >= 7;
  std::printf(
      "  A=%d/%d min_margin=%.4f | B dprog=%.2fpts dts=%.2fpts | C %s | D=%d/%d | "
      "syn>real=%d/%d | %s\n\n",
      a_pass, n_seeds, a_min_margin, (m_prog - m_naive) * 100.0, (m_ts - m_naive) * 100.0,
      c_ok ? "ok" : "FAIL", d_pass, n_seeds, syn_over_real, n_seeds,
      pass ? "ALLPASS" : "no");
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  int n_seeds = 10;
  if (argc > 1) n_seeds = std::atoi(argv[1]);

  // The committed benchmark and profile; edit locally to explore.
  Combo committed{10, 16, 50, 2.4, 1.1, 0.1, 0.6, 1.0, 0.016, 0.002, 4, 1,
                  2, 0.010, 0.2, 40, 0};
  run_combo(committed, n_seeds);
  return 0;
}
