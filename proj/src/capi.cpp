#include "curricula.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "curricula/clip_pipeline.hpp"
#include "curricula/commands.hpp"
#include "curricula/dataset.hpp"
#include "curricula/errors.hpp"
#include "curricula/sampling.hpp"
#include "curricula/trainer.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
curr_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const curricula::Error& e) {
    g_last_error = e.what();
    return static_cast<curr_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CURR_E_INTERNAL;
  }
}

curr_status invalid_argument(const char* message) {
  g_last_error = message;
  return CURR_E_INVALID_ARGUMENT;
}

int exit_invalid_argument(const char* message) {
  g_last_error = message;
  return curricula::kExitInput;
}

curricula::CliOverrides make_overrides(const char* out_dir, uint64_t seed, int has_seed,
                                       int force) {
  curricula::CliOverrides overrides;
  if (has_seed != 0) overrides.seed = seed;
  if (out_dir != nullptr) overrides.out = std::filesystem::path(out_dir);
  overrides.force = force != 0;
  return overrides;
}

}  // namespace

struct curr_manifest {
  curricula::DatasetManifest value;
};

struct curr_pool {
  curricula::SamplePool value;
};

struct curr_checkpoint {
  curricula::ModelCheckpoint value;
};

extern "C" {

const char* curr_last_error(void) { return g_last_error.c_str(); }

curr_status curr_manifest_load(const char* path, const char* registry_path,
                               curr_manifest** out) {
  if (path == nullptr || out == nullptr)
    return invalid_argument("curr_manifest_load: path and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto manifest =
        registry_path == nullptr
            ? curricula::load_manifest(path)
            : curricula::load_manifest(path, curricula::load_class_registry(registry_path));
    *out = new curr_manifest{std::move(manifest)};
    return CURR_OK;
  });
}

void curr_manifest_free(curr_manifest* manifest) { delete manifest; }

curr_status curr_manifest_clip_count(const curr_manifest* manifest, size_t* out) {
  if (manifest == nullptr || out == nullptr)
    return invalid_argument("curr_manifest_clip_count: manifest and out must be non-null");
  *out = manifest->value.records().size();
  return CURR_OK;
}

curr_status curr_manifest_histogram(const curr_manifest* manifest, int level,
                                    uint64_t* counts, size_t len) {
  if (manifest == nullptr || counts == nullptr)
    return invalid_argument("curr_manifest_histogram: manifest and counts must be non-null");
  if (level != 0 && level != 1)
    return invalid_argument("curr_manifest_histogram: level must be 0 (clips) or 1 (frames)");
  return guarded([&] {
    auto hist = curricula::class_histogram(
        manifest->value,
        level == 0 ? curricula::HistogramLevel::Clip : curricula::HistogramLevel::Frame);
    const size_t n = std::min(len, hist.size());
    std::copy_n(hist.begin(), n, counts);
    return CURR_OK;
  });
}

curr_status curr_pool_build(const curr_manifest* manifest, const char* features_dir,
                            curr_pool** out) {
  if (manifest == nullptr || features_dir == nullptr || out == nullptr)
    return invalid_argument("curr_pool_build: all arguments must be non-null");
  *out = nullptr;
  return guarded([&] {
    curricula::SidecarFeatureSource source{std::filesystem::path(features_dir)};
    curricula::SamplePool pool;
    pool.samples =
        curricula::build_sample_set(manifest->value, curricula::WindowingConfig{}, source);
    pool.lineage.push_back("windowed manifest samples=" +
                           std::to_string(pool.samples.size()));
    *out = new curr_pool{std::move(pool)};
    return CURR_OK;
  });
}

void curr_pool_free(curr_pool* pool) { delete pool; }

curr_status curr_pool_size(const curr_pool* pool, size_t* out) {
  if (pool == nullptr || out == nullptr)
    return invalid_argument("curr_pool_size: pool and out must be non-null");
  *out = pool->value.size();
  return CURR_OK;
}

curr_status curr_pool_save(const curr_pool* pool, const char* path) {
  if (pool == nullptr || path == nullptr)
    return invalid_argument("curr_pool_save: pool and path must be non-null");
  return guarded([&] {
    curricula::save_pool(pool->value, path);
    return CURR_OK;
  });
}

curr_status curr_checkpoint_load(const char* path, curr_checkpoint** out) {
  if (path == nullptr || out == nullptr)
    return invalid_argument("curr_checkpoint_load: path and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    *out = new curr_checkpoint{curricula::load_checkpoint(path)};
    return CURR_OK;
  });
}

void curr_checkpoint_free(curr_checkpoint* checkpoint) { delete checkpoint; }

curr_status curr_checkpoint_save(const curr_checkpoint* checkpoint, const char* path) {
  if (checkpoint == nullptr || path == nullptr)
    return invalid_argument("curr_checkpoint_save: checkpoint and path must be non-null");
  return guarded([&] {
    curricula::save_checkpoint(checkpoint->value, path);
    return CURR_OK;
  });
}

curr_status curr_evaluate_top1(const curr_checkpoint* checkpoint, const curr_pool* pool,
                               double* out) {
  if (checkpoint == nullptr || pool == nullptr || out == nullptr)
    return invalid_argument("curr_evaluate_top1: all arguments must be non-null");
  return guarded([&] {
    *out = curricula::top1_accuracy(checkpoint->value, pool->value);
    return CURR_OK;
  });
}

int curr_cmd_prepare(const char* config_path, const char* out_dir, uint64_t seed,
                     int has_seed, int force) {
  if (config_path == nullptr)
    return exit_invalid_argument("curr_cmd_prepare: config_path must be non-null");
  return curricula::cmd_prepare(config_path, make_overrides(out_dir, seed, has_seed, force));
}

int curr_cmd_bench(const char* spec_path, const char* out_dir, uint64_t seed, int has_seed,
                   int force) {
  if (spec_path == nullptr)
    return exit_invalid_argument("curr_cmd_bench: spec_path must be non-null");
  return curricula::cmd_bench(spec_path, make_overrides(out_dir, seed, has_seed, force));
}

int curr_cmd_run(const char* config_path, const char* strategy, const char* direction,
                 const char* out_dir, uint64_t seed, int has_seed, int force) {
  if (config_path == nullptr || strategy == nullptr)
    return exit_invalid_argument("curr_cmd_run: config_path and strategy must be non-null");
  return curricula::cmd_run(config_path, strategy, direction == nullptr ? "" : direction,
                            make_overrides(out_dir, seed, has_seed, force));
}

int curr_cmd_compare(const char* config_path, const char* base_label,
                     const char* const* run_dirs, size_t n_run_dirs, const char* out_dir,
                     int force) {
  if (config_path == nullptr || base_label == nullptr)
    return exit_invalid_argument("curr_cmd_compare: config_path and base_label must be non-null");
  if (n_run_dirs > 0 && run_dirs == nullptr)
    return exit_invalid_argument("curr_cmd_compare: run_dirs must be non-null");
  std::vector<std::filesystem::path> dirs;
  dirs.reserve(n_run_dirs);
  for (size_t i = 0; i < n_run_dirs; ++i) {
    if (run_dirs[i] == nullptr)
      return exit_invalid_argument("curr_cmd_compare: run_dirs entries must be non-null");
    dirs.emplace_back(run_dirs[i]);
  }
  return curricula::cmd_compare(config_path, base_label, dirs,
                                make_overrides(out_dir, 0, 0, force));
}

int curr_cmd_report(const char* report_json, const char* format, const char* out_dir,
                    int force) {
  if (report_json == nullptr)
    return exit_invalid_argument("curr_cmd_report: report_json must be non-null");
  return curricula::cmd_report(report_json, format == nullptr ? "all" : format,
                               make_overrides(out_dir, 0, 0, force));
}

}  // extern "C"
