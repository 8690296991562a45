#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "curricula/sampling.hpp"

namespace curricula {

/// Parameters of a generated three-domain feature benchmark. The target
/// domain samples around clean class means; the real-ground analog sees the
/// means rotated in a fixed 2-plane (viewpoint shift, realistic appearance);
/// the syn-aerial analog sees the means with a per-class bias and inflated
/// noise (aligned viewpoint, realism gap).
struct BenchmarkSpec {
  int d = 16;
  int n_classes = 12;
  int samples_per_class_per_domain = 40;
  double class_separation = 3.0;
  double viewpoint_rotation_angle = 0.7;
  double realism_bias_scale = 1.0;
  double noise_inflation = 1.0;
  /// Base Gaussian noise applied in every domain; the syn-aerial analog uses
  /// noise_sigma * (1 + noise_inflation).
  double noise_sigma = 1.0;
  std::uint64_t seed = 42;

  void validate() const;
};

BenchmarkSpec load_benchmark_spec(const std::filesystem::path& path);
void save_benchmark_spec(const BenchmarkSpec& spec, const std::filesystem::path& path);

struct BenchmarkBundle {
  SamplePool syn_pool;
  SamplePool real_pool;
  SamplePool target_pool;
  BenchmarkSpec spec;
};

/// Draws class means (pairwise distance >= class_separation, retry-capped),
/// then samples the three domains. Deterministic under spec.seed; sample
/// identities are disjoint across domains.
BenchmarkBundle generate_benchmark(const BenchmarkSpec& spec);

/// Writes the bundle as manifests, per-clip feature sidecars, raw pool files
/// and a spec.json, so the standard pipeline consumes it unchanged. Every
/// clip is 64 frames with a single label, hence survives windowing intact;
/// feature components are quantized at generation so the sidecar loader's
/// 16-row mean reproduces them bit-exactly and emit -> load is lossless.
void emit_bundle(const BenchmarkBundle& bundle, const std::filesystem::path& dir);

}  // namespace curricula
