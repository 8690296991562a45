#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "curricula/clip_pipeline.hpp"

namespace curricula {

/// Identity of a training sample: the retained window it came from.
struct SampleKey {
  std::string clip_id;
  int start_frame = 0;

  auto operator<=>(const SampleKey&) const = default;
};

inline SampleKey key_of(const TrainingSample& sample) {
  return SampleKey{sample.clip_id, sample.start_frame};
}

/// A training-sample multiset with the seed and lineage of every sampling
/// operation that produced it.
struct SamplePool {
  std::vector<TrainingSample> samples;
  std::uint64_t seed = 0;
  std::vector<std::string> lineage;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  /// Dimension of the attached feature vectors; 0 for an empty pool.
  int feature_dim() const;
  /// Instance counts per class id.
  std::map<int, std::size_t> class_counts() const;
};

/// Duplicates under-target classes round-robin over a seeded shuffle (using
/// pool.seed) until each reaches target_per_class exactly. Classes at or
/// above target are left unchanged; empty classes stay empty and are
/// reported in the lineage.
SamplePool oversample_balance(const SamplePool& pool, std::size_t target_per_class);

struct SplitResult {
  SamplePool subset;
  SamplePool remainder;
};

/// Class-balanced disjoint split. Each class contributes floor or ceil of
/// fraction * n_c samples, allocated by cumulative rounding in ascending
/// class id so the overall subset size stays within one sample of
/// fraction * |pool|.
SplitResult split_balanced_subset(const SamplePool& pool, double fraction, std::uint64_t seed);

/// Multiset union in pool order; feature dimensions must agree.
SamplePool combine_pools(const std::vector<SamplePool>& pools);

/// Archives a pool as sorted `clip_id start_frame label multiplicity` lines;
/// re-serializing an identical pool is byte-identical.
void save_pool(const SamplePool& pool, const std::filesystem::path& path);

/// Rebuilds a pool from its archived identities. Frame indices come from the
/// windowing config and features from `source`; `manifest` supplies the clip
/// records.
SamplePool load_pool(const std::filesystem::path& path, const DatasetManifest& manifest,
                     const WindowingConfig& cfg, FeatureSource& source);

}  // namespace curricula
