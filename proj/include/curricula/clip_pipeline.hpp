#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "curricula/dataset.hpp"

namespace curricula {

/// Windowing parameters. Defaults: non-overlapping 64-frame windows, an 80%
/// majority-label retention filter, and 16 frames subsampled every 4 frames.
struct WindowingConfig {
  int window_len = 64;
  int stride = 64;
  double retain_fraction = 0.8;
  int subsample_count = 16;
  int subsample_step = 4;

  void validate() const;
  /// A window is retained iff its majority-label count reaches this value;
  /// computed as ceil(retain_fraction * window_len) on integer counts.
  int retention_threshold() const;

  bool operator==(const WindowingConfig&) const = default;
};

/// One retained window: a fixed-length training sample with its subsampled
/// frame indices and attached feature vector.
struct TrainingSample {
  std::string clip_id;
  int start_frame = 0;
  std::vector<int> frame_indices;
  int label = 0;
  std::vector<double> features;
};

/// Resolves the feature vector for a retained sample.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::vector<double> features_for(const ClipRecord& clip,
                                           const TrainingSample& sample) = 0;
  virtual int dimension() const = 0;
};

/// Loads per-frame feature sidecar files (<dir>/<clip_id>.feat unless the
/// record names an explicit path). The sample feature is the mean of its
/// selected frame rows, accumulated in frame-index order.
class SidecarFeatureSource final : public FeatureSource {
 public:
  explicit SidecarFeatureSource(std::filesystem::path directory);

  std::vector<double> features_for(const ClipRecord& clip,
                                   const TrainingSample& sample) override;
  int dimension() const override { return dimension_; }

 private:
  struct ClipFeatures {
    int dimension = 0;
    std::vector<std::vector<double>> rows;
  };
  const ClipFeatures& load(const ClipRecord& clip);

  std::filesystem::path directory_;
  std::map<std::string, ClipFeatures> cache_;
  int dimension_ = 0;
};

/// Deterministic stand-in features keyed by (seed, clip_id, start_frame);
/// decouples pipeline tests from real feature extraction.
class SyntheticFeatureSource final : public FeatureSource {
 public:
  SyntheticFeatureSource(int dimension, std::uint64_t seed);

  std::vector<double> features_for(const ClipRecord& clip,
                                   const TrainingSample& sample) override;
  int dimension() const override { return dimension_; }

 private:
  int dimension_;
  std::uint64_t seed_;
};

/// Componentwise mean of rows[indices], accumulated in index order. This is
/// the sample-feature reduction; callers must pass in-bounds indices.
std::vector<double> mean_rows(const std::vector<std::vector<double>>& rows,
                              const std::vector<int>& indices);

/// Writes a per-frame feature sidecar file in the `#features v1` format.
void save_feature_sidecar(const std::filesystem::path& path,
                          const std::vector<std::vector<double>>& rows);

/// Splits a clip into windows starting at 0, stride, 2*stride, ... and keeps
/// the windows passing the majority-label retention filter. Feature vectors
/// are left empty. Clips shorter than one window yield an empty list.
std::vector<TrainingSample> segment_clip(const ClipRecord& clip, const WindowingConfig& cfg);

/// segment_clip over every record in clip_id order, with features attached
/// from `source`.
std::vector<TrainingSample> build_sample_set(const DatasetManifest& manifest,
                                             const WindowingConfig& cfg,
                                             FeatureSource& source);

}  // namespace curricula
