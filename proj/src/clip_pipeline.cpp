#include "curricula/clip_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "curricula/errors.hpp"
#include "curricula/rng.hpp"

namespace curricula {

namespace {

constexpr std::string_view kFeatureHeader = "#features v1";

double parse_double(std::string_view text, const std::string& context) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FeatureError(context + ": invalid real '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

void WindowingConfig::validate() const {
  if (window_len < 1) throw ConfigError("window_len must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (!(retain_fraction > 0.0) || retain_fraction > 1.0) {
    throw ConfigError("retain_fraction must be in (0, 1]");
  }
  if (subsample_count < 1) throw ConfigError("subsample_count must be >= 1");
  if (subsample_step < 1) throw ConfigError("subsample_step must be >= 1");
  if (static_cast<long long>(subsample_count) * subsample_step > window_len) {
    throw ConfigError("subsample_count * subsample_step must not exceed window_len");
  }
}

int WindowingConfig::retention_threshold() const {
  return static_cast<int>(std::ceil(retain_fraction * window_len));
}

std::vector<TrainingSample> segment_clip(const ClipRecord& clip, const WindowingConfig& cfg) {
  cfg.validate();
  std::vector<TrainingSample> samples;
  const int n_frames = static_cast<int>(clip.frame_labels.size());
  const int threshold = cfg.retention_threshold();
  for (int start = 0; start + cfg.window_len <= n_frames; start += cfg.stride) {
    std::map<int, int> counts;
    for (int i = start; i < start + cfg.window_len; ++i) ++counts[clip.frame_labels[i]];
    int majority = -1;
    int majority_count = 0;
    for (const auto& [label, count] : counts) {
      if (count > majority_count) {  // ascending map order: ties keep the smaller id
        majority = label;
        majority_count = count;
      }
    }
    if (majority_count < threshold) continue;
    TrainingSample sample;
    sample.clip_id = clip.clip_id;
    sample.start_frame = start;
    sample.frame_indices.reserve(static_cast<std::size_t>(cfg.subsample_count));
    for (int k = 0; k < cfg.subsample_count; ++k) {
      sample.frame_indices.push_back(start + k * cfg.subsample_step);
    }
    sample.label = majority;
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<TrainingSample> build_sample_set(const DatasetManifest& manifest,
                                             const WindowingConfig& cfg,
                                             FeatureSource& source) {
  cfg.validate();
  std::vector<TrainingSample> out;
  for (const auto& record : manifest.records()) {
    for (TrainingSample& sample : segment_clip(record, cfg)) {
      sample.features = source.features_for(record, sample);
      if (static_cast<int>(sample.features.size()) != source.dimension()) {
        throw FeatureError("feature length mismatch for clip '" + record.clip_id +
                           "' start_frame " + std::to_string(sample.start_frame));
      }
      out.push_back(std::move(sample));
    }
  }
  return out;
}

SidecarFeatureSource::SidecarFeatureSource(std::filesystem::path directory)
    : directory_(std::move(directory)) {}

const SidecarFeatureSource::ClipFeatures& SidecarFeatureSource::load(const ClipRecord& clip) {
  auto it = cache_.find(clip.clip_id);
  if (it != cache_.end()) return it->second;

  std::filesystem::path path = clip.feature_path
                                   ? std::filesystem::path(*clip.feature_path)
                                   : directory_ / (clip.clip_id + ".feat");
  std::ifstream in(path);
  if (!in) {
    throw FeatureError("missing feature sidecar for clip '" + clip.clip_id + "': " +
                       path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line.rfind(kFeatureHeader, 0) != 0) {
    throw FeatureError(path.string() + ": missing '#features v1' header");
  }
  int dim = 0;
  long frames = 0;
  if (std::sscanf(line.c_str(), "#features v1 d=%d frames=%ld", &dim, &frames) != 2 ||
      dim <= 0 || frames <= 0) {
    throw FeatureError(path.string() + ": malformed feature header '" + line + "'");
  }
  ClipFeatures features;
  features.dimension = dim;
  features.rows.reserve(static_cast<std::size_t>(frames));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(dim));
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && line[pos] == ' ') ++pos;
      if (pos >= line.size()) break;
      std::size_t end = line.find(' ', pos);
      if (end == std::string::npos) end = line.size();
      row.push_back(parse_double(std::string_view(line).substr(pos, end - pos), path.string()));
      pos = end;
    }
    if (static_cast<int>(row.size()) != dim) {
      throw FeatureError(path.string() + ": row " + std::to_string(features.rows.size()) +
                         " has " + std::to_string(row.size()) + " values, expected " +
                         std::to_string(dim));
    }
    features.rows.push_back(std::move(row));
  }
  if (static_cast<long>(features.rows.size()) != frames) {
    throw FeatureError(path.string() + ": header declares " + std::to_string(frames) +
                       " frames, file has " + std::to_string(features.rows.size()));
  }
  if (dimension_ == 0) {
    dimension_ = dim;
  } else if (dimension_ != dim) {
    throw FeatureError(path.string() + ": feature dimension " + std::to_string(dim) +
                       " differs from previously loaded dimension " +
                       std::to_string(dimension_));
  }
  return cache_.emplace(clip.clip_id, std::move(features)).first->second;
}

std::vector<double> mean_rows(const std::vector<std::vector<double>>& rows,
                              const std::vector<int>& indices) {
  if (rows.empty() || indices.empty()) throw FeatureError("mean_rows: nothing to average");
  std::vector<double> mean(rows.front().size(), 0.0);
  for (int index : indices) {
    const std::vector<double>& row = rows[static_cast<std::size_t>(index)];
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (double& value : mean) value *= inv;
  return mean;
}

std::vector<double> SidecarFeatureSource::features_for(const ClipRecord& clip,
                                                       const TrainingSample& sample) {
  const ClipFeatures& features = load(clip);
  for (int frame : sample.frame_indices) {
    if (frame < 0 || static_cast<std::size_t>(frame) >= features.rows.size()) {
      throw FeatureError("clip '" + clip.clip_id + "' start_frame " +
                         std::to_string(sample.start_frame) + ": frame " +
                         std::to_string(frame) + " outside sidecar with " +
                         std::to_string(features.rows.size()) + " rows");
    }
  }
  return mean_rows(features.rows, sample.frame_indices);
}

SyntheticFeatureSource::SyntheticFeatureSource(int dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension < 1) throw ConfigError("feature dimension must be >= 1");
}

std::vector<double> SyntheticFeatureSource::features_for(const ClipRecord& clip,
                                                         const TrainingSample& sample) {
  Rng rng(derive_seed(seed_, fnv1a(clip.clip_id) ^
                                 static_cast<std::uint64_t>(sample.start_frame)));
  std::vector<double> features(static_cast<std::size_t>(dimension_));
  for (double& value : features) value = 2.0 * rng.next_double() - 1.0;
  return features;
}

void save_feature_sidecar(const std::filesystem::path& path,
                          const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw FeatureError("feature sidecar needs at least one row and one dimension");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature sidecar: " + path.string());
  out << kFeatureHeader << " d=" << rows.front().size() << " frames=" << rows.size() << '\n';
  char buffer[64];
  for (const auto& row : rows) {
    if (row.size() != rows.front().size()) {
      throw FeatureError(path.string() + ": inconsistent row widths");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", row[i]);
      if (i > 0) out << ' ';
      out << buffer;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing feature sidecar: " + path.string());
}

}  // namespace curricula
