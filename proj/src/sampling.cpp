#include "curricula/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "curricula/errors.hpp"
#include "curricula/log.hpp"
#include "curricula/rng.hpp"

namespace curricula {

namespace {

constexpr std::string_view kPoolHeader = "#pool v1";

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%g", value);
  return buffer;
}

}  // namespace

int SamplePool::feature_dim() const {
  if (samples.empty()) return 0;
  return static_cast<int>(samples.front().features.size());
}

std::map<int, std::size_t> SamplePool::class_counts() const {
  std::map<int, std::size_t> counts;
  for (const auto& sample : samples) ++counts[sample.label];
  return counts;
}

SamplePool oversample_balance(const SamplePool& pool, std::size_t target_per_class) {
  SamplePool out;
  out.seed = pool.seed;
  out.lineage = pool.lineage;
  out.lineage.push_back("oversample_balance target=" + std::to_string(target_per_class) +
                        " seed=" + std::to_string(pool.seed));
  out.samples = pool.samples;

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < pool.samples.size(); ++i) {
    by_class[pool.samples[i].label].push_back(i);
  }
  for (const auto& [label, indices] : by_class) {
    const std::size_t count = indices.size();
    if (count == 0 || count >= target_per_class) continue;
    std::vector<std::size_t> order = indices;
    Rng rng(derive_seed(pool.seed, 0x05e70000ULL + static_cast<std::uint64_t>(label)));
    rng.shuffle(order);
    // Round-robin duplication keeps per-identity multiplicities within 1.
    for (std::size_t k = 0; k < target_per_class - count; ++k) {
      out.samples.push_back(pool.samples[order[k % count]]);
    }
  }
  return out;
}

SplitResult split_balanced_subset(const SamplePool& pool, double fraction, std::uint64_t seed) {
  if (pool.empty()) throw ConfigError("split_balanced_subset requires a non-empty pool");
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw ConfigError("split fraction must be in (0, 1)");
  }

  // Distinct identities per class, in first-appearance order, each carrying
  // the indices of its instances.
  std::map<int, std::vector<std::vector<std::size_t>>> identities_by_class;
  {
    std::map<int, std::map<SampleKey, std::size_t>> slot;
    for (std::size_t i = 0; i < pool.samples.size(); ++i) {
      const TrainingSample& sample = pool.samples[i];
      auto& groups = identities_by_class[sample.label];
      auto& seen = slot[sample.label];
      auto it = seen.find(key_of(sample));
      if (it == seen.end()) {
        seen.emplace(key_of(sample), groups.size());
        groups.push_back({i});
      } else {
        groups[it->second].push_back(i);
      }
    }
  }

  std::vector<bool> in_subset(pool.samples.size(), false);
  double cumulative_target = 0.0;
  std::size_t cumulative_taken = 0;
  for (auto& [label, groups] : identities_by_class) {
    std::size_t class_instances = 0;
    for (const auto& group : groups) class_instances += group.size();
    cumulative_target += fraction * static_cast<double>(class_instances);
    const std::size_t take =
        static_cast<std::size_t>(std::floor(cumulative_target)) - cumulative_taken;
    Rng rng(derive_seed(seed, 0x5b110000ULL + static_cast<std::uint64_t>(label)));
    rng.shuffle(groups);
    std::size_t taken = 0;
    for (const auto& group : groups) {
      if (taken >= take) break;
      for (std::size_t index : group) in_subset[index] = true;
      taken += group.size();
    }
    cumulative_taken += taken;
  }

  SplitResult result;
  result.subset.seed = seed;
  result.remainder.seed = seed;
  const std::string params = "fraction=" + format_double(fraction) +
                             " seed=" + std::to_string(seed);
  result.subset.lineage = pool.lineage;
  result.subset.lineage.push_back("split_balanced_subset " + params + " side=subset");
  result.remainder.lineage = pool.lineage;
  result.remainder.lineage.push_back("split_balanced_subset " + params + " side=remainder");
  for (std::size_t i = 0; i < pool.samples.size(); ++i) {
    (in_subset[i] ? result.subset : result.remainder).samples.push_back(pool.samples[i]);
  }
  return result;
}

SamplePool combine_pools(const std::vector<SamplePool>& pools) {
  if (pools.empty()) throw ConfigError("combine_pools requires at least one pool");
  SamplePool out;
  out.seed = pools.front().seed;
  int dim = 0;
  for (const auto& pool : pools) {
    if (!pool.empty()) {
      if (dim == 0) {
        dim = pool.feature_dim();
      } else if (pool.feature_dim() != dim) {
        throw DimensionError("combine_pools: feature dimension " +
                             std::to_string(pool.feature_dim()) + " != " + std::to_string(dim));
      }
    }
    out.samples.insert(out.samples.end(), pool.samples.begin(), pool.samples.end());
    out.lineage.insert(out.lineage.end(), pool.lineage.begin(), pool.lineage.end());
  }
  out.lineage.push_back("combine_pools n=" + std::to_string(pools.size()));
  return out;
}

void save_pool(const SamplePool& pool, const std::filesystem::path& path) {
  std::map<SampleKey, std::pair<int, std::size_t>> aggregated;  // key -> (label, multiplicity)
  for (const auto& sample : pool.samples) {
    auto [it, inserted] = aggregated.try_emplace(key_of(sample), sample.label, 0);
    if (!inserted && it->second.first != sample.label) {
      throw ValidationError("pool has conflicting labels for clip '" + sample.clip_id +
                            "' start_frame " + std::to_string(sample.start_frame));
    }
    ++it->second.second;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write pool file: " + path.string());
  out << kPoolHeader << '\n';
  out << "#seed " << pool.seed << '\n';
  for (const auto& entry : pool.lineage) out << "#lineage " << entry << '\n';
  for (const auto& [key, value] : aggregated) {
    out << key.clip_id << '\t' << key.start_frame << '\t' << value.first << '\t'
        << value.second << '\n';
  }
  if (!out) throw IoError("failed writing pool file: " + path.string());
}

SamplePool load_pool(const std::filesystem::path& path, const DatasetManifest& manifest,
                     const WindowingConfig& cfg, FeatureSource& source) {
  cfg.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pool file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind(kPoolHeader, 0) != 0) {
    throw FormatError(path.string() + ": missing '#pool v1' header");
  }
  std::unordered_map<std::string, const ClipRecord*> clips;
  for (const auto& record : manifest.records()) clips.emplace(record.clip_id, &record);

  SamplePool pool;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#seed ", 0) == 0) {
        pool.seed = std::strtoull(line.c_str() + 6, nullptr, 10);
      } else if (line.rfind("#lineage ", 0) == 0) {
        pool.lineage.push_back(line.substr(9));
      }
      continue;
    }
    std::string clip_id;
    long start = 0, label = 0, multiplicity = 0;
    {
      std::size_t t1 = line.find('\t');
      std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
      std::size_t t3 = t2 == std::string::npos ? std::string::npos : line.find('\t', t2 + 1);
      if (t3 == std::string::npos) {
        throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                         ": expected 'clip_id<TAB>start<TAB>label<TAB>multiplicity'");
      }
      clip_id = line.substr(0, t1);
      start = std::strtol(line.c_str() + t1 + 1, nullptr, 10);
      label = std::strtol(line.c_str() + t2 + 1, nullptr, 10);
      multiplicity = std::strtol(line.c_str() + t3 + 1, nullptr, 10);
    }
    if (multiplicity <= 0) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": multiplicity must be positive");
    }
    auto it = clips.find(clip_id);
    if (it == clips.end()) {
      throw ValidationError(path.string() + ": line " + std::to_string(line_no) +
                            ": clip '" + clip_id + "' not in manifest");
    }
    const ClipRecord& clip = *it->second;
    if (start < 0 || start + cfg.window_len > static_cast<long>(clip.frame_labels.size())) {
      throw ValidationError(path.string() + ": line " + std::to_string(line_no) +
                            ": window exceeds clip '" + clip_id + "'");
    }
    TrainingSample sample;
    sample.clip_id = clip_id;
    sample.start_frame = static_cast<int>(start);
    for (int k = 0; k < cfg.subsample_count; ++k) {
      sample.frame_indices.push_back(static_cast<int>(start) + k * cfg.subsample_step);
    }
    sample.label = static_cast<int>(label);
    sample.features = source.features_for(clip, sample);
    for (long m = 0; m < multiplicity; ++m) pool.samples.push_back(sample);
  }
  pool.lineage.push_back("load_pool " + path.filename().string());
  return pool;
}

}  // namespace curricula
