#include "curricula/benchgen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "curricula/clip_pipeline.hpp"
#include "curricula/dataset.hpp"
#include "curricula/errors.hpp"
#include "curricula/rng.hpp"

namespace curricula {

namespace {

constexpr std::uint64_t kSeedMeans = 0xbe9c0001ULL;
constexpr std::uint64_t kSeedBiases = 0xbe9c0002ULL;
constexpr std::uint64_t kSeedSyn = 0xbe9c0010ULL;
constexpr std::uint64_t kSeedReal = 0xbe9c0011ULL;
constexpr std::uint64_t kSeedTarget = 0xbe9c0012ULL;
constexpr int kMeanRetryCap = 1000;
constexpr int kClipFrames = 64;

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

std::vector<double> rotate_in_plane(std::vector<double> v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double x0 = v[0];
  const double x1 = v[1];
  v[0] = c * x0 - s * x1;
  v[1] = s * x0 + c * x1;
  return v;
}

std::string domain_prefix(DomainTag tag) {
  switch (tag) {
    case DomainTag::SyntheticAerial: return "syn";
    case DomainTag::RealGround: return "real";
    case DomainTag::RealAerial: return "tgt";
  }
  return "tgt";
}

std::string clip_id_for(DomainTag tag, int label, int index) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%s_c%02d_%04d", domain_prefix(tag).c_str(), label,
                index);
  return buffer;
}

// Clears the low 4 mantissa bits. A value quantized this way survives the
// pipeline's 16-row mean reduction bit-exactly (all partial sums of up to 16
// copies are representable), so emitted sidecars reproduce pool features.
double quantize_feature(double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  bits &= ~0xFULL;
  return std::bit_cast<double>(bits);
}

SamplePool sample_domain(const BenchmarkSpec& spec, DomainTag tag,
                         const std::vector<std::vector<double>>& means,
                         const std::vector<std::vector<double>>& biases,
                         std::uint64_t stream_tag) {
  Rng rng(derive_seed(spec.seed, stream_tag));
  const double sigma = tag == DomainTag::SyntheticAerial
                           ? spec.noise_sigma * (1.0 + spec.noise_inflation)
                           : spec.noise_sigma;
  SamplePool pool;
  pool.seed = derive_seed(spec.seed, stream_tag);
  pool.lineage.push_back("generate_benchmark domain=" + to_string(tag) +
                         " seed=" + std::to_string(spec.seed));
  for (int label = 0; label < spec.n_classes; ++label) {
    std::vector<double> base = means[static_cast<std::size_t>(label)];
    if (tag == DomainTag::RealGround) {
      base = rotate_in_plane(std::move(base), spec.viewpoint_rotation_angle);
    } else if (tag == DomainTag::SyntheticAerial) {
      const std::vector<double>& bias = biases[static_cast<std::size_t>(label)];
      for (int i = 0; i < spec.d; ++i) {
        base[static_cast<std::size_t>(i)] +=
            spec.realism_bias_scale * bias[static_cast<std::size_t>(i)];
      }
    }
    for (int index = 0; index < spec.samples_per_class_per_domain; ++index) {
      std::vector<double> vec(static_cast<std::size_t>(spec.d));
      for (int i = 0; i < spec.d; ++i) {
        vec[static_cast<std::size_t>(i)] =
            quantize_feature(base[static_cast<std::size_t>(i)] + sigma * rng.next_normal());
      }
      TrainingSample sample;
      sample.clip_id = clip_id_for(tag, label, index);
      sample.start_frame = 0;
      WindowingConfig cfg;
      for (int k = 0; k < cfg.subsample_count; ++k) {
        sample.frame_indices.push_back(k * cfg.subsample_step);
      }
      sample.label = label;
      sample.features = std::move(vec);
      pool.samples.push_back(std::move(sample));
    }
  }
  return pool;
}

DatasetManifest manifest_for(const SamplePool& pool, DomainTag tag, const BenchmarkSpec& spec) {
  std::vector<ClipRecord> records;
  for (const TrainingSample& sample : pool.samples) {
    ClipRecord record;
    record.clip_id = sample.clip_id;
    record.subject_id =
        domain_prefix(tag) + "_subj" + std::to_string(records.size() % 5);
    record.domain = tag;
    record.fps = Rational{30, 1};
    record.frame_labels.assign(kClipFrames, sample.label);
    records.push_back(std::move(record));
  }
  return DatasetManifest(std::move(records), canonical_classes(),
                         "benchmark seed=" + std::to_string(spec.seed));
}

nlohmann::json spec_to_json(const BenchmarkSpec& spec) {
  return {{"d", spec.d},
          {"n_classes", spec.n_classes},
          {"samples_per_class_per_domain", spec.samples_per_class_per_domain},
          {"class_separation", spec.class_separation},
          {"viewpoint_rotation_angle", spec.viewpoint_rotation_angle},
          {"realism_bias_scale", spec.realism_bias_scale},
          {"noise_inflation", spec.noise_inflation},
          {"noise_sigma", spec.noise_sigma},
          {"seed", spec.seed}};
}

}  // namespace

void BenchmarkSpec::validate() const {
  if (d < 2) throw SpecError("benchmark d must be >= 2");
  if (n_classes < 2 || n_classes > static_cast<int>(canonical_classes().size())) {
    throw SpecError("benchmark n_classes must be in 2..12");
  }
  if (samples_per_class_per_domain < 1) {
    throw SpecError("samples_per_class_per_domain must be >= 1");
  }
  if (class_separation < 0.0 || realism_bias_scale < 0.0 || noise_inflation < 0.0 ||
      noise_sigma < 0.0) {
    throw SpecError("benchmark scales must be >= 0");
  }
}

BenchmarkSpec load_benchmark_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open benchmark spec: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  BenchmarkSpec spec;
  try {
    spec.d = doc.value("d", spec.d);
    spec.n_classes = doc.value("n_classes", spec.n_classes);
    spec.samples_per_class_per_domain =
        doc.value("samples_per_class_per_domain", spec.samples_per_class_per_domain);
    spec.class_separation = doc.value("class_separation", spec.class_separation);
    spec.viewpoint_rotation_angle =
        doc.value("viewpoint_rotation_angle", spec.viewpoint_rotation_angle);
    spec.realism_bias_scale = doc.value("realism_bias_scale", spec.realism_bias_scale);
    spec.noise_inflation = doc.value("noise_inflation", spec.noise_inflation);
    spec.noise_sigma = doc.value("noise_sigma", spec.noise_sigma);
    spec.seed = doc.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  spec.validate();
  return spec;
}

void save_benchmark_spec(const BenchmarkSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write benchmark spec: " + path.string());
  out << spec_to_json(spec).dump(2) << '\n';
  if (!out) throw IoError("failed writing benchmark spec: " + path.string());
}

BenchmarkBundle generate_benchmark(const BenchmarkSpec& spec) {
  spec.validate();

  std::vector<std::vector<double>> means;
  {
    // Component scale sqrt(2/d) puts the RMS pairwise distance at
    // 2 * class_separation for any d; the retry below enforces the hard
    // minimum of class_separation on every pair.
    const double scale = spec.class_separation * std::sqrt(2.0 / static_cast<double>(spec.d));
    Rng rng(derive_seed(spec.seed, kSeedMeans));
    for (int c = 0; c < spec.n_classes; ++c) {
      bool placed = false;
      for (int attempt = 0; attempt < kMeanRetryCap && !placed; ++attempt) {
        std::vector<double> candidate(static_cast<std::size_t>(spec.d));
        for (double& value : candidate) value = scale * rng.next_normal();
        placed = std::all_of(means.begin(), means.end(), [&](const auto& other) {
          return distance(candidate, other) >= spec.class_separation;
        });
        if (placed) means.push_back(std::move(candidate));
      }
      if (!placed) {
        throw SpecError("class_separation " + std::to_string(spec.class_separation) +
                        " infeasible for d=" + std::to_string(spec.d) + ", n_classes=" +
                        std::to_string(spec.n_classes));
      }
    }
  }

  std::vector<std::vector<double>> biases;
  {
    Rng rng(derive_seed(spec.seed, kSeedBiases));
    for (int c = 0; c < spec.n_classes; ++c) {
      std::vector<double> bias(static_cast<std::size_t>(spec.d));
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& value : bias) {
          value = rng.next_normal();
          norm += value * value;
        }
        norm = std::sqrt(norm);
      } while (norm < 1e-12);
      for (double& value : bias) value /= norm;
      biases.push_back(std::move(bias));
    }
  }

  BenchmarkBundle bundle;
  bundle.spec = spec;
  bundle.syn_pool = sample_domain(spec, DomainTag::SyntheticAerial, means, biases, kSeedSyn);
  bundle.real_pool = sample_domain(spec, DomainTag::RealGround, means, biases, kSeedReal);
  bundle.target_pool = sample_domain(spec, DomainTag::RealAerial, means, biases, kSeedTarget);
  return bundle;
}

void emit_bundle(const BenchmarkBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "features");
  std::filesystem::create_directories(dir / "pools");

  save_benchmark_spec(bundle.spec, dir / "spec.json");
  save_class_registry(canonical_classes(), dir / "classes.tsv");

  const struct {
    const SamplePool& pool;
    DomainTag tag;
    const char* stem;
  } domains[] = {
      {bundle.syn_pool, DomainTag::SyntheticAerial, "syn_aerial"},
      {bundle.real_pool, DomainTag::RealGround, "real_ground"},
      {bundle.target_pool, DomainTag::RealAerial, "target_test"},
  };
  for (const auto& domain : domains) {
    DatasetManifest manifest = manifest_for(domain.pool, domain.tag, bundle.spec);
    save_manifest(manifest, dir / (std::string(domain.stem) + ".manifest"));
    save_pool(domain.pool, dir / "pools" / (std::string(domain.stem) + ".pool"));
    for (const TrainingSample& sample : domain.pool.samples) {
      // Constant rows: every frame carries the sample's feature vector.
      std::vector<std::vector<double>> rows(static_cast<std::size_t>(kClipFrames),
                                            sample.features);
      save_feature_sidecar(dir / "features" / (sample.clip_id + ".feat"), rows);
    }
  }
}

}  // namespace curricula
