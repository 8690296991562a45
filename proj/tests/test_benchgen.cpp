#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "curricula/benchgen.hpp"
#include "curricula/clip_pipeline.hpp"
#include "curricula/dataset.hpp"
#include "curricula/errors.hpp"
#include "curricula/sampling.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace curricula;

namespace {

fs::path temp_dir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / "curricula_benchgen_tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

BenchmarkSpec small_spec() {
  BenchmarkSpec spec;
  spec.d = 6;
  spec.n_classes = 4;
  spec.samples_per_class_per_domain = 3;
  spec.class_separation = 2.0;
  spec.viewpoint_rotation_angle = 0.9;
  spec.realism_bias_scale = 0.7;
  spec.noise_inflation = 0.5;
  spec.noise_sigma = 0.0;  // exact class means: geometry is directly checkable
  spec.seed = 5;
  return spec;
}

std::map<int, std::vector<double>> features_by_class(const SamplePool& pool) {
  std::map<int, std::vector<double>> out;
  for (const auto& sample : pool.samples) out[sample.label] = sample.features;
  return out;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum);
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("spec validation rejects degenerate benchmarks") {
  BenchmarkSpec spec = small_spec();
  CHECK_NOTHROW(spec.validate());

  BenchmarkSpec bad = spec;
  bad.d = 1;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = spec;
  bad.n_classes = 1;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = spec;
  bad.n_classes = 13;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = spec;
  bad.samples_per_class_per_domain = 0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = spec;
  bad.class_separation = -1.0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = spec;
  bad.noise_sigma = -0.1;
  CHECK_THROWS_AS(bad.validate(), SpecError);
}

TEST_CASE("spec JSON round trips and fills defaults") {
  BenchmarkSpec spec = small_spec();
  fs::path path = temp_dir("spec") / "spec.json";
  save_benchmark_spec(spec, path);
  BenchmarkSpec loaded = load_benchmark_spec(path);
  CHECK(loaded.d == spec.d);
  CHECK(loaded.n_classes == spec.n_classes);
  CHECK(loaded.samples_per_class_per_domain == spec.samples_per_class_per_domain);
  CHECK(loaded.class_separation == spec.class_separation);
  CHECK(loaded.viewpoint_rotation_angle == spec.viewpoint_rotation_angle);
  CHECK(loaded.realism_bias_scale == spec.realism_bias_scale);
  CHECK(loaded.noise_inflation == spec.noise_inflation);
  CHECK(loaded.noise_sigma == spec.noise_sigma);
  CHECK(loaded.seed == spec.seed);

  fs::path partial = temp_dir("spec") / "partial.json";
  std::ofstream(partial) << "{\"d\": 8, \"seed\": 3}\n";
  BenchmarkSpec defaults = load_benchmark_spec(partial);
  CHECK(defaults.d == 8);
  CHECK(defaults.seed == 3);
  CHECK(defaults.n_classes == 12);
  CHECK(defaults.samples_per_class_per_domain == 40);

  fs::path malformed = temp_dir("spec") / "broken.json";
  std::ofstream(malformed) << "{\"d\": \n";
  CHECK_THROWS_AS(load_benchmark_spec(malformed), ParseError);

  fs::path invalid = temp_dir("spec") / "invalid.json";
  std::ofstream(invalid) << "{\"d\": 1}\n";
  CHECK_THROWS_AS(load_benchmark_spec(invalid), SpecError);

  CHECK_THROWS_AS(load_benchmark_spec(temp_dir("spec") / "missing.json"), IoError);
}

TEST_CASE("generation is deterministic in the spec seed") {
  BenchmarkSpec spec = small_spec();
  spec.noise_sigma = 1.0;
  BenchmarkBundle a = generate_benchmark(spec);
  BenchmarkBundle b = generate_benchmark(spec);

  REQUIRE(a.syn_pool.size() == b.syn_pool.size());
  for (std::size_t i = 0; i < a.syn_pool.size(); ++i) {
    CHECK(a.syn_pool.samples[i].clip_id == b.syn_pool.samples[i].clip_id);
    CHECK(bitwise_equal(a.syn_pool.samples[i].features, b.syn_pool.samples[i].features));
  }
  for (std::size_t i = 0; i < a.target_pool.size(); ++i) {
    CHECK(bitwise_equal(a.target_pool.samples[i].features,
                        b.target_pool.samples[i].features));
  }

  BenchmarkSpec other = spec;
  other.seed = 6;
  BenchmarkBundle c = generate_benchmark(other);
  CHECK_FALSE(bitwise_equal(a.syn_pool.samples[0].features, c.syn_pool.samples[0].features));
}

TEST_CASE("bundle pools have the declared shape with disjoint clip ids") {
  BenchmarkSpec spec = small_spec();
  spec.noise_sigma = 1.0;
  BenchmarkBundle bundle = generate_benchmark(spec);

  std::set<std::string> all_ids;
  for (const SamplePool* pool : {&bundle.syn_pool, &bundle.real_pool, &bundle.target_pool}) {
    CHECK(pool->size() == 12);  // 4 classes x 3
    for (const auto& [label, count] : pool->class_counts()) CHECK(count == 3);
    for (const auto& sample : pool->samples) {
      CHECK(all_ids.insert(sample.clip_id).second);
      CHECK(sample.features.size() == 6);
      CHECK(sample.start_frame == 0);
      REQUIRE(sample.frame_indices.size() == 16);
      CHECK(sample.frame_indices[15] == 60);
    }
  }
  for (const auto& sample : bundle.syn_pool.samples) {
    CHECK(sample.clip_id.rfind("syn_", 0) == 0);
  }
  CHECK(bundle.real_pool.samples[0].clip_id.rfind("real_", 0) == 0);
  CHECK(bundle.target_pool.samples[0].clip_id.rfind("tgt_", 0) == 0);
  // Zero-padded ids: class then index.
  CHECK(bundle.syn_pool.samples[0].clip_id == "syn_c00_0000");
}

TEST_CASE("domains encode the intended geometric shifts") {
  BenchmarkSpec spec = small_spec();  // sigma 0: samples sit exactly on the means
  BenchmarkBundle bundle = generate_benchmark(spec);

  std::map<int, std::vector<double>> target = features_by_class(bundle.target_pool);
  std::map<int, std::vector<double>> real = features_by_class(bundle.real_pool);
  std::map<int, std::vector<double>> syn = features_by_class(bundle.syn_pool);

  const double c = std::cos(spec.viewpoint_rotation_angle);
  const double s = std::sin(spec.viewpoint_rotation_angle);
  for (int label = 0; label < spec.n_classes; ++label) {
    const std::vector<double>& mean = target[label];

    // Real-ground means are the target means rotated in the (0, 1) plane.
    CHECK(real[label][0] ==
          doctest::Approx(c * mean[0] - s * mean[1]).epsilon(1e-9));
    CHECK(real[label][1] ==
          doctest::Approx(s * mean[0] + c * mean[1]).epsilon(1e-9));
    for (std::size_t i = 2; i < mean.size(); ++i) {
      CHECK(real[label][i] == doctest::Approx(mean[i]).epsilon(1e-12));
    }
    CHECK(dist(real[label], mean) > 0.01);

    // Syn-aerial means are the target means plus a unit bias at the
    // configured scale (viewpoint aligned, realism gap).
    CHECK(dist(syn[label], mean) ==
          doctest::Approx(spec.realism_bias_scale).epsilon(1e-6));
  }

  // Class means honor the pairwise separation floor.
  for (int a = 0; a < spec.n_classes; ++a) {
    for (int b = a + 1; b < spec.n_classes; ++b) {
      CHECK(dist(target[a], target[b]) >= spec.class_separation - 1e-9);
    }
  }
}

TEST_CASE("synthetic noise is inflated relative to the base sigma") {
  BenchmarkSpec spec = small_spec();
  spec.samples_per_class_per_domain = 400;
  spec.n_classes = 2;
  spec.noise_sigma = 1.0;
  spec.noise_inflation = 1.5;
  BenchmarkBundle bundle = generate_benchmark(spec);

  auto component_std = [](const SamplePool& pool, int label) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto& sample : pool.samples) {
      if (sample.label != label) continue;
      sum += sample.features[0];
      sum_sq += sample.features[0] * sample.features[0];
      ++n;
    }
    double mean = sum / static_cast<double>(n);
    return std::sqrt(sum_sq / static_cast<double>(n) - mean * mean);
  };

  double target_std = component_std(bundle.target_pool, 0);
  double syn_std = component_std(bundle.syn_pool, 0);
  CHECK(target_std == doctest::Approx(1.0).epsilon(0.15));
  CHECK(syn_std == doctest::Approx(2.5).epsilon(0.15));
}

TEST_CASE("emitted bundles pass back through the standard pipeline") {
  BenchmarkSpec spec = small_spec();
  spec.noise_sigma = 1.0;
  BenchmarkBundle bundle = generate_benchmark(spec);
  fs::path dir = temp_dir("emit");
  emit_bundle(bundle, dir);

  CHECK(fs::exists(dir / "spec.json"));
  CHECK(fs::exists(dir / "classes.tsv"));
  for (const char* stem : {"syn_aerial", "real_ground", "target_test"}) {
    CHECK(fs::exists(dir / (std::string(stem) + ".manifest")));
    CHECK(fs::exists(dir / "pools" / (std::string(stem) + ".pool")));
  }
  std::size_t sidecars = 0;
  for (const auto& entry : fs::directory_iterator(dir / "features")) {
    (void)entry;
    ++sidecars;
  }
  CHECK(sidecars == 36);  // 12 clips per domain

  DatasetManifest manifest = load_manifest(dir / "syn_aerial.manifest");
  CHECK(manifest.records().size() == 12);
  for (const auto& record : manifest.records()) {
    CHECK(record.frame_labels.size() == 64);
    CHECK(record.domain == DomainTag::SyntheticAerial);
    // Single-label clips survive windowing intact.
    CHECK(std::set<int>(record.frame_labels.begin(), record.frame_labels.end()).size() == 1);
    CHECK(record.subject_id.rfind("syn_subj", 0) == 0);
  }
  std::vector<std::string> subject_list = manifest.subjects();
  CHECK(std::set<std::string>(subject_list.begin(), subject_list.end()).size() == 5);

  // Windowing keeps exactly one 64-frame window per clip.
  SidecarFeatureSource source(dir / "features");
  WindowingConfig cfg;
  std::vector<TrainingSample> samples = build_sample_set(manifest, cfg, source);
  CHECK(samples.size() == 12);
}

TEST_CASE("emit then load_pool reproduces pool features bit-exactly") {
  BenchmarkSpec spec = small_spec();
  spec.noise_sigma = 1.3;
  BenchmarkBundle bundle = generate_benchmark(spec);
  fs::path dir = temp_dir("lossless");
  emit_bundle(bundle, dir);

  const struct {
    const SamplePool& pool;
    const char* stem;
  } domains[] = {
      {bundle.syn_pool, "syn_aerial"},
      {bundle.real_pool, "real_ground"},
      {bundle.target_pool, "target_test"},
  };
  WindowingConfig cfg;
  for (const auto& domain : domains) {
    DatasetManifest manifest = load_manifest(dir / (std::string(domain.stem) + ".manifest"));
    SidecarFeatureSource source(dir / "features");
    SamplePool loaded =
        load_pool(dir / "pools" / (std::string(domain.stem) + ".pool"), manifest, cfg, source);

    REQUIRE(loaded.size() == domain.pool.size());
    std::map<std::string, std::vector<double>> by_id;
    for (const auto& sample : domain.pool.samples) by_id[sample.clip_id] = sample.features;
    for (const auto& sample : loaded.samples) {
      REQUIRE(by_id.count(sample.clip_id) == 1);
      // The 16-row sidecar mean must reproduce the generated features
      // exactly; quantization at generation time guarantees it.
      CHECK(bitwise_equal(sample.features, by_id[sample.clip_id]));
    }
  }
}
