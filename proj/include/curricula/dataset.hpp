#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace curricula {

/// Source domain of a clip. RealAerial is the held-out evaluation domain and
/// is refused by every training-schedule constructor.
enum class DomainTag { SyntheticAerial, RealGround, RealAerial };

std::string to_string(DomainTag tag);
DomainTag parse_domain(std::string_view text);

struct ActionClass {
  int id = 0;
  std::string name;

  bool operator==(const ActionClass&) const = default;
};

/// The canonical 12-class action registry (ids 0..11).
const std::vector<ActionClass>& canonical_classes();

/// Exact positive rational, used for frame rates (e.g. 30, 2997/100).
struct Rational {
  std::int64_t num = 30;
  std::int64_t den = 1;

  static Rational parse(std::string_view text);
  Rational normalized() const;
  std::string to_string() const;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  bool operator==(const Rational&) const = default;
};

struct ClipRecord {
  std::string clip_id;
  std::string subject_id;
  DomainTag domain = DomainTag::SyntheticAerial;
  Rational fps;
  std::vector<int> frame_labels;
  std::optional<std::string> feature_path;  // sidecar override; not serialized
};

/// Majority frame label of a clip; ties break toward the smaller class id.
int majority_label(const ClipRecord& clip);

/// Immutable, validated collection of clip records. Records are kept sorted
/// by clip_id so that serialization and iteration order are canonical.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  DatasetManifest(std::vector<ClipRecord> records, std::vector<ActionClass> registry,
                  std::string provenance);

  const std::vector<ClipRecord>& records() const { return records_; }
  const std::vector<ActionClass>& class_registry() const { return registry_; }
  const std::string& provenance() const { return provenance_; }

  std::size_t total_frames() const;
  /// Sorted unique subject ids.
  std::vector<std::string> subjects() const;
  bool has_domain(DomainTag tag) const;

 private:
  void validate() const;

  std::vector<ClipRecord> records_;
  std::vector<ActionClass> registry_;
  std::string provenance_;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path,
                              std::vector<ActionClass> registry);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::vector<ActionClass> load_class_registry(const std::filesystem::path& path);
void save_class_registry(const std::vector<ActionClass>& registry,
                         const std::filesystem::path& path);

enum class HistogramLevel { Clip, Frame };

/// Per-class counts, indexed by class id. Clip level counts each record once
/// under its majority label; frame level counts every frame.
std::vector<std::uint64_t> class_histogram(const DatasetManifest& manifest,
                                           HistogramLevel level);

/// Returns the records whose subject_id is not in `excluded`. Excluded
/// subjects that never appear are reported at warn level.
DatasetManifest filter_subjects(const DatasetManifest& manifest,
                                const std::set<std::string>& excluded);

}  // namespace curricula
