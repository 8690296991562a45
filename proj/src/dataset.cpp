#include "curricula/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "curricula/errors.hpp"
#include "curricula/log.hpp"

namespace curricula {

namespace {

constexpr std::string_view kManifestHeader = "#manifest v1";

std::int64_t parse_int(std::string_view text, const std::string& what) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError("invalid " + what + ": '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string rle_encode(const std::vector<int>& labels) {
  std::string out;
  std::size_t i = 0;
  while (i < labels.size()) {
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(labels[i]);
    out += ':';
    out += std::to_string(j - i);
    i = j;
  }
  return out;
}

std::vector<int> rle_decode(std::string_view text, int line_no) {
  std::vector<int> labels;
  for (std::string_view pair : split(text, ',')) {
    std::size_t colon = pair.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": malformed run-length pair '" + std::string(pair) + "'");
    }
    std::int64_t label = parse_int(pair.substr(0, colon), "label");
    std::int64_t count = parse_int(pair.substr(colon + 1), "run length");
    if (count <= 0) {
      throw ParseError("line " + std::to_string(line_no) + ": run length must be positive");
    }
    labels.insert(labels.end(), static_cast<std::size_t>(count), static_cast<int>(label));
  }
  return labels;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  return out;
}

}  // namespace

std::string to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::SyntheticAerial: return "syn_aerial";
    case DomainTag::RealGround: return "real_ground";
    case DomainTag::RealAerial: return "real_aerial";
  }
  throw ValidationError("invalid domain tag");
}

DomainTag parse_domain(std::string_view text) {
  if (text == "syn_aerial") return DomainTag::SyntheticAerial;
  if (text == "real_ground") return DomainTag::RealGround;
  if (text == "real_aerial") return DomainTag::RealAerial;
  throw ParseError("unknown domain '" + std::string(text) + "'");
}

const std::vector<ActionClass>& canonical_classes() {
  static const std::vector<ActionClass> classes = {
      {0, "idle"},
      {1, "wave"},
      {2, "wave attention"},
      {3, "shake fist"},
      {4, "move forward"},
      {5, "come here"},
      {6, "take picture with phone"},
      {7, "carry a shovel"},
      {8, "carry a bat"},
      {9, "carry a phone"},
      {10, "talk on a phone"},
      {11, "hold flashlight"},
  };
  return classes;
}

Rational Rational::parse(std::string_view text) {
  Rational r;
  std::size_t slash = text.find('/');
  std::size_t dot = text.find('.');
  if (slash != std::string_view::npos) {
    r.num = parse_int(text.substr(0, slash), "fps numerator");
    r.den = parse_int(text.substr(slash + 1), "fps denominator");
  } else if (dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) throw ParseError("invalid fps: '" + std::string(text) + "'");
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    r.num = parse_int(whole, "fps") * scale + parse_int(frac, "fps fraction");
    r.den = scale;
  } else {
    r.num = parse_int(text, "fps");
    r.den = 1;
  }
  if (r.num <= 0 || r.den <= 0) throw ParseError("fps must be positive: '" + std::string(text) + "'");
  return r.normalized();
}

Rational Rational::normalized() const {
  std::int64_t g = std::gcd(num, den);
  return Rational{num / g, den / g};
}

std::string Rational::to_string() const {
  Rational n = normalized();
  if (n.den == 1) return std::to_string(n.num);
  return std::to_string(n.num) + "/" + std::to_string(n.den);
}

int majority_label(const ClipRecord& clip) {
  if (clip.frame_labels.empty()) throw ValidationError("clip '" + clip.clip_id + "' has no frames");
  std::map<int, std::size_t> counts;
  for (int label : clip.frame_labels) ++counts[label];
  int best = clip.frame_labels.front();
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {  // map order makes ties resolve to the smaller id
      best = label;
      best_count = count;
    }
  }
  return best;
}

DatasetManifest::DatasetManifest(std::vector<ClipRecord> records,
                                 std::vector<ActionClass> registry, std::string provenance)
    : records_(std::move(records)),
      registry_(std::move(registry)),
      provenance_(std::move(provenance)) {
  std::sort(records_.begin(), records_.end(),
            [](const ClipRecord& a, const ClipRecord& b) { return a.clip_id < b.clip_id; });
  validate();
}

void DatasetManifest::validate() const {
  if (registry_.empty()) throw ValidationError("class registry is empty");
  std::unordered_set<int> ids;
  for (const auto& cls : registry_) {
    if (cls.id < 0) throw ValidationError("negative class id in registry");
    if (!ids.insert(cls.id).second) {
      throw ValidationError("duplicate class id " + std::to_string(cls.id) + " in registry");
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& record : records_) {
    if (record.clip_id.empty()) throw ValidationError("empty clip_id");
    if (!seen.insert(record.clip_id).second) {
      throw ValidationError("duplicate clip_id '" + record.clip_id + "'");
    }
    if (record.frame_labels.empty()) {
      throw ValidationError("clip '" + record.clip_id + "' has empty frame_labels");
    }
    if (record.fps.num <= 0 || record.fps.den <= 0) {
      throw ValidationError("clip '" + record.clip_id + "' has non-positive fps");
    }
    for (int label : record.frame_labels) {
      if (ids.find(label) == ids.end()) {
        throw ValidationError("unknown class id " + std::to_string(label) + " in clip '" +
                              record.clip_id + "'");
      }
    }
  }
}

std::size_t DatasetManifest::total_frames() const {
  std::size_t total = 0;
  for (const auto& record : records_) total += record.frame_labels.size();
  return total;
}

std::vector<std::string> DatasetManifest::subjects() const {
  std::set<std::string> unique;
  for (const auto& record : records_) unique.insert(record.subject_id);
  return {unique.begin(), unique.end()};
}

bool DatasetManifest::has_domain(DomainTag tag) const {
  return std::any_of(records_.begin(), records_.end(),
                     [tag](const ClipRecord& r) { return r.domain == tag; });
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return load_manifest(path, canonical_classes());
}

DatasetManifest load_manifest(const std::filesystem::path& path,
                              std::vector<ActionClass> registry) {
  std::ifstream in = open_for_read(path);
  std::string line;
  int line_no = 0;
  std::string provenance;
  std::vector<ClipRecord> records;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 || !saw_header) {
      if (line.rfind(kManifestHeader, 0) != 0) {
        throw FormatError(path.string() + ": missing '#manifest v1' header");
      }
      saw_header = true;
      if (line.size() > kManifestHeader.size()) {
        std::string rest = line.substr(kManifestHeader.size());
        std::size_t begin = rest.find_first_not_of(' ');
        if (begin != std::string::npos) provenance = rest.substr(begin);
      }
      continue;
    }
    if (line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 5) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": expected 5 tab-separated fields, got " + std::to_string(fields.size()));
    }
    ClipRecord record;
    record.clip_id = std::string(fields[0]);
    record.subject_id = std::string(fields[1]);
    record.domain = parse_domain(fields[2]);
    record.fps = Rational::parse(fields[3]);
    record.frame_labels = rle_decode(fields[4], line_no);
    records.push_back(std::move(record));
  }
  if (!saw_header) throw FormatError(path.string() + ": missing '#manifest v1' header");
  return DatasetManifest(std::move(records), std::move(registry), std::move(provenance));
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << kManifestHeader;
  if (!manifest.provenance().empty()) out << ' ' << manifest.provenance();
  out << '\n';
  for (const auto& record : manifest.records()) {
    out << record.clip_id << '\t' << record.subject_id << '\t' << to_string(record.domain)
        << '\t' << record.fps.to_string() << '\t' << rle_encode(record.frame_labels) << '\n';
  }
  if (!out) throw IoError("failed writing manifest: " + path.string());
}

std::vector<ActionClass> load_class_registry(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::vector<ActionClass> registry;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": expected 'id<TAB>name'");
    }
    registry.push_back({static_cast<int>(parse_int(fields[0], "class id")),
                        std::string(fields[1])});
  }
  if (registry.empty()) throw ValidationError(path.string() + ": empty class registry");
  return registry;
}

void save_class_registry(const std::vector<ActionClass>& registry,
                         const std::filesystem::path& path) {
  std::vector<ActionClass> sorted = registry;
  std::sort(sorted.begin(), sorted.end(),
            [](const ActionClass& a, const ActionClass& b) { return a.id < b.id; });
  std::ofstream out = open_for_write(path);
  for (const auto& cls : sorted) out << cls.id << '\t' << cls.name << '\n';
  if (!out) throw IoError("failed writing class registry: " + path.string());
}

std::vector<std::uint64_t> class_histogram(const DatasetManifest& manifest,
                                           HistogramLevel level) {
  int max_id = 0;
  for (const auto& cls : manifest.class_registry()) max_id = std::max(max_id, cls.id);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(max_id) + 1, 0);
  for (const auto& record : manifest.records()) {
    if (level == HistogramLevel::Clip) {
      ++counts[static_cast<std::size_t>(majority_label(record))];
    } else {
      for (int label : record.frame_labels) ++counts[static_cast<std::size_t>(label)];
    }
  }
  return counts;
}

DatasetManifest filter_subjects(const DatasetManifest& manifest,
                                const std::set<std::string>& excluded) {
  std::set<std::string> present;
  for (const auto& record : manifest.records()) present.insert(record.subject_id);
  for (const auto& subject : excluded) {
    if (present.find(subject) == present.end()) {
      log_warn("filter_subjects: excluded subject '" + subject + "' does not appear");
    }
  }
  std::vector<ClipRecord> kept;
  for (const auto& record : manifest.records()) {
    if (excluded.find(record.subject_id) == excluded.end()) kept.push_back(record);
  }
  return DatasetManifest(std::move(kept), manifest.class_registry(), manifest.provenance());
}

}  // namespace curricula
