#include "curricula/metrics_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "curricula/errors.hpp"

namespace curricula {

namespace {

std::string dump_number(double value) { return nlohmann::json(value).dump(); }

std::string fixed2(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

std::string signed2(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%+.2f", value);
  return buffer;
}

std::string percent_int(double fraction) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%ld%%", std::lround(fraction * 100.0));
  return buffer;
}

nlohmann::json report_to_json(const EfficiencyReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const StrategyOutcome& entry : report.entries) {
    nlohmann::json node{{"label", entry.label},
                        {"total_iterations", entry.total_iterations},
                        {"top1", entry.top1}};
    if (!entry.eval.confusion.empty()) {
      node["n_samples"] = entry.eval.n_samples;
      node["confusion"] = entry.eval.confusion;
      node["per_class_accuracy"] = entry.eval.per_class_accuracy;
    }
    entries.push_back(std::move(node));
  }
  nlohmann::json deltas = nlohmann::json::array();
  for (const DeltaRow& delta : report.deltas) {
    deltas.push_back({{"label", delta.label},
                      {"iteration_delta", delta.iteration_delta},
                      {"percent_savings", delta.percent_savings},
                      {"accuracy_delta_points", delta.accuracy_delta_points}});
  }
  return {{"base_label", report.base_label}, {"entries", entries}, {"deltas", deltas}};
}

EfficiencyReport report_from_json(const nlohmann::json& doc) {
  EfficiencyReport report;
  report.base_label = doc.at("base_label").get<std::string>();
  for (const auto& node : doc.at("entries")) {
    StrategyOutcome entry;
    entry.label = node.at("label").get<std::string>();
    entry.total_iterations = node.at("total_iterations").get<std::uint64_t>();
    entry.top1 = node.at("top1").get<double>();
    if (node.contains("confusion")) {
      entry.eval.n_samples = node.at("n_samples").get<std::size_t>();
      entry.eval.confusion = node.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
      entry.eval.per_class_accuracy = node.at("per_class_accuracy").get<std::vector<double>>();
      entry.eval.top1 = entry.top1;
    }
    report.entries.push_back(std::move(entry));
  }
  for (const auto& node : doc.at("deltas")) {
    DeltaRow delta;
    delta.label = node.at("label").get<std::string>();
    delta.iteration_delta = node.at("iteration_delta").get<std::int64_t>();
    delta.percent_savings = node.at("percent_savings").get<double>();
    delta.accuracy_delta_points = node.at("accuracy_delta_points").get<double>();
    report.deltas.push_back(std::move(delta));
  }
  return report;
}

constexpr char kCsvHeader[] =
    "strategy,top1,total_iterations,accuracy_delta_points,iteration_delta,percent_savings";

}  // namespace

EvalResult evaluate(const ModelCheckpoint& ckpt, const SamplePool& test_pool) {
  if (test_pool.empty()) throw ConfigError("evaluate requires a non-empty pool");
  const int classes = ckpt.shape.classes;
  EvalResult result;
  result.n_samples = test_pool.size();
  result.confusion.assign(static_cast<std::size_t>(classes),
                          std::vector<std::uint64_t>(static_cast<std::size_t>(classes), 0));
  for (const TrainingSample& sample : test_pool.samples) {
    if (sample.label < 0 || sample.label >= classes) {
      throw ValidationError("evaluate: label " + std::to_string(sample.label) +
                            " outside model range");
    }
    const std::vector<double> probs = forward(ckpt.shape, ckpt.params, sample.features);
    int best = 0;
    for (int j = 1; j < classes; ++j) {
      if (probs[static_cast<std::size_t>(j)] > probs[static_cast<std::size_t>(best)]) best = j;
    }
    ++result.confusion[static_cast<std::size_t>(sample.label)][static_cast<std::size_t>(best)];
  }
  std::uint64_t diagonal = 0;
  for (int c = 0; c < classes; ++c) {
    const auto& row = result.confusion[static_cast<std::size_t>(c)];
    std::uint64_t support = 0;
    for (std::uint64_t count : row) support += count;
    const std::uint64_t hits = row[static_cast<std::size_t>(c)];
    diagonal += hits;
    result.per_class_accuracy.push_back(
        support == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(support));
  }
  result.top1 = static_cast<double>(diagonal) / static_cast<double>(result.n_samples);
  return result;
}

EfficiencyReport build_efficiency_report(const std::vector<StrategyOutcome>& entries,
                                         const std::string& base_label) {
  if (entries.size() < 2) {
    throw LabelError("efficiency report needs at least two entries");
  }
  const StrategyOutcome* base = nullptr;
  std::map<std::string, const StrategyOutcome*> seen;
  for (const StrategyOutcome& entry : entries) {
    if (!seen.emplace(entry.label, &entry).second) {
      throw LabelError("duplicate strategy label '" + entry.label + "'");
    }
    if (entry.label == base_label) base = &entry;
  }
  if (base == nullptr) {
    throw LabelError("base label '" + base_label + "' not among the entries");
  }
  if (base->total_iterations == 0) {
    throw ValidationError("base entry '" + base_label + "' has zero iterations");
  }

  EfficiencyReport report;
  report.base_label = base_label;
  report.entries = entries;
  for (const StrategyOutcome& entry : entries) {
    if (entry.label == base_label) continue;
    DeltaRow delta;
    delta.label = entry.label;
    delta.iteration_delta = static_cast<std::int64_t>(base->total_iterations) -
                            static_cast<std::int64_t>(entry.total_iterations);
    delta.percent_savings =
        static_cast<double>(delta.iteration_delta) / static_cast<double>(base->total_iterations);
    delta.accuracy_delta_points = (entry.top1 - base->top1) * 100.0;
    report.deltas.push_back(std::move(delta));
  }
  return report;
}

std::string render_table(const EfficiencyReport& report, TableFormat format) {
  std::map<std::string, const DeltaRow*> deltas;
  for (const DeltaRow& delta : report.deltas) deltas.emplace(delta.label, &delta);

  std::ostringstream out;
  switch (format) {
    case TableFormat::Json:
      out << report_to_json(report).dump(2) << '\n';
      break;
    case TableFormat::Csv: {
      out << kCsvHeader << '\n';
      for (const StrategyOutcome& entry : report.entries) {
        out << entry.label << ',' << dump_number(entry.top1) << ',' << entry.total_iterations;
        auto it = deltas.find(entry.label);
        if (it == deltas.end()) {
          out << ",,,\n";
        } else {
          out << ',' << dump_number(it->second->accuracy_delta_points) << ','
              << it->second->iteration_delta << ',' << dump_number(it->second->percent_savings)
              << '\n';
        }
      }
      break;
    }
    case TableFormat::Markdown: {
      out << "| strategy | top1_pct | iterations | acc_delta_pts | iter_delta | savings |\n";
      out << "|:---|---:|---:|---:|---:|---:|\n";
      for (const StrategyOutcome& entry : report.entries) {
        out << "| " << entry.label;
        if (entry.label == report.base_label) out << " (base)";
        out << " | " << fixed2(entry.top1 * 100.0) << " | " << entry.total_iterations;
        auto it = deltas.find(entry.label);
        if (it == deltas.end()) {
          out << " | | | |\n";
        } else {
          out << " | " << signed2(it->second->accuracy_delta_points) << " | "
              << it->second->iteration_delta << " | " << percent_int(it->second->percent_savings)
              << " |\n";
        }
      }
      break;
    }
  }
  return out.str();
}

EfficiencyReport parse_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParseError("report csv: unexpected header");
  }
  EfficiencyReport report;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
      std::size_t comma = line.find(',', begin);
      fields.push_back(line.substr(begin, comma - begin));
      if (comma == std::string::npos) break;
      begin = comma + 1;
    }
    if (fields.size() != 6) {
      throw ParseError("report csv: line " + std::to_string(line_no) + ": expected 6 fields");
    }
    StrategyOutcome entry;
    entry.label = fields[0];
    entry.top1 = std::strtod(fields[1].c_str(), nullptr);
    entry.total_iterations = std::strtoull(fields[2].c_str(), nullptr, 10);
    report.entries.push_back(entry);
    if (fields[3].empty() && fields[4].empty() && fields[5].empty()) {
      if (!report.base_label.empty()) {
        throw ParseError("report csv: multiple base rows");
      }
      report.base_label = entry.label;
    } else {
      DeltaRow delta;
      delta.label = entry.label;
      delta.accuracy_delta_points = std::strtod(fields[3].c_str(), nullptr);
      delta.iteration_delta = std::strtoll(fields[4].c_str(), nullptr, 10);
      delta.percent_savings = std::strtod(fields[5].c_str(), nullptr);
      report.deltas.push_back(std::move(delta));
    }
  }
  if (report.base_label.empty()) throw ParseError("report csv: no base row");
  return report;
}

void save_report(const EfficiencyReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << render_table(report, TableFormat::Json);
  if (!out) throw IoError("failed writing report: " + path.string());
}

EfficiencyReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    return report_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace {

class Svg {
 public:
  Svg(int width, int height) : width_(width), height_(height) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
         << height_ << "\" viewBox=\"0 0 " << width_ << ' ' << height_ << "\">\n";
    out_ << "<rect x=\"0\" y=\"0\" width=\"" << width_ << "\" height=\"" << height_
         << "\" fill=\"#ffffff\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const char* stroke = "#333333") {
    out_ << "<line x1=\"" << coord(x1) << "\" y1=\"" << coord(y1) << "\" x2=\"" << coord(x2)
         << "\" y2=\"" << coord(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill) {
    out_ << "<rect x=\"" << coord(x) << "\" y=\"" << coord(y) << "\" width=\"" << coord(w)
         << "\" height=\"" << coord(h) << "\" fill=\"" << fill << "\"/>\n";
  }

  void circle(double cx, double cy, double r, const char* fill) {
    out_ << "<circle cx=\"" << coord(cx) << "\" cy=\"" << coord(cy) << "\" r=\"" << coord(r)
         << "\" fill=\"" << fill << "\"/>\n";
  }

  void text(double x, double y, int size, const std::string& content,
            const char* anchor = "start") {
    out_ << "<text x=\"" << coord(x) << "\" y=\"" << coord(y) << "\" font-size=\"" << size
         << "\" font-family=\"monospace\" text-anchor=\"" << anchor << "\">" << content
         << "</text>\n";
  }

  void save(const std::filesystem::path& path) {
    out_ << "</svg>\n";
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write plot: " + path.string());
    file << out_.str();
    if (!file) throw IoError("failed writing plot: " + path.string());
  }

 private:
  static std::string coord(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
  }

  int width_;
  int height_;
  std::ostringstream out_;
};

std::string gray_fill(double fraction) {
  const int lum = 255 - static_cast<int>(std::lround(215.0 * fraction));
  char buffer[8];
  std::snprintf(buffer, sizeof(buffer), "#%02x%02x%02x", lum, lum, lum);
  return buffer;
}

void plot_scatter(const EfficiencyReport& report, const std::filesystem::path& path) {
  const int w = 640, h = 480, left = 70, right = 30, top = 20, bottom = 50;
  const double plot_w = w - left - right;
  const double plot_h = h - top - bottom;
  std::uint64_t max_iters = 1;
  for (const auto& entry : report.entries) {
    max_iters = std::max(max_iters, entry.total_iterations);
  }
  const double x_span = static_cast<double>(max_iters) * 1.05;

  Svg svg(w, h);
  svg.line(left, top, left, h - bottom);
  svg.line(left, h - bottom, w - right, h - bottom);
  svg.text(left - 8, h - bottom + 4, 10, "0", "end");
  svg.text(left - 8, top + 8, 10, "1.0", "end");
  svg.text(left - 8, top + plot_h / 2 + 4, 10, "0.5", "end");
  svg.text(w - right, h - bottom + 16, 10, std::to_string(max_iters), "end");
  svg.text(left + plot_w / 2, h - 12, 11, "iterations", "middle");
  svg.text(14, top + plot_h / 2, 11, "top1", "middle");
  for (const auto& entry : report.entries) {
    const double x = left + plot_w * (static_cast<double>(entry.total_iterations) / x_span);
    const double y = top + plot_h * (1.0 - entry.top1);
    svg.circle(x, y, 5, "#336699");
    svg.text(x + 8, y - 6, 10, entry.label);
  }
  svg.save(path);
}

void plot_bars(const EfficiencyReport& report, const std::filesystem::path& path,
               bool accuracy) {
  const int n = static_cast<int>(report.entries.size());
  const int slot = 120, left = 60, right = 20, top = 20, bottom = 60;
  const int w = left + right + slot * n;
  const int h = 420;
  const double plot_h = h - top - bottom;
  std::uint64_t max_iters = 1;
  for (const auto& entry : report.entries) {
    max_iters = std::max(max_iters, entry.total_iterations);
  }

  Svg svg(w, h);
  svg.line(left, top, left, h - bottom);
  svg.line(left, h - bottom, w - right, h - bottom);
  for (int i = 0; i < n; ++i) {
    const StrategyOutcome& entry = report.entries[static_cast<std::size_t>(i)];
    const double fraction =
        accuracy ? entry.top1
                 : static_cast<double>(entry.total_iterations) / static_cast<double>(max_iters);
    const double bar_h = plot_h * fraction;
    const double x = left + slot * i + 15;
    svg.rect(x, h - bottom - bar_h, slot - 30, bar_h, accuracy ? "#336699" : "#996633");
    svg.text(x + (slot - 30) / 2.0, h - bottom - bar_h - 6, 10,
             accuracy ? fixed2(entry.top1 * 100.0) : std::to_string(entry.total_iterations),
             "middle");
    svg.text(x + (slot - 30) / 2.0, h - bottom + 16, 9, entry.label, "middle");
  }
  svg.text(left, 14, 11, accuracy ? "top1 accuracy (%)" : "total iterations");
  svg.save(path);
}

void plot_confusion(const StrategyOutcome& entry, const std::filesystem::path& path) {
  const int classes = static_cast<int>(entry.eval.confusion.size());
  const int cell = 28, left = 50, top = 50;
  const int w = left + cell * classes + 20;
  const int h = top + cell * classes + 20;

  Svg svg(w, h);
  svg.text(left, 16, 11, entry.label + " confusion (rows: true)");
  for (int r = 0; r < classes; ++r) {
    const auto& row = entry.eval.confusion[static_cast<std::size_t>(r)];
    std::uint64_t support = 0;
    for (std::uint64_t count : row) support += count;
    svg.text(left - 6, top + cell * r + cell / 2.0 + 4, 9, std::to_string(r), "end");
    svg.text(left + cell * r + cell / 2.0, top - 6, 9, std::to_string(r), "middle");
    for (int c = 0; c < classes; ++c) {
      const double fraction =
          support == 0 ? 0.0
                       : static_cast<double>(row[static_cast<std::size_t>(c)]) /
                             static_cast<double>(support);
      svg.rect(left + cell * c, top + cell * r, cell - 1, cell - 1, gray_fill(fraction));
    }
  }
  svg.save(path);
}

}  // namespace

void render_plots(const EfficiencyReport& report, const std::filesystem::path& dir) {
  if (report.entries.empty()) throw ConfigError("render_plots requires a non-empty report");
  std::filesystem::create_directories(dir);
  plot_scatter(report, dir / "accuracy_vs_iterations.svg");
  plot_bars(report, dir / "accuracy_bars.svg", true);
  plot_bars(report, dir / "iteration_bars.svg", false);
  for (const StrategyOutcome& entry : report.entries) {
    if (entry.eval.confusion.empty()) continue;
    plot_confusion(entry, dir / ("confusion_" + entry.label + ".svg"));
  }
}

}  // namespace curricula
