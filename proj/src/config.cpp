#include "curricula/config.hpp"

#include <fstream>

#include "json.hpp"

#include "curricula/errors.hpp"

namespace curricula {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& path) {
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

void RunConfig::validate() const {
  profile.validate();
  windowing.validate();
  convergence.validate();
  if (target_per_class < 1) throw ConfigError("target_per_class must be >= 1");
  if (arch == Architecture::OneHidden && hidden < 1) {
    throw ConfigError("one_hidden architecture requires hidden >= 1");
  }
  if (strategies.empty()) throw ConfigError("config lists no strategies");
  for (const std::string& name : strategies) parse_strategy(name, progressive);
  if (data_dir.empty()) throw ConfigError("config is missing paths.data_dir");
  if (out_dir.empty()) throw ConfigError("config is missing paths.out_dir");
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }

  RunConfig config;
  try {
    config.master_seed = doc.value("master_seed", config.master_seed);
    if (doc.contains("architecture")) {
      const auto& node = doc.at("architecture");
      config.arch = parse_architecture(node.value("arch", std::string("linear")));
      config.hidden = node.value("hidden", 0);
    }
    {
      const auto& node = doc.at("profile");
      config.profile.name = node.value("name", std::string("desk"));
      config.profile.base_lr = node.at("base_lr").get<double>();
      config.profile.finetune_lr = node.at("finetune_lr").get<double>();
      config.profile.e1 = node.at("e1").get<int>();
      config.profile.e2 = node.at("e2").get<int>();
      config.profile.batch_size = node.at("batch_size").get<int>();
    }
    config.strategies = doc.value("strategies", std::vector<std::string>{});
    if (doc.contains("windowing")) {
      const auto& node = doc.at("windowing");
      config.windowing.window_len = node.value("window_len", config.windowing.window_len);
      config.windowing.stride = node.value("stride", config.windowing.stride);
      config.windowing.retain_fraction =
          node.value("retain_fraction", config.windowing.retain_fraction);
      config.windowing.subsample_count =
          node.value("subsample_count", config.windowing.subsample_count);
      config.windowing.subsample_step =
          node.value("subsample_step", config.windowing.subsample_step);
    }
    config.target_per_class = doc.value("target_per_class", config.target_per_class);
    if (doc.contains("convergence")) {
      const auto& node = doc.at("convergence");
      config.convergence.eval_every = node.value("eval_every", config.convergence.eval_every);
      config.convergence.patience = node.value("patience", config.convergence.patience);
      config.convergence.min_delta = node.value("min_delta", config.convergence.min_delta);
      config.convergence.max_epochs = node.value("max_epochs", config.convergence.max_epochs);
      config.convergence.holdout_fraction =
          node.value("holdout_fraction", config.convergence.holdout_fraction);
    }
    if (doc.contains("progressive")) {
      const auto& node = doc.at("progressive");
      config.progressive =
          StrategyKind::progressive(node.value("rounds", 3), node.value("first_fraction", 0.5));
      config.progressive.fractions = node.value("fractions", std::vector<double>{});
    }
    {
      const auto& node = doc.at("paths");
      config.data_dir = resolve(base_dir, node.at("data_dir").get<std::string>());
      config.out_dir = resolve(base_dir, node.at("out_dir").get<std::string>());
    }
    config.reset_optimizer_each_round =
        doc.value("reset_optimizer_each_round", config.reset_optimizer_each_round);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_run_config(text, path.parent_path());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_run_config(const RunConfig& config) {
  nlohmann::json doc;
  doc["master_seed"] = config.master_seed;
  doc["architecture"] = {{"arch", to_string(config.arch)}, {"hidden", config.hidden}};
  doc["profile"] = {{"name", config.profile.name},
                    {"base_lr", config.profile.base_lr},
                    {"finetune_lr", config.profile.finetune_lr},
                    {"e1", config.profile.e1},
                    {"e2", config.profile.e2},
                    {"batch_size", config.profile.batch_size}};
  doc["strategies"] = config.strategies;
  doc["windowing"] = {{"window_len", config.windowing.window_len},
                      {"stride", config.windowing.stride},
                      {"retain_fraction", config.windowing.retain_fraction},
                      {"subsample_count", config.windowing.subsample_count},
                      {"subsample_step", config.windowing.subsample_step}};
  doc["target_per_class"] = config.target_per_class;
  doc["convergence"] = {{"eval_every", config.convergence.eval_every},
                        {"patience", config.convergence.patience},
                        {"min_delta", config.convergence.min_delta},
                        {"max_epochs", config.convergence.max_epochs},
                        {"holdout_fraction", config.convergence.holdout_fraction}};
  doc["progressive"] = {{"rounds", config.progressive.rounds},
                        {"first_fraction", config.progressive.first_fraction},
                        {"fractions", config.progressive.fractions}};
  doc["paths"] = {{"data_dir", config.data_dir.string()}, {"out_dir", config.out_dir.string()}};
  doc["reset_optimizer_each_round"] = config.reset_optimizer_each_round;
  return doc.dump(2) + "\n";
}

}  // namespace curricula
