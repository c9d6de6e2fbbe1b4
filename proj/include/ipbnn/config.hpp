#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipbnn/bnn.hpp"

namespace ipbnn {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  std::string name;  // szt | szt-standin | mnist | fashion-mnist | dump
  std::string path;  // SZT text file or activation dump
  std::string train_images, train_labels;
  std::string test_images, test_labels;
  std::size_t train_subset = 0;  // 0 = all
  double validation_fraction = 0.2;
  std::uint64_t split_seed = 0;
  std::uint64_t standin_seed = 1;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::string preset;  // empty when explicit widths are given
  std::size_t variant_width = 0;
  std::vector<std::size_t> hidden_widths;
  std::vector<double> lambdas{0.0};
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  std::vector<std::uint64_t> seeds{1};
  std::size_t stride = 1;
  std::size_t window = 50;

  std::string group() const {
    std::string g = preset.empty() ? "custom" : preset;
    if (variant_width != 0) {
      g += "-A" + std::to_string(variant_width);
    }
    return g;
  }
};

/// Expand a named architecture preset into its hidden-layer width list.
/// A is the variable width of the hourglass/bottleneck variants.
inline std::vector<std::size_t> expand_preset(const std::string& name,
                                              std::size_t variant_width) {
  const std::set<std::size_t> allowed_a{2, 4, 6, 8, 10};
  auto need_a = [&]() {
    if (!allowed_a.count(variant_width)) {
      throw ConfigError("preset '" + name + "' requires variant width A in {2,4,6,8,10}");
    }
  };
  if (name == "szt") {
    return {10, 8, 6, 4};
  }
  if (name == "raj-like") {
    return {1024, 20, 20, 20, 10};
  }
  if (name == "hourglass") {
    need_a();
    return {1024, 20, 10, variant_width, 10, 20, 10};
  }
  if (name == "bottleneck") {
    need_a();
    return {1024, 20, 10, variant_width, 10};
  }
  if (name == "small-bnn") {
    return {50, 10, 10};
  }
  throw ConfigError("unknown architecture preset: " + name);
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown field '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  detail::reject_unknown_keys(
      j,
      {"dataset", "architecture", "lambdas", "learning_rate", "batch_size",
       "epochs", "runs", "seeds", "stride", "window"},
      "config");
  ExperimentConfig cfg;

  if (!j.contains("dataset")) {
    throw ConfigError("config is missing 'dataset'");
  }
  const auto& d = j.at("dataset");
  detail::reject_unknown_keys(
      d,
      {"name", "path", "train_images", "train_labels", "test_images",
       "test_labels", "train_subset", "validation_fraction", "split_seed",
       "standin_seed"},
      "dataset");
  cfg.dataset.name = d.at("name").get<std::string>();
  cfg.dataset.path = d.value("path", "");
  cfg.dataset.train_images = d.value("train_images", "");
  cfg.dataset.train_labels = d.value("train_labels", "");
  cfg.dataset.test_images = d.value("test_images", "");
  cfg.dataset.test_labels = d.value("test_labels", "");
  cfg.dataset.train_subset = d.value("train_subset", std::size_t{0});
  cfg.dataset.validation_fraction = d.value("validation_fraction", 0.2);
  cfg.dataset.split_seed = d.value("split_seed", std::uint64_t{0});
  cfg.dataset.standin_seed = d.value("standin_seed", std::uint64_t{1});

  if (!j.contains("architecture")) {
    throw ConfigError("config is missing 'architecture'");
  }
  const auto& a = j.at("architecture");
  detail::reject_unknown_keys(a, {"preset", "variant_width", "widths"}, "architecture");
  if (a.contains("preset")) {
    cfg.preset = a.at("preset").get<std::string>();
    cfg.variant_width = a.value("variant_width", std::size_t{0});
    cfg.hidden_widths = expand_preset(cfg.preset, cfg.variant_width);
  } else if (a.contains("widths")) {
    cfg.hidden_widths = a.at("widths").get<std::vector<std::size_t>>();
    if (cfg.hidden_widths.empty()) {
      throw ConfigError("architecture widths must be non-empty");
    }
  } else {
    throw ConfigError("architecture needs either 'preset' or 'widths'");
  }

  if (j.contains("lambdas")) {
    cfg.lambdas = j.at("lambdas").get<std::vector<double>>();
    if (cfg.lambdas.empty()) {
      throw ConfigError("lambdas must be non-empty");
    }
    for (double l : cfg.lambdas) {
      if (l < 0.0) {
        throw ConfigError("weight decay must be >= 0");
      }
    }
  }
  cfg.learning_rate = j.value("learning_rate", 1e-4);
  cfg.batch_size = j.value("batch_size", std::size_t{64});
  cfg.epochs = j.value("epochs", std::size_t{1});
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else if (j.contains("runs")) {
    const auto runs = j.at("runs").get<std::size_t>();
    cfg.seeds.clear();
    for (std::size_t s = 1; s <= runs; ++s) {
      cfg.seeds.push_back(s);
    }
  }
  if (cfg.seeds.empty()) {
    throw ConfigError("at least one seed/run is required");
  }
  cfg.stride = j.value("stride", std::size_t{1});
  cfg.window = j.value("window", std::size_t{50});
  if (cfg.stride == 0 || cfg.epochs == 0 || cfg.batch_size == 0) {
    throw ConfigError("stride, epochs, and batch_size must be >= 1");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return parse_config(j);
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["dataset"] = {{"name", cfg.dataset.name}};
  if (!cfg.dataset.path.empty()) j["dataset"]["path"] = cfg.dataset.path;
  if (!cfg.dataset.train_images.empty()) {
    j["dataset"]["train_images"] = cfg.dataset.train_images;
    j["dataset"]["train_labels"] = cfg.dataset.train_labels;
    j["dataset"]["test_images"] = cfg.dataset.test_images;
    j["dataset"]["test_labels"] = cfg.dataset.test_labels;
  }
  if (cfg.dataset.train_subset != 0) {
    j["dataset"]["train_subset"] = cfg.dataset.train_subset;
  }
  j["dataset"]["validation_fraction"] = cfg.dataset.validation_fraction;
  j["dataset"]["split_seed"] = cfg.dataset.split_seed;
  if (cfg.dataset.name == "szt-standin") {
    j["dataset"]["standin_seed"] = cfg.dataset.standin_seed;
  }
  if (!cfg.preset.empty()) {
    j["architecture"] = {{"preset", cfg.preset}};
    if (cfg.variant_width != 0) {
      j["architecture"]["variant_width"] = cfg.variant_width;
    }
  } else {
    j["architecture"] = {{"widths", cfg.hidden_widths}};
  }
  j["lambdas"] = cfg.lambdas;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["seeds"] = cfg.seeds;
  j["stride"] = cfg.stride;
  j["window"] = cfg.window;
  return j;
}

/// Stable FNV-1a hash of the canonical config serialisation.
inline std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ipbnn
