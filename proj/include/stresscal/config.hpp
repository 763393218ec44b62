#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stresscal/ensemble.hpp"
#include "stresscal/eval.hpp"
#include "stresscal/features.hpp"
#include "stresscal/transforms.hpp"

namespace stresscal {

// Flat TOML subset: [section] headers, key = value lines, '#' comments.
// Values may be bare or double-quoted. Keys are addressed as "section.key".
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Sorted sections, sorted keys; strings quoted.
  std::string to_toml() const;

 private:
  std::map<std::string, std::string> entries_;
};

// Every key the CLI understands, with its default.
const std::map<std::string, std::string>& config_defaults();

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  unsigned threads = 1;

  std::filesystem::path features;
  std::filesystem::path schema;
  std::filesystem::path manifest;
  std::filesystem::path model;

  ExtractionOptions extraction;

  TransformPolicy transform;
  bool apply_transforms = true;
  bool rebalance = true;
  std::optional<SelectionPolicy> selection;

  std::optional<Algorithm> algorithm;
  std::optional<TaskKind> task;
  std::optional<std::size_t> n_trees;
  std::optional<std::size_t> max_depth;
  std::optional<MaxFeaturesRule> max_features;
  std::optional<bool> bootstrap;

  std::string protocol = "kfold";
  std::size_t folds = 10;
  std::optional<std::string> subject;

  CalibrationConfig calibration;

  std::filesystem::path report_input;
  std::string report_format = "text";
  std::filesystem::path report_output;

  // Throws Error(config) on unknown keys or malformed values.
  static RunConfig resolve(const ConfigFile& file);

  // Shipped defaults for `fallback` (or the configured algorithm) with the
  // configured overrides applied.
  EnsembleHyperparams hyperparams(Algorithm fallback, TaskKind table_task) const;
  ProtocolOptions protocol_options() const;
};

}  // namespace stresscal
