#include "stresscal/config.hpp"

#include <cmath>
#include <set>

#include "stresscal/dataio.hpp"
#include "stresscal/error.hpp"
#include "text.hpp"

namespace stresscal {

namespace {

// Strips a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string unquote(std::string_view v, std::size_t line_no) {
  v = detail::trim(v);
  if (v.empty() || v.front() != '"') return std::string(v);
  if (v.size() < 2 || v.back() != '"') {
    fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": unterminated string");
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) {
      ++i;
      out.push_back(v[i] == 'n' ? '\n' : v[i] == 't' ? '\t' : v[i]);
    } else {
      out.push_back(v[i]);
    }
  }
  return out;
}

bool is_bare(const std::string& v) {
  if (v == "true" || v == "false") return true;
  return !v.empty() && detail::parse_number(v).has_value() && detail::trim(v).size() == v.size();
}

std::string quote(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string config_error_prefix(const std::string& key) { return "config key " + key + ": "; }

double get_double(const std::string& key, const std::string& v) {
  const auto d = detail::parse_number(v);
  if (!d || !std::isfinite(*d)) fail(ErrorKind::config, config_error_prefix(key) + "expected a number, got '" + v + "'");
  return *d;
}

double get_positive(const std::string& key, const std::string& v) {
  const double d = get_double(key, v);
  if (!(d > 0.0)) fail(ErrorKind::config, config_error_prefix(key) + "must be positive");
  return d;
}

template <class Int>
Int get_int(const std::string& key, const std::string& v) {
  const auto i = detail::parse_integer<Int>(v);
  if (!i) fail(ErrorKind::config, config_error_prefix(key) + "expected a non-negative integer, got '" + v + "'");
  return *i;
}

bool get_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(ErrorKind::config, config_error_prefix(key) + "expected true or false, got '" + v + "'");
}

// Re-raises library parse failures of a config value as config errors.
template <class F>
auto as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    fail(ErrorKind::config, config_error_prefix(key) + e.what());
  }
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile file;
  std::string section;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = detail::trim(strip_comment(lines[i]));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": bad section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    if (key.empty()) fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (file.entries_.count(full)) {
      fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": duplicate key " + full);
    }
    file.entries_[full] = unquote(line.substr(eq + 1), line_no);
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  try {
    return parse(read_text_file(path));
  } catch (const Error& e) {
    fail(e.kind() == ErrorKind::io ? ErrorKind::config : e.kind(), path.string() + ": " + e.what());
  }
}

void ConfigFile::set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string ConfigFile::to_toml() const {
  std::string out;
  std::string current;
  bool first = true;
  for (const auto& [full, value] : entries_) {
    const auto dot = full.find('.');
    const std::string section = dot == std::string::npos ? "" : full.substr(0, dot);
    const std::string key = dot == std::string::npos ? full : full.substr(dot + 1);
    if (first || section != current) {
      if (!first) out += '\n';
      if (!section.empty()) out += "[" + section + "]\n";
      current = section;
      first = false;
    }
    out += key + " = " + (is_bare(value) ? value : quote(value)) + "\n";
  }
  return out;
}

const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> defaults{
      {"run.seed", "0"},
      {"run.out_dir", "out"},
      {"run.threads", "1"},
      {"data.features", ""},
      {"data.schema", ""},
      {"data.manifest", ""},
      {"data.model", ""},
      {"extract.source", "hrv"},
      {"signal.cutoff_hz", "4"},
      {"signal.filter_order", "4"},
      {"signal.smooth_window_s", "1"},
      {"signal.scr_threshold", "0.01"},
      {"features.hrv_window_s", "300"},
      {"features.eda_window_s", "600"},
      {"features.eda_step", "1"},
      {"features.vlf_low_hz", "0.0033"},
      {"features.vlf_high_hz", "0.04"},
      {"features.lf_high_hz", "0.15"},
      {"features.hf_high_hz", "0.4"},
      {"features.labels", ""},
      {"transform.enabled", "true"},
      {"transform.skew_threshold", "0.75"},
      {"transform.scale", "true"},
      {"transform.rebalance", "true"},
      {"transform.select", ""},
      {"model.algorithm", ""},
      {"model.task", ""},
      {"model.n_trees", ""},
      {"model.max_depth", ""},
      {"model.max_features", ""},
      {"model.bootstrap", ""},
      {"protocol.name", "kfold"},
      {"protocol.folds", "10"},
      {"protocol.subject", ""},
      {"calibration.q", "4"},
      {"calibration.sizes", "0,1,2,5,10,20,50,100"},
      {"calibration.fraction", "0.5"},
      {"report.input", ""},
      {"report.format", "text"},
      {"report.output", ""},
  };
  return defaults;
}

RunConfig RunConfig::resolve(const ConfigFile& file) {
  const auto& defaults = config_defaults();
  for (const auto& [key, value] : file.entries()) {
    if (!defaults.count(key)) fail(ErrorKind::config, "unknown config key " + key);
  }
  auto value = [&](const std::string& key) {
    const auto v = file.get(key);
    return v ? *v : defaults.at(key);
  };
  auto set = [&](const std::string& key) { return !value(key).empty(); };

  RunConfig c;
  c.seed = get_int<std::uint64_t>("run.seed", value("run.seed"));
  c.out_dir = value("run.out_dir");
  if (c.out_dir.empty()) fail(ErrorKind::config, "config key run.out_dir: must not be empty");
  c.threads = get_int<unsigned>("run.threads", value("run.threads"));
  if (c.threads == 0) fail(ErrorKind::config, "config key run.threads: must be at least 1");

  c.features = value("data.features");
  c.schema = value("data.schema");
  c.manifest = value("data.manifest");
  c.model = value("data.model");

  ExtractionOptions& x = c.extraction;
  const std::string source = value("extract.source");
  if (source == "hrv") {
    x.source = FeatureSource::hrv;
  } else if (source == "eda") {
    x.source = FeatureSource::eda;
  } else {
    fail(ErrorKind::config, "config key extract.source: expected hrv or eda, got '" + source + "'");
  }
  x.filter.cutoff_hz = get_positive("signal.cutoff_hz", value("signal.cutoff_hz"));
  x.filter.order = get_int<int>("signal.filter_order", value("signal.filter_order"));
  if (x.filter.order <= 0 || x.filter.order % 2 != 0) {
    fail(ErrorKind::config, "config key signal.filter_order: must be a positive even number");
  }
  x.filter.smoothing_window_s = get_positive("signal.smooth_window_s", value("signal.smooth_window_s"));
  x.scr_threshold = get_positive("signal.scr_threshold", value("signal.scr_threshold"));
  x.hrv_window_s = get_positive("features.hrv_window_s", value("features.hrv_window_s"));
  x.eda_window_s = get_positive("features.eda_window_s", value("features.eda_window_s"));
  x.eda_step = get_int<std::size_t>("features.eda_step", value("features.eda_step"));
  if (x.eda_step == 0) fail(ErrorKind::config, "config key features.eda_step: must be at least 1");
  x.bands.vlf_low_hz = get_double("features.vlf_low_hz", value("features.vlf_low_hz"));
  x.bands.vlf_high_hz = get_double("features.vlf_high_hz", value("features.vlf_high_hz"));
  x.bands.lf_high_hz = get_double("features.lf_high_hz", value("features.lf_high_hz"));
  x.bands.hf_high_hz = get_double("features.hf_high_hz", value("features.hf_high_hz"));
  if (!(0.0 <= x.bands.vlf_low_hz && x.bands.vlf_low_hz < x.bands.vlf_high_hz &&
        x.bands.vlf_high_hz < x.bands.lf_high_hz && x.bands.lf_high_hz < x.bands.hf_high_hz)) {
    fail(ErrorKind::config, "frequency band edges must be ascending");
  }
  if (set("features.labels")) {
    const auto labels = detail::split_csv(value("features.labels"));
    if (!labels) fail(ErrorKind::config, "config key features.labels: unterminated quote");
    x.labels = *labels;
  }

  c.apply_transforms = get_bool("transform.enabled", value("transform.enabled"));
  c.transform.skew_threshold = get_double("transform.skew_threshold", value("transform.skew_threshold"));
  if (c.transform.skew_threshold < 0.0) fail(ErrorKind::config, "config key transform.skew_threshold: must be >= 0");
  c.transform.scale = get_bool("transform.scale", value("transform.scale"));
  c.rebalance = get_bool("transform.rebalance", value("transform.rebalance"));
  if (set("transform.select")) {
    c.selection = as_config("transform.select", [&] { return SelectionPolicy::parse(value("transform.select")); });
  }

  if (set("model.algorithm")) {
    c.algorithm = as_config("model.algorithm", [&] { return parse_algorithm(value("model.algorithm")); });
  }
  if (set("model.task")) {
    c.task = as_config("model.task", [&] { return parse_task_kind(value("model.task")); });
  }
  if (set("model.n_trees")) {
    c.n_trees = get_int<std::size_t>("model.n_trees", value("model.n_trees"));
    if (*c.n_trees == 0) fail(ErrorKind::config, "config key model.n_trees: must be at least 1");
  }
  if (set("model.max_depth")) {
    c.max_depth = get_int<std::size_t>("model.max_depth", value("model.max_depth"));
    if (*c.max_depth == 0) fail(ErrorKind::config, "config key model.max_depth: must be at least 1");
  }
  if (set("model.max_features")) {
    c.max_features =
        as_config("model.max_features", [&] { return MaxFeaturesRule::parse(value("model.max_features")); });
  }
  if (set("model.bootstrap")) c.bootstrap = get_bool("model.bootstrap", value("model.bootstrap"));

  c.protocol = value("protocol.name");
  if (c.protocol != "kfold" && c.protocol != "loso") {
    fail(ErrorKind::config, "config key protocol.name: expected kfold or loso, got '" + c.protocol + "'");
  }
  c.folds = get_int<std::size_t>("protocol.folds", value("protocol.folds"));
  if (c.folds < 2) fail(ErrorKind::config, "config key protocol.folds: must be at least 2");
  if (set("protocol.subject")) c.subject = value("protocol.subject");

  c.calibration.q = get_int<std::size_t>("calibration.q", value("calibration.q"));
  if (c.calibration.q == 0) fail(ErrorKind::config, "config key calibration.q: must be at least 1");
  c.calibration.sizes.clear();
  const auto sizes = detail::split_csv(value("calibration.sizes"));
  for (const auto& s : sizes.value_or(std::vector<std::string>{})) {
    c.calibration.sizes.push_back(get_int<std::size_t>("calibration.sizes", s));
  }
  if (c.calibration.sizes.empty()) fail(ErrorKind::config, "config key calibration.sizes: must list at least one size");
  if (!std::is_sorted(c.calibration.sizes.begin(), c.calibration.sizes.end())) {
    fail(ErrorKind::config, "config key calibration.sizes: must be ascending");
  }
  c.calibration.calibration_fraction = get_double("calibration.fraction", value("calibration.fraction"));
  if (!(c.calibration.calibration_fraction > 0.0 && c.calibration.calibration_fraction < 1.0)) {
    fail(ErrorKind::config, "config key calibration.fraction: must lie strictly between 0 and 1");
  }
  c.calibration.seed = c.seed;

  c.report_input = value("report.input");
  c.report_format = value("report.format");
  if (c.report_format != "text" && c.report_format != "csv" && c.report_format != "json") {
    fail(ErrorKind::config, "config key report.format: expected text, csv or json, got '" + c.report_format + "'");
  }
  c.report_output = value("report.output");
  return c;
}

EnsembleHyperparams RunConfig::hyperparams(Algorithm fallback, TaskKind table_task) const {
  EnsembleHyperparams h = EnsembleHyperparams::defaults(algorithm.value_or(fallback), task.value_or(table_task));
  if (n_trees) h.n_trees = *n_trees;
  if (max_depth) h.max_depth = *max_depth;
  if (max_features) h.max_features = *max_features;
  if (bootstrap) h.bootstrap = *bootstrap;
  h.seed = seed;
  h.validate();
  return h;
}

ProtocolOptions RunConfig::protocol_options() const {
  ProtocolOptions o;
  o.apply_transforms = apply_transforms;
  o.transform = transform;
  o.threads = threads;
  return o;
}

}  // namespace stresscal
