// Model artifacts and evaluation reports: JSON (model, reports) and CSV (reports).

#include <cmath>
#include <string>

#include "json.hpp"
#include "stresscal/dataio.hpp"
#include "stresscal/error.hpp"
#include "text.hpp"

namespace stresscal {

using nlohmann::json;

namespace {

json hyper_to_json(const EnsembleHyperparams& h) {
  return json{{"algorithm", algorithm_name(h.algorithm)},
              {"task", task_kind_name(h.task)},
              {"n_trees", h.n_trees},
              {"max_depth", h.max_depth},
              {"max_features", h.max_features.to_string()},
              {"bootstrap", h.bootstrap},
              {"seed", h.seed}};
}

EnsembleHyperparams hyper_from_json(const json& j) {
  EnsembleHyperparams h;
  h.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  h.task = parse_task_kind(j.at("task").get<std::string>());
  h.n_trees = j.at("n_trees").get<std::size_t>();
  h.max_depth = j.at("max_depth").get<std::size_t>();
  h.max_features = MaxFeaturesRule::parse(j.at("max_features").get<std::string>());
  h.bootstrap = j.at("bootstrap").get<bool>();
  h.seed = j.at("seed").get<std::uint64_t>();
  return h;
}

json metrics_to_json(const Metrics& m) {
  return json{{"task", task_kind_name(m.task)}, {"accuracy", m.accuracy}, {"precision", m.precision},
              {"recall", m.recall},             {"f1", m.f1},             {"mae", m.mae},
              {"rmse", m.rmse}};
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.task = parse_task_kind(j.at("task").get<std::string>());
  m.accuracy = j.at("accuracy").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.mae = j.at("mae").get<double>();
  m.rmse = j.at("rmse").get<double>();
  return m;
}

json summary_to_json(const MetricsSummary& s) {
  return json{{"mean", metrics_to_json(s.mean)}, {"std", metrics_to_json(s.std)}};
}

MetricsSummary summary_from_json(const json& j) {
  return MetricsSummary{metrics_from_json(j.at("mean")), metrics_from_json(j.at("std"))};
}

json unit_to_json(const UnitResult& u) {
  return json{{"unit", u.unit},
              {"subject", u.subject},
              {"n_train", u.n_train},
              {"n_test", u.n_test},
              {"metrics", metrics_to_json(u.metrics)}};
}

UnitResult unit_from_json(const json& j) {
  UnitResult u;
  u.unit = j.at("unit").get<std::string>();
  u.subject = j.at("subject").get<std::string>();
  u.n_train = j.at("n_train").get<std::size_t>();
  u.n_test = j.at("n_test").get<std::size_t>();
  u.metrics = metrics_from_json(j.at("metrics"));
  return u;
}

json units_to_json(const std::vector<UnitResult>& units) {
  json arr = json::array();
  for (const auto& u : units) arr.push_back(unit_to_json(u));
  return arr;
}

std::vector<UnitResult> units_from_json(const json& j) {
  std::vector<UnitResult> out;
  for (const auto& u : j) out.push_back(unit_from_json(u));
  return out;
}

// Runs a JSON decoding step, mapping library exceptions onto parse errors.
template <class F>
auto decode(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string(what) + ": " + e.what());
  }
}

void check_tree(const DecisionTree& tree, std::size_t n_features, std::size_t n_classes, TaskKind task) {
  const std::size_t n = tree.nodes.size();
  if (n == 0) fail(ErrorKind::parse, "model contains an empty tree");
  for (std::size_t i = 0; i < n; ++i) {
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) {
      if (task == TaskKind::classification && node.leaf_class >= n_classes) {
        fail(ErrorKind::parse, "leaf class outside the label set");
      }
      continue;
    }
    // Children always follow their parent, which also rules out cycles.
    const auto ok = [&](int child) {
      return child > static_cast<int>(i) && static_cast<std::size_t>(child) < n;
    };
    if (static_cast<std::size_t>(node.feature) >= n_features || !ok(node.left) || !ok(node.right)) {
      fail(ErrorKind::parse, "malformed tree node " + std::to_string(i));
    }
  }
  if (tree.importance.size() != n_features) fail(ErrorKind::parse, "tree importance has the wrong length");
}

void append_metrics_csv(std::string& out, const Metrics& m) {
  for (double v : {m.accuracy, m.precision, m.recall, m.f1, m.mae, m.rmse}) {
    out += ',';
    out += format_double(v);
  }
}

std::string join_strings(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

std::string serialize_model(const ModelArtifact& model) {
  const TrainedEnsemble& e = model.ensemble;
  json trees = json::array();
  for (const auto& tree : e.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.samples, n.impurity, n.value,
                                   n.leaf_class}));
    }
    trees.push_back(json{{"n_classes", tree.n_classes},
                         {"nodes", std::move(nodes)},
                         {"class_distribution", tree.class_distribution},
                         {"importance", tree.importance}});
  }
  json columns = json::array();
  for (const auto& c : model.recipe.columns) {
    columns.push_back(json{{"kind", transform_kind_name(c.kind)},
                           {"lambda", c.lambda},
                           {"median", c.scaler.median},
                           {"q1", c.scaler.q1},
                           {"q3", c.scaler.q3}});
  }
  const json doc{
      {"format_version", model.format_version},
      {"hyperparams", hyper_to_json(model.hyper)},
      {"feature_names", model.feature_names},
      {"recipe", json{{"feature_names", model.recipe.feature_names}, {"columns", std::move(columns)}}},
      {"ensemble", json{{"feature_names", e.feature_names},
                        {"labels", e.labels},
                        {"target_min", e.target_min},
                        {"target_max", e.target_max},
                        {"importances", e.importances.values},
                        {"importances_normalized", e.importances.normalized},
                        {"trees", std::move(trees)}}}};
  return doc.dump(1) + "\n";
}

ModelArtifact deserialize_model(std::string_view text) {
  const json doc = decode("model", [&] { return json::parse(text); });
  return decode("model", [&] {
    if (!doc.is_object() || !doc.contains("format_version")) {
      fail(ErrorKind::incompatible_format, "not a model artifact (no format_version)");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      fail(ErrorKind::incompatible_format, "model format_version " + std::to_string(version) +
                                               " is not supported (expected " +
                                               std::to_string(kModelFormatVersion) + ")");
    }
    ModelArtifact m;
    m.format_version = version;
    m.hyper = hyper_from_json(doc.at("hyperparams"));
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();

    const json& recipe = doc.at("recipe");
    m.recipe.feature_names = recipe.at("feature_names").get<std::vector<std::string>>();
    for (const auto& c : recipe.at("columns")) {
      FeatureTransform t;
      t.kind = parse_transform_kind(c.at("kind").get<std::string>());
      t.lambda = c.at("lambda").get<double>();
      t.scaler = {c.at("median").get<double>(), c.at("q1").get<double>(), c.at("q3").get<double>()};
      m.recipe.columns.push_back(t);
    }
    if (!m.recipe.empty() && (m.recipe.columns.size() != m.feature_names.size() ||
                              m.recipe.feature_names != m.feature_names)) {
      fail(ErrorKind::parse, "model recipe does not match its feature list");
    }

    const json& e = doc.at("ensemble");
    TrainedEnsemble& ens = m.ensemble;
    ens.hyper = m.hyper;
    ens.feature_names = e.at("feature_names").get<std::vector<std::string>>();
    ens.labels = e.at("labels").get<std::vector<std::string>>();
    ens.target_min = e.at("target_min").get<double>();
    ens.target_max = e.at("target_max").get<double>();
    ens.importances.values = e.at("importances").get<std::vector<double>>();
    ens.importances.normalized = e.at("importances_normalized").get<bool>();
    if (ens.feature_names.size() != m.feature_names.size()) {
      fail(ErrorKind::parse, "model ensemble and artifact disagree on the feature count");
    }
    for (const auto& t : e.at("trees")) {
      DecisionTree tree;
      tree.n_classes = t.at("n_classes").get<std::size_t>();
      for (const auto& n : t.at("nodes")) {
        if (!n.is_array() || n.size() != 8) fail(ErrorKind::parse, "tree node must have 8 fields");
        TreeNode node;
        node.feature = n[0].get<int>();
        node.threshold = n[1].get<double>();
        node.left = n[2].get<int>();
        node.right = n[3].get<int>();
        node.samples = n[4].get<std::size_t>();
        node.impurity = n[5].get<double>();
        node.value = n[6].get<double>();
        node.leaf_class = n[7].get<std::size_t>();
        tree.nodes.push_back(node);
      }
      tree.class_distribution = t.at("class_distribution").get<std::vector<double>>();
      tree.importance = t.at("importance").get<std::vector<double>>();
      check_tree(tree, ens.feature_names.size(), ens.labels.size(), m.hyper.task);
      ens.trees.push_back(std::move(tree));
    }
    if (ens.trees.empty()) fail(ErrorKind::parse, "model has no trees");
    return m;
  });
}

void save_model(const ModelArtifact& model, const fs::path& path) {
  write_text_file(path, serialize_model(model));
}

ModelArtifact load_model(const fs::path& path) {
  try {
    return deserialize_model(read_text_file(path));
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  fail(ErrorKind::usage, "unknown report format '" + std::string(text) + "' (csv | json)");
}

std::string format_report(const EvaluationReport& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    const json doc{{"kind", "evaluation"},
                   {"protocol", report.protocol},
                   {"seed", report.seed},
                   {"task", task_kind_name(report.task)},
                   {"hyperparams", hyper_to_json(report.hyper)},
                   {"units", units_to_json(report.units)},
                   {"summary", summary_to_json(report.summary)}};
    return doc.dump(2) + "\n";
  }
  std::string out = "protocol,seed,unit,subject,n_train,n_test,accuracy,precision,recall,f1,mae,rmse\n";
  auto line = [&](const std::string& unit, const std::string& subject, std::size_t n_train,
                  std::size_t n_test, const Metrics& m) {
    out += detail::csv_field(report.protocol) + ',' + std::to_string(report.seed) + ',' +
           detail::csv_field(unit) + ',' + detail::csv_field(subject) + ',' + std::to_string(n_train) + ',' +
           std::to_string(n_test);
    append_metrics_csv(out, m);
    out += '\n';
  };
  for (const auto& u : report.units) line(u.unit, u.subject, u.n_train, u.n_test, u.metrics);
  line("mean", "", 0, 0, report.summary.mean);
  line("std", "", 0, 0, report.summary.std);
  return out;
}

std::string format_report(const CalibrationCurve& curve, ReportFormat format) {
  if (format == ReportFormat::json) {
    json entries = json::array();
    for (const auto& e : curve.entries) {
      entries.push_back(json{{"size", e.size},
                             {"drawn", e.drawn},
                             {"per_subject", units_to_json(e.per_subject)},
                             {"summary", summary_to_json(e.summary)}});
    }
    const json doc{{"kind", "calibration"},
                   {"seed", curve.seed},
                   {"task", task_kind_name(curve.task)},
                   {"hyperparams", hyper_to_json(curve.hyper)},
                   {"q", curve.q},
                   {"calibration_fraction", curve.calibration_fraction},
                   {"held_out", curve.held_out},
                   {"generic_subjects", curve.generic_subjects},
                   {"generic_baseline", summary_to_json(curve.generic_baseline)},
                   {"entries", std::move(entries)}};
    return doc.dump(2) + "\n";
  }
  std::string out = "size,drawn";
  for (const char* m : {"accuracy", "precision", "recall", "f1", "mae", "rmse"}) {
    out += std::string(",") + m + "_mean";
  }
  for (const char* m : {"accuracy", "precision", "recall", "f1", "mae", "rmse"}) {
    out += std::string(",") + m + "_std";
  }
  out += '\n';
  for (const auto& e : curve.entries) {
    std::vector<std::string> drawn;
    for (std::size_t d : e.drawn) drawn.push_back(std::to_string(d));
    out += std::to_string(e.size) + ',' + join_strings(drawn, ';');
    append_metrics_csv(out, e.summary.mean);
    append_metrics_csv(out, e.summary.std);
    out += '\n';
  }
  return out;
}

void write_report(const EvaluationReport& report, const fs::path& path, ReportFormat format) {
  write_text_file(path, format_report(report, format));
}

void write_report(const CalibrationCurve& curve, const fs::path& path, ReportFormat format) {
  write_text_file(path, format_report(curve, format));
}

EvaluationReport parse_evaluation_report(std::string_view text) {
  const json doc = decode("evaluation report", [&] { return json::parse(text); });
  return decode("evaluation report", [&] {
    if (doc.value("kind", "") != "evaluation") fail(ErrorKind::parse, "not an evaluation report");
    EvaluationReport r;
    r.protocol = doc.at("protocol").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.task = parse_task_kind(doc.at("task").get<std::string>());
    r.hyper = hyper_from_json(doc.at("hyperparams"));
    r.units = units_from_json(doc.at("units"));
    r.summary = summary_from_json(doc.at("summary"));
    return r;
  });
}

CalibrationCurve parse_calibration_curve(std::string_view text) {
  const json doc = decode("calibration report", [&] { return json::parse(text); });
  return decode("calibration report", [&] {
    if (doc.value("kind", "") != "calibration") fail(ErrorKind::parse, "not a calibration report");
    CalibrationCurve c;
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.task = parse_task_kind(doc.at("task").get<std::string>());
    c.hyper = hyper_from_json(doc.at("hyperparams"));
    c.q = doc.at("q").get<std::size_t>();
    c.calibration_fraction = doc.at("calibration_fraction").get<double>();
    c.held_out = doc.at("held_out").get<std::vector<std::string>>();
    c.generic_subjects = doc.at("generic_subjects").get<std::vector<std::string>>();
    c.generic_baseline = summary_from_json(doc.at("generic_baseline"));
    for (const auto& e : doc.at("entries")) {
      CalibrationEntry entry;
      entry.size = e.at("size").get<std::size_t>();
      entry.drawn = e.at("drawn").get<std::vector<std::size_t>>();
      entry.per_subject = units_from_json(e.at("per_subject"));
      entry.summary = summary_from_json(e.at("summary"));
      c.entries.push_back(std::move(entry));
    }
    return c;
  });
}

}  // namespace stresscal
