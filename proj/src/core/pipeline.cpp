#include "stresscal/pipeline.hpp"

#include <cstdio>
#include <map>
#include <numeric>

#include "stresscal/dataio.hpp"
#include "stresscal/diag.hpp"
#include "stresscal/error.hpp"
#include "stresscal/rng.hpp"
#include "text.hpp"

namespace stresscal::pipeline {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Runs one stage; library errors keep their kind and gain the stage name.
template <class F>
void stage(const char* name, F&& f) {
  ScopedWarningDedup dedup;
  try {
    f();
  } catch (const Error& e) {
    fail(e.kind(), std::string(name) + ": " + e.what());
  } catch (const std::bad_alloc&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

// Defaults merged with the file, i.e. every value the stage actually used.
void write_echo(const ConfigFile& file, const RunConfig& cfg, const char* stage_name) {
  ConfigFile echo;
  for (const auto& [k, v] : config_defaults()) echo.set(k, v);
  for (const auto& [k, v] : file.entries()) echo.set(k, v);
  write_text_file(cfg.out_dir / "config.echo.toml",
                  std::string("# stage: ") + stage_name + "\n" + echo.to_toml());
}

fs::path require_path(const fs::path& p, const char* key) {
  if (p.empty()) fail(ErrorKind::config, std::string("config key ") + key + " is not set");
  return p;
}

FeatureTable load_table(const RunConfig& cfg) {
  const fs::path features = require_path(cfg.features, "data.features");
  if (!fs::exists(features)) fail(ErrorKind::io, "feature table " + features.string() + " does not exist");
  fs::path schema_path = cfg.schema;
  if (schema_path.empty()) {
    fs::path sidecar = features;
    sidecar.replace_extension(".schema");
    if (!fs::exists(sidecar)) {
      fail(ErrorKind::config, "config key data.schema is not set and " + sidecar.string() + " does not exist");
    }
    schema_path = sidecar;
  }
  const TableSchema schema = TableSchema::load(schema_path);
  FeatureTable table = load_feature_table(features, schema);
  if (table.rows.empty()) fail(ErrorKind::empty_input, features.string() + " has no data rows");
  return table;
}

// Task override, class rebalancing, then optional MDI feature selection.
FeatureTable prepare_table(FeatureTable table, const RunConfig& cfg, const EnsembleHyperparams& hyper) {
  if (cfg.rebalance) {
    const TaskKind task = table.task;
    table.task = TaskKind::classification;
    table = rebalance(table, stage_seed(cfg.seed, "rebalance"));
    table.task = task;
    if (table.rows.empty()) fail(ErrorKind::empty_input, "no rows left after rebalancing");
  }
  table.task = hyper.task;
  if (cfg.selection) {
    const ModelArtifact probe = fit_model(table, hyper, cfg.protocol_options().model_options());
    const std::vector<std::size_t> keep = select_features(probe.ensemble.importances.values, *cfg.selection);
    table = project_features(table, keep);
  }
  return table;
}

std::string metric_line(const char* name, double mean, double sd) {
  return std::string(name) + " = " + fmt("%.6f", mean) + " +/- " + fmt("%.6f", sd);
}

std::string summary_text(const MetricsSummary& s, TaskKind task, const std::string& indent) {
  std::string out;
  if (task == TaskKind::classification) {
    out += indent + metric_line("accuracy", s.mean.accuracy, s.std.accuracy) + "\n";
    out += indent + metric_line("precision", s.mean.precision, s.std.precision) + "\n";
    out += indent + metric_line("recall", s.mean.recall, s.std.recall) + "\n";
    out += indent + metric_line("f1", s.mean.f1, s.std.f1) + "\n";
  } else {
    out += indent + metric_line("mae", s.mean.mae, s.std.mae) + "\n";
    out += indent + metric_line("rmse", s.mean.rmse, s.std.rmse) + "\n";
  }
  return out;
}

std::string hyper_text(const EnsembleHyperparams& h) {
  return std::string(algorithm_name(h.algorithm)) + " " + task_kind_name(h.task) +
         ", n_trees=" + std::to_string(h.n_trees) + ", max_depth=" + std::to_string(h.max_depth) +
         ", max_features=" + h.max_features.to_string() + ", bootstrap=" + (h.bootstrap ? "true" : "false") +
         ", seed=" + std::to_string(h.seed);
}

std::string report_text(const EvaluationReport& r) {
  std::string out = "protocol " + r.protocol + " (" + hyper_text(r.hyper) + ")\n";
  for (const auto& u : r.units) {
    const double v = r.task == TaskKind::classification ? u.metrics.accuracy : u.metrics.mae;
    out += "  " + u.unit + (u.unit != u.subject ? " [" + u.subject + "]" : "") + ": " +
           (r.task == TaskKind::classification ? "accuracy " : "mae ") + fmt("%.6f", v) + "\n";
  }
  out += "summary over " + std::to_string(r.units.size()) + " units:\n";
  out += summary_text(r.summary, r.task, "  ");
  return out;
}

std::string curve_text(const CalibrationCurve& c) {
  std::string held;
  for (const auto& s : c.held_out) held += (held.empty() ? "" : ",") + s;
  std::string out = "calibration (" + hyper_text(c.hyper) + ")\n";
  out += "held-out subjects: " + held + "; generic pool: " + std::to_string(c.generic_subjects.size()) +
         " subjects\n";
  out += "generic baseline:\n" + summary_text(c.generic_baseline, c.task, "  ");
  for (const auto& e : c.entries) {
    out += "s = " + std::to_string(e.size) + ":\n" + summary_text(e.summary, c.task, "  ");
  }
  return out;
}

std::vector<SubjectRecording> load_manifest(const fs::path& manifest) {
  const std::string text = read_text_file(manifest);
  const auto lines = detail::split_lines(text);
  const fs::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  std::vector<SubjectRecording> subjects;
  std::map<std::string, std::size_t> index;
  std::map<std::string, fs::path> condition_files;
  bool header = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const std::string where = manifest.string() + " line " + std::to_string(i + 1);
    const auto fields = detail::split_csv(lines[i]);
    if (!fields) fail(ErrorKind::parse, where + ": unterminated quote");
    if (header) {
      const std::vector<std::string> expected{"subject", "kind", "path", "sample_rate_hz", "conditions"};
      if (*fields != expected) {
        fail(ErrorKind::schema, where + ": expected header subject,kind,path,sample_rate_hz,conditions");
      }
      header = false;
      continue;
    }
    if (fields->size() != 5) fail(ErrorKind::parse, where + ": expected 5 fields");
    const std::string& id = (*fields)[0];
    const std::string& kind = (*fields)[1];
    if (id.empty()) fail(ErrorKind::parse, where + ": empty subject");
    auto [it, fresh] = index.emplace(id, subjects.size());
    if (fresh) {
      subjects.emplace_back();
      subjects.back().subject_id = id;
    }
    SubjectRecording& s = subjects[it->second];
    const fs::path path = resolve((*fields)[2]);
    if (kind == "ibi") {
      if (s.ibi) fail(ErrorKind::schema, where + ": second ibi entry for subject " + id);
      s.ibi = load_ibi_series(path);
    } else if (kind == "ecg" || kind == "eda") {
      const auto rate = detail::parse_number((*fields)[3]);
      if (!rate || !(*rate > 0.0)) fail(ErrorKind::parse, where + ": sample_rate_hz must be positive");
      auto& slot = kind == "ecg" ? s.ecg : s.eda;
      if (slot) fail(ErrorKind::schema, where + ": second " + kind + " entry for subject " + id);
      slot = load_signal_recording(path, kind == "ecg" ? SignalKind::ecg : SignalKind::eda, *rate);
    } else {
      fail(ErrorKind::parse, where + ": kind must be ecg, ibi or eda, got '" + kind + "'");
    }
    const std::string& cond = (*fields)[4];
    if (cond.empty()) continue;
    const fs::path cond_path = resolve(cond);
    auto [cit, cfresh] = condition_files.emplace(id, cond_path);
    if (cfresh) {
      s.conditions = load_condition_intervals(cond_path);
    } else if (cit->second != cond_path) {
      fail(ErrorKind::schema, where + ": subject " + id + " lists two different condition files");
    }
  }
  if (subjects.empty()) fail(ErrorKind::empty_input, manifest.string() + ": no subjects");
  return subjects;
}

}  // namespace

void run_extract(const ConfigFile& file, const OutputFn& out) {
  stage("extract", [&] {
    const RunConfig cfg = RunConfig::resolve(file);
    const fs::path manifest = require_path(cfg.manifest, "data.manifest");
    const std::vector<SubjectRecording> subjects = load_manifest(manifest);
    ExtractionOptions options = cfg.extraction;
    options.threads = cfg.threads;
    const ExtractionResult result = extract_feature_table(subjects, options);

    const std::string source = cfg.extraction.source == FeatureSource::hrv ? "hrv" : "eda";
    const fs::path csv = cfg.out_dir / ("features_" + source + ".csv");
    const fs::path schema = cfg.out_dir / ("features_" + source + ".schema");
    save_feature_table(result.table, csv);
    write_text_file(schema, canonical_schema(result.table).to_string());

    std::string log = "subject,windows,emitted,dropped_straddling,dropped_unlabeled,zero_denominator,note\n";
    for (const auto& l : result.log) {
      log += detail::csv_field(l.subject_id) + "," + std::to_string(l.windows) + "," + std::to_string(l.emitted) +
             "," + std::to_string(l.dropped_straddling) + "," + std::to_string(l.dropped_unlabeled) + "," +
             std::to_string(l.zero_denominator) + "," + detail::csv_field(l.note) + "\n";
    }
    write_text_file(cfg.out_dir / "extract_log.csv", log);
    write_echo(file, cfg, "extract");

    std::string summary = "extracted " + std::to_string(result.table.num_rows()) + " " + source + " rows x " +
                          std::to_string(result.table.num_features()) + " features from " +
                          std::to_string(subjects.size()) + " subjects\n";
    for (const auto& l : result.log) {
      summary += "  " + l.subject_id + ": " + std::to_string(l.emitted) + " of " + std::to_string(l.windows) +
                 " windows kept (" + std::to_string(l.dropped_straddling) + " straddling, " +
                 std::to_string(l.dropped_unlabeled) + " unlabeled)" + (l.note.empty() ? "" : "; " + l.note) + "\n";
    }
    summary += "wrote " + csv.string() + "\n";
    out(summary);
  });
}

void run_train(const ConfigFile& file, const OutputFn& out) {
  stage("train", [&] {
    const RunConfig cfg = RunConfig::resolve(file);
    const FeatureTable raw = load_table(cfg);
    const EnsembleHyperparams hyper = cfg.hyperparams(Algorithm::random_forest, raw.task);
    const FeatureTable table = prepare_table(raw, cfg, hyper);
    const ModelArtifact model = fit_model(table, hyper, cfg.protocol_options().model_options());

    const fs::path model_path = cfg.model.empty() ? cfg.out_dir / "model.json" : cfg.model;
    save_model(model, model_path);
    const auto& imp = model.ensemble.importances.values;
    std::vector<std::size_t> order(imp.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
    std::string csv = "rank,feature,importance\n";
    for (std::size_t i = 0; i < order.size(); ++i) {
      csv += std::to_string(i + 1) + "," + detail::csv_field(model.feature_names[order[i]]) + "," +
             format_double(imp[order[i]]) + "\n";
    }
    write_text_file(cfg.out_dir / "importances.csv", csv);
    write_echo(file, cfg, "train");

    std::string summary = "trained " + hyper_text(hyper) + " on " + std::to_string(table.num_rows()) + " rows x " +
                          std::to_string(table.num_features()) + " features\n";
    summary += "top features by MDI:\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
      summary += "  " + std::to_string(i + 1) + ". " + model.feature_names[order[i]] + " " +
                 fmt("%.6f", imp[order[i]]) + "\n";
    }
    summary += "wrote " + model_path.string() + "\n";
    out(summary);
  });
}

void run_evaluate(const ConfigFile& file, const OutputFn& out) {
  stage("evaluate", [&] {
    const RunConfig cfg = RunConfig::resolve(file);
    const FeatureTable raw = load_table(cfg);
    const EnsembleHyperparams hyper = cfg.hyperparams(Algorithm::random_forest, raw.task);
    const FeatureTable table = prepare_table(raw, cfg, hyper);
    const ProtocolOptions options = cfg.protocol_options();

    EvaluationReport report;
    if (cfg.protocol == "loso") {
      report = loso_generic(table, hyper, options);
    } else if (cfg.subject) {
      report = kfold_person_specific(table, *cfg.subject, cfg.folds, hyper, options);
    } else {
      report = person_specific_all(table, cfg.folds, hyper, options);
    }
    const fs::path base = cfg.out_dir / ("evaluation_" + cfg.protocol);
    write_report(report, fs::path(base.string() + ".csv"), ReportFormat::csv);
    write_report(report, fs::path(base.string() + ".json"), ReportFormat::json);
    write_echo(file, cfg, "evaluate");
    out(report_text(report) + "wrote " + base.string() + ".{csv,json}\n");
  });
}

void run_calibrate(const ConfigFile& file, const OutputFn& out) {
  stage("calibrate", [&] {
    const RunConfig cfg = RunConfig::resolve(file);
    const FeatureTable raw = load_table(cfg);
    const EnsembleHyperparams hyper = cfg.hyperparams(Algorithm::extra_trees, raw.task);
    const FeatureTable table = prepare_table(raw, cfg, hyper);
    const CalibrationCurve curve = calibration_sweep(table, cfg.calibration, hyper, cfg.protocol_options());
    const fs::path base = cfg.out_dir / "calibration";
    write_report(curve, fs::path(base.string() + ".csv"), ReportFormat::csv);
    write_report(curve, fs::path(base.string() + ".json"), ReportFormat::json);
    write_echo(file, cfg, "calibrate");
    out(curve_text(curve) + "wrote " + base.string() + ".{csv,json}\n");
  });
}

void run_rank_features(const ConfigFile& file, const OutputFn& out) {
  stage("rank-features", [&] {
    const RunConfig cfg = RunConfig::resolve(file);
    const FeatureTable raw = load_table(cfg);
    const EnsembleHyperparams hyper = cfg.hyperparams(Algorithm::random_forest, raw.task);
    const FeatureTable table = prepare_table(raw, cfg, hyper);
    const SubjectProbeResult probe = subject_id_probe(table, hyper, cfg.protocol_options());

    std::string csv = "rank,feature,importance\n";
    for (std::size_t i = 0; i < probe.ranking.size(); ++i) {
      const std::size_t f = probe.ranking[i];
      csv += std::to_string(i + 1) + "," + detail::csv_field(probe.feature_names[f]) + "," +
             format_double(probe.importances[f]) + "\n";
    }
    const fs::path path = cfg.out_dir / "feature_ranking.csv";
    write_text_file(path, csv);
    write_echo(file, cfg, "rank-features");

    std::string summary = "subject_id MDI rank: " + std::to_string(probe.subject_id_rank) + " of " +
                          std::to_string(probe.ranking.size()) + "\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, probe.ranking.size()); ++i) {
      const std::size_t f = probe.ranking[i];
      summary += "  " + std::to_string(i + 1) + ". " + probe.feature_names[f] + " " +
                 fmt("%.6f", probe.importances[f]) + "\n";
    }
    summary += "wrote " + path.string() + "\n";
    out(summary);
  });
}

void run_report(const ConfigFile& file, const OutputFn& out) {
  stage("report", [&] {
    const RunConfig cfg = RunConfig::resolve(file);
    const fs::path input = require_path(cfg.report_input, "report.input");
    const std::string text = read_text_file(input);
    std::string rendered;
    if (text.find("\"kind\": \"calibration\"") != std::string::npos) {
      const CalibrationCurve curve = parse_calibration_curve(text);
      rendered = cfg.report_format == "text" ? curve_text(curve)
                                             : format_report(curve, parse_report_format(cfg.report_format));
    } else {
      const EvaluationReport report = parse_evaluation_report(text);
      rendered = cfg.report_format == "text" ? report_text(report)
                                             : format_report(report, parse_report_format(cfg.report_format));
    }
    write_echo(file, cfg, "report");
    if (cfg.report_output.empty()) {
      out(rendered);
    } else {
      write_text_file(cfg.report_output, rendered);
      out("wrote " + cfg.report_output.string() + "\n");
    }
  });
}

}  // namespace stresscal::pipeline
