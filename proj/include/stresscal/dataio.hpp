#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stresscal/eval.hpp"
#include "stresscal/features.hpp"
#include "stresscal/model.hpp"
#include "stresscal/signal.hpp"
#include "stresscal/table.hpp"

namespace stresscal {

namespace fs = std::filesystem;

// Role -> column mapping for a feature CSV. Read from a flat key=value file:
//
//   subject  = subject_id
//   label    = condition
//   target   = NasaTLX        (optional)
//   features = HR,RMSSD,...   (optional, default: every other column)
//   labels   = no stress,time pressure,interruption   (optional label order)
//   task     = classification (optional)
struct TableSchema {
  std::string subject_column;
  std::string label_column;
  std::optional<std::string> target_column;
  std::vector<std::string> feature_columns;
  std::vector<std::string> labels;
  TaskKind task = TaskKind::classification;

  static TableSchema parse(std::string_view text);
  static TableSchema load(const fs::path& path);
  std::string to_string() const;
};

FeatureTable load_feature_table(const fs::path& path, const TableSchema& schema);
FeatureTable parse_feature_table(std::string_view csv, const TableSchema& schema);

// Header "subject,label,target,<features>"; 17 significant digits.
void save_feature_table(const FeatureTable& table, const fs::path& path);
std::string format_feature_table(const FeatureTable& table);
// Schema matching save_feature_table output.
TableSchema canonical_schema(const FeatureTable& table);

SignalRecording load_signal_recording(const fs::path& path, SignalKind kind, double sample_rate_hz);
SignalRecording parse_signal_recording(std::string_view text, SignalKind kind,
                                       double sample_rate_hz);

// Single column of intervals in ms.
IBISeries load_ibi_series(const fs::path& path);

// Condition intervals CSV: start_s,end_s,label,target (header row required).
std::vector<ConditionInterval> load_condition_intervals(const fs::path& path);

void save_model(const ModelArtifact& model, const fs::path& path);
ModelArtifact load_model(const fs::path& path);
std::string serialize_model(const ModelArtifact& model);
ModelArtifact deserialize_model(std::string_view text);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(std::string_view text);

std::string format_report(const EvaluationReport& report, ReportFormat format);
std::string format_report(const CalibrationCurve& curve, ReportFormat format);
void write_report(const EvaluationReport& report, const fs::path& path, ReportFormat format);
void write_report(const CalibrationCurve& curve, const fs::path& path, ReportFormat format);

EvaluationReport parse_evaluation_report(std::string_view json);
CalibrationCurve parse_calibration_curve(std::string_view json);

// %.17g: always round-trips.
std::string format_double(double value);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, std::string_view text);

}  // namespace stresscal
