#include "stresscal/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "stresscal/error.hpp"
#include "text.hpp"

namespace stresscal {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "failed reading " + path.string());
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

namespace {

std::vector<std::string> split_list(std::string_view value, ErrorKind kind, std::string_view what) {
  auto fields = detail::split_csv(value);
  if (!fields) fail(kind, "unterminated quote in " + std::string(what));
  std::vector<std::string> out;
  for (auto& f : *fields) {
    if (!f.empty()) out.push_back(std::move(f));
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += detail::csv_field(items[i]);
  }
  return out;
}

}  // namespace

TableSchema TableSchema::parse(std::string_view text) {
  TableSchema schema;
  std::set<std::string> seen;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::schema, "schema line " + std::to_string(i + 1) + ": expected key = value");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    std::string value(detail::trim(line.substr(eq + 1)));
    if (!seen.insert(key).second) {
      fail(ErrorKind::schema, "schema line " + std::to_string(i + 1) + ": duplicate key " + key);
    }
    if (key == "subject") {
      schema.subject_column = value;
    } else if (key == "label") {
      schema.label_column = value;
    } else if (key == "target") {
      if (!value.empty()) schema.target_column = value;
    } else if (key == "features") {
      schema.feature_columns = split_list(value, ErrorKind::schema, "features");
    } else if (key == "labels") {
      schema.labels = split_list(value, ErrorKind::schema, "labels");
    } else if (key == "task") {
      try {
        schema.task = parse_task_kind(value);
      } catch (const Error& e) {
        fail(ErrorKind::schema, e.what());
      }
    } else {
      fail(ErrorKind::schema, "schema line " + std::to_string(i + 1) + ": unknown key " + key);
    }
  }
  if (schema.subject_column.empty()) fail(ErrorKind::schema, "schema does not name the subject column");
  if (schema.label_column.empty()) fail(ErrorKind::schema, "schema does not name the label column");
  if (schema.task == TaskKind::regression && !schema.target_column) {
    fail(ErrorKind::schema, "a regression schema must name the target column");
  }
  return schema;
}

TableSchema TableSchema::load(const fs::path& path) { return parse(read_text_file(path)); }

std::string TableSchema::to_string() const {
  std::string out;
  out += "subject = " + subject_column + "\n";
  out += "label = " + label_column + "\n";
  if (target_column) out += "target = " + *target_column + "\n";
  if (!feature_columns.empty()) out += "features = " + join_list(feature_columns) + "\n";
  if (!labels.empty()) out += "labels = " + join_list(labels) + "\n";
  out += std::string("task = ") + task_kind_name(task) + "\n";
  return out;
}

FeatureTable parse_feature_table(std::string_view csv, const TableSchema& schema) {
  const auto lines = detail::split_lines(csv);
  std::size_t header_line = 0;
  while (header_line < lines.size() && detail::trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) fail(ErrorKind::empty_input, "feature table has no header row");

  const auto header = detail::split_csv(lines[header_line]);
  if (!header) fail(ErrorKind::parse, "line " + std::to_string(header_line + 1) + ": unterminated quote");
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header->size(); ++c) {
    if (!index.emplace((*header)[c], c).second) {
      fail(ErrorKind::schema, "duplicate column " + (*header)[c]);
    }
  }
  auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) fail(ErrorKind::schema, "column " + name + " not found in header");
    return it->second;
  };
  const std::size_t subject_col = column(schema.subject_column);
  const std::size_t label_col = column(schema.label_column);
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  const std::size_t target_col = schema.target_column ? column(*schema.target_column) : none;

  FeatureTable table;
  table.task = schema.task;
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header->size(); ++c) {
      if (c == subject_col || c == label_col || c == target_col) continue;
      feature_cols.push_back(c);
      table.feature_names.push_back((*header)[c]);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      feature_cols.push_back(column(name));
      table.feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) fail(ErrorKind::schema, "schema selects no feature columns");

  std::vector<std::string> raw_labels;
  for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const std::string where = "line " + std::to_string(i + 1);
    const auto fields = detail::split_csv(lines[i]);
    if (!fields) fail(ErrorKind::parse, where + ": unterminated quote");
    if (fields->size() != header->size()) {
      fail(ErrorKind::parse, where + ": expected " + std::to_string(header->size()) + " fields, got " +
                                 std::to_string(fields->size()));
    }
    FeatureRow row;
    row.subject_id = (*fields)[subject_col];
    if (row.subject_id.empty()) fail(ErrorKind::parse, where + ": empty subject id");
    if (target_col != none) {
      const auto v = detail::parse_number((*fields)[target_col]);
      if (!v || !std::isfinite(*v)) {
        fail(ErrorKind::parse, where + ", column " + *schema.target_column + ": not a finite number: '" +
                                   (*fields)[target_col] + "'");
      }
      row.target = *v;
    }
    row.features.reserve(feature_cols.size());
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const std::string& cell = (*fields)[feature_cols[f]];
      const auto v = detail::parse_number(cell);
      if (!v || !std::isfinite(*v)) {
        fail(ErrorKind::parse,
             where + ", column " + table.feature_names[f] + ": not a finite number: '" + cell + "'");
      }
      row.features.push_back(*v);
    }
    raw_labels.push_back((*fields)[label_col]);
    table.rows.push_back(std::move(row));
  }

  if (!schema.labels.empty()) {
    table.labels = schema.labels;
  } else {
    std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    table.labels.assign(distinct.begin(), distinct.end());
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto it = std::find(table.labels.begin(), table.labels.end(), raw_labels[r]);
    if (it == table.labels.end()) {
      fail(ErrorKind::schema, "row " + std::to_string(r + 1) + ": label '" + raw_labels[r] +
                                  "' is not in the declared label set");
    }
    table.rows[r].label = static_cast<std::size_t>(it - table.labels.begin());
  }
  table.validate();
  return table;
}

FeatureTable load_feature_table(const fs::path& path, const TableSchema& schema) {
  return parse_feature_table(read_text_file(path), schema);
}

std::string format_feature_table(const FeatureTable& table) {
  std::string out = "subject,label,target";
  for (const auto& name : table.feature_names) out += "," + detail::csv_field(name);
  out += '\n';
  for (const auto& row : table.rows) {
    out += detail::csv_field(row.subject_id);
    out += ',';
    out += detail::csv_field(table.labels.at(row.label));
    out += ',';
    out += format_double(row.target);
    for (double v : row.features) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_feature_table(const FeatureTable& table, const fs::path& path) {
  write_text_file(path, format_feature_table(table));
}

TableSchema canonical_schema(const FeatureTable& table) {
  TableSchema schema;
  schema.subject_column = "subject";
  schema.label_column = "label";
  schema.target_column = "target";
  schema.feature_columns = table.feature_names;
  schema.labels = table.labels;
  schema.task = table.task;
  return schema;
}

SignalRecording parse_signal_recording(std::string_view text, SignalKind kind, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    fail(ErrorKind::parameter, "sample rate must be positive");
  }
  SignalRecording rec;
  rec.kind = kind;
  rec.sample_rate_hz = sample_rate_hz;
  rec.units = kind == SignalKind::ecg ? "mV" : "uS";
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = detail::trim(lines[i]);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma != std::string_view::npos) line = line.substr(0, comma);
    const auto v = detail::parse_number(line);
    if (!v || !std::isfinite(*v)) {
      fail(ErrorKind::parse, "line " + std::to_string(i + 1) + ": not a finite sample: '" +
                                 std::string(line) + "'");
    }
    rec.samples.push_back(*v);
  }
  if (rec.samples.empty()) fail(ErrorKind::empty_input, "signal file contains no samples");
  return rec;
}

SignalRecording load_signal_recording(const fs::path& path, SignalKind kind, double sample_rate_hz) {
  try {
    return parse_signal_recording(read_text_file(path), kind, sample_rate_hz);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

IBISeries load_ibi_series(const fs::path& path) {
  const SignalRecording rec = load_signal_recording(path, SignalKind::ecg, 1.0);
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    if (!(rec.samples[i] > 0.0)) {
      fail(ErrorKind::parse, path.string() + ": interval " + std::to_string(i + 1) + " is not positive");
    }
  }
  return IBISeries::from_intervals(rec.samples);
}

std::vector<ConditionInterval> load_condition_intervals(const fs::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = detail::split_lines(text);
  std::vector<ConditionInterval> out;
  bool header = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(i + 1);
    const auto fields = detail::split_csv(lines[i]);
    if (!fields) fail(ErrorKind::parse, where + ": unterminated quote");
    if (header) {
      const std::vector<std::string> expected{"start_s", "end_s", "label", "target"};
      if (*fields != expected) fail(ErrorKind::schema, where + ": expected header start_s,end_s,label,target");
      header = false;
      continue;
    }
    if (fields->size() != 4) fail(ErrorKind::parse, where + ": expected 4 fields");
    ConditionInterval c;
    const auto start = detail::parse_number((*fields)[0]);
    const auto end = detail::parse_number((*fields)[1]);
    const auto target = detail::parse_number((*fields)[3]);
    if (!start || !end || !target || !std::isfinite(*start) || !std::isfinite(*end) ||
        !std::isfinite(*target)) {
      fail(ErrorKind::parse, where + ": non-numeric start, end or target");
    }
    if (!(*end > *start)) fail(ErrorKind::parse, where + ": end_s must exceed start_s");
    c.start_s = *start;
    c.end_s = *end;
    c.label = (*fields)[2];
    c.target = *target;
    if (c.label.empty()) fail(ErrorKind::parse, where + ": empty label");
    out.push_back(std::move(c));
  }
  if (header) fail(ErrorKind::empty_input, path.string() + ": no header row");
  return out;
}

}  // namespace stresscal
