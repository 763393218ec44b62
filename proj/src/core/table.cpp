#include "stresscal/table.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stresscal/error.hpp"

namespace stresscal {

const char* task_kind_name(TaskKind task) noexcept {
  return task == TaskKind::classification ? "classification" : "regression";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "classification") return TaskKind::classification;
  if (text == "regression") return TaskKind::regression;
  fail(ErrorKind::config, "unknown task kind '" + std::string(text) + "'");
}

void FeatureTable::validate() const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const FeatureRow& row = rows[r];
    const std::string where = "row " + std::to_string(r);
    if (row.subject_id.empty()) fail(ErrorKind::schema, where + ": empty subject id");
    if (row.features.size() != feature_names.size()) {
      fail(ErrorKind::schema, where + ": expected " + std::to_string(feature_names.size()) +
                                  " features, got " + std::to_string(row.features.size()));
    }
    for (std::size_t f = 0; f < row.features.size(); ++f) {
      if (!std::isfinite(row.features[f])) {
        fail(ErrorKind::schema, where + ": non-finite value in column '" + feature_names[f] + "'");
      }
    }
    if (!std::isfinite(row.target)) fail(ErrorKind::schema, where + ": non-finite target");
    if (task == TaskKind::classification && row.label >= labels.size()) {
      fail(ErrorKind::schema, where + ": label index outside the declared label set");
    }
  }
}

std::vector<std::string> FeatureTable::subjects() const {
  std::vector<std::string> out;
  for (const auto& row : rows) out.push_back(row.subject_id);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> FeatureTable::rows_of_subject(std::string_view subject) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].subject_id == subject) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> FeatureTable::class_counts() const {
  std::vector<std::size_t> counts(labels.size(), 0);
  for (const auto& row : rows) {
    if (row.label < counts.size()) ++counts[row.label];
  }
  return counts;
}

FeatureTable FeatureTable::empty_like() const {
  FeatureTable out;
  out.feature_names = feature_names;
  out.labels = labels;
  out.task = task;
  return out;
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> row_indices) const {
  FeatureTable out = empty_like();
  out.rows.reserve(row_indices.size());
  for (std::size_t r : row_indices) out.rows.push_back(rows.at(r));
  return out;
}

std::vector<double> FeatureTable::column(std::size_t feature) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.features.at(feature));
  return out;
}

std::size_t FeatureTable::feature_index(std::string_view name) const {
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    if (feature_names[f] == name) return f;
  }
  fail(ErrorKind::schema, "no feature column '" + std::string(name) + "'");
}

}  // namespace stresscal
