#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stresscal {

enum class TaskKind { classification, regression };

const char* task_kind_name(TaskKind task) noexcept;
TaskKind parse_task_kind(std::string_view text);

struct FeatureRow {
  std::string subject_id;
  std::size_t label = 0;  // index into FeatureTable::labels
  double target = 0.0;    // self-report score (NASA-TLX, SSSQ)
  std::vector<double> features;
};

// The exchange format between pipeline stages: one row per window.
struct FeatureTable {
  std::vector<std::string> feature_names;
  std::vector<std::string> labels;  // declared label set, declaration order
  TaskKind task = TaskKind::classification;
  std::vector<FeatureRow> rows;

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_features() const { return feature_names.size(); }

  // Throws Error(schema) when a row breaks the table invariants.
  void validate() const;

  // Distinct subject ids, sorted.
  std::vector<std::string> subjects() const;
  std::vector<std::size_t> rows_of_subject(std::string_view subject) const;
  std::vector<std::size_t> class_counts() const;

  // Copy of the header with the given rows, in the given order.
  FeatureTable subset(std::span<const std::size_t> row_indices) const;
  FeatureTable empty_like() const;
  std::vector<double> column(std::size_t feature) const;
  std::size_t feature_index(std::string_view name) const;
};

}  // namespace stresscal
