#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stresscal/table.hpp"

namespace stresscal {

enum class TransformKind { none, log, sqrt, yeo_johnson };

const char* transform_kind_name(TransformKind kind) noexcept;
TransformKind parse_transform_kind(std::string_view text);

struct ScalerParams {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

struct FeatureTransform {
  TransformKind kind = TransformKind::none;
  double lambda = 1.0;  // Yeo-Johnson only
  ScalerParams scaler;
};

// Per-column transforms fitted on training data, replayed on new rows.
struct TransformRecipe {
  std::vector<std::string> feature_names;
  std::vector<FeatureTransform> columns;

  bool empty() const { return columns.empty(); }
  void apply_row(std::span<double> features) const;
  FeatureTable apply(const FeatureTable& table) const;
};

double skewness(std::span<const double> x);

double yeo_johnson(double y, double lambda);

// Maximum-likelihood lambda by golden-section search over [-5, 5].
double fit_yeo_johnson(std::span<const double> x);

// log means log(1 + x); log and sqrt clamp their argument at 0 so values
// outside the fitted domain stay finite.
double apply_transform(const FeatureTransform& transform, double x);

ScalerParams fit_scaler(std::span<const double> x);

// (x - median) / (q3 - q1); a degenerate IQR only removes the median.
double robust_scale(double x, const ScalerParams& params);

struct TransformPolicy {
  double skew_threshold = 0.75;
  bool scale = true;
};

// Column-wise: |skew| <= threshold -> none; strictly positive -> log;
// nonnegative -> sqrt; otherwise Yeo-Johnson. Then robust scaling.
std::pair<FeatureTable, TransformRecipe> apply_transform_policy(const FeatureTable& table,
                                                                const TransformPolicy& policy = {});

// Downsamples every class to the minority-class count. Kept rows stay in
// their original order.
FeatureTable rebalance(const FeatureTable& table, std::uint64_t seed);

struct SelectionPolicy {
  enum class Kind { top_k, min_importance };
  Kind kind = Kind::top_k;
  std::size_t k = 0;
  double min_importance = 0.0;

  // "top_k=N" or "min_mdi=x".
  static SelectionPolicy parse(std::string_view text);
  std::string to_string() const;
};

// Feature indices by descending importance (ties: lower index first).
std::vector<std::size_t> select_features(std::span<const double> importances,
                                         const SelectionPolicy& policy);

FeatureTable project_features(const FeatureTable& table, std::span<const std::size_t> features);

}  // namespace stresscal
