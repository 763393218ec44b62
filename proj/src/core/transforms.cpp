#include "stresscal/transforms.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "stresscal/diag.hpp"
#include "stresscal/error.hpp"
#include "stresscal/rng.hpp"
#include "stresscal/stats.hpp"

namespace stresscal {

const char* transform_kind_name(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::none: return "none";
    case TransformKind::log: return "log";
    case TransformKind::sqrt: return "sqrt";
    case TransformKind::yeo_johnson: return "yeo-johnson";
  }
  return "none";
}

TransformKind parse_transform_kind(std::string_view text) {
  for (auto k : {TransformKind::none, TransformKind::log, TransformKind::sqrt,
                 TransformKind::yeo_johnson}) {
    if (text == transform_kind_name(k)) return k;
  }
  fail(ErrorKind::incompatible_format, "unknown transform '" + std::string(text) + "'");
}

double skewness(std::span<const double> x) { return stats::skewness(x); }

double yeo_johnson(double y, double lambda) {
  if (y >= 0.0) {
    if (lambda == 0.0) return std::log1p(y);
    return std::expm1(lambda * std::log1p(y)) / lambda;
  }
  if (lambda == 2.0) return -std::log1p(-y);
  return -std::expm1((2.0 - lambda) * std::log1p(-y)) / (2.0 - lambda);
}

namespace {

// Profile log-likelihood of a normal fit to the transformed sample,
// including the Jacobian of the transform.
double yeo_johnson_log_likelihood(std::span<const double> x, double lambda) {
  const double n = static_cast<double>(x.size());
  double sum = 0.0, jacobian = 0.0;
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    t[i] = yeo_johnson(x[i], lambda);
    sum += t[i];
    jacobian += std::copysign(std::log1p(std::abs(x[i])), x[i]);
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : t) ss += (v - mean) * (v - mean);
  const double var = ss / n;
  if (!std::isfinite(var) || var <= 0.0) return -std::numeric_limits<double>::infinity();
  return -0.5 * n * std::log(var) + (lambda - 1.0) * jacobian;
}

}  // namespace

double fit_yeo_johnson(std::span<const double> x) {
  if (x.size() < 3) fail(ErrorKind::insufficient_data, "Yeo-Johnson fit needs at least 3 values");
  if (stats::variance(x) <= 0.0) {
    warn("Yeo-Johnson fit on a zero-variance column; using lambda = 1");
    return 1.0;
  }
  constexpr double tolerance = 1e-4;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -5.0, b = 5.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = yeo_johnson_log_likelihood(x, c);
  double fd = yeo_johnson_log_likelihood(x, d);
  while (b - a > tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = yeo_johnson_log_likelihood(x, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = yeo_johnson_log_likelihood(x, d);
    }
  }
  return 0.5 * (a + b);
}

double apply_transform(const FeatureTransform& transform, double x) {
  switch (transform.kind) {
    case TransformKind::none: return x;
    case TransformKind::log: return std::log1p(std::max(x, 0.0));
    case TransformKind::sqrt: return std::sqrt(std::max(x, 0.0));
    case TransformKind::yeo_johnson: return yeo_johnson(x, transform.lambda);
  }
  return x;
}

ScalerParams fit_scaler(std::span<const double> x) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  return {stats::quantile_sorted(sorted, 0.5), stats::quantile_sorted(sorted, 0.25),
          stats::quantile_sorted(sorted, 0.75)};
}

double robust_scale(double x, const ScalerParams& params) {
  const double iqr = params.q3 - params.q1;
  if (iqr > 0.0) return (x - params.median) / iqr;
  return x - params.median;
}

void TransformRecipe::apply_row(std::span<double> features) const {
  if (features.size() != columns.size()) {
    fail(ErrorKind::shape, "recipe expects " + std::to_string(columns.size()) + " features, got " +
                               std::to_string(features.size()));
  }
  for (std::size_t f = 0; f < columns.size(); ++f) {
    features[f] = robust_scale(apply_transform(columns[f], features[f]), columns[f].scaler);
  }
}

FeatureTable TransformRecipe::apply(const FeatureTable& table) const {
  if (table.feature_names != feature_names) {
    fail(ErrorKind::shape, "table columns do not match the recipe's feature list");
  }
  FeatureTable out = table;
  for (auto& row : out.rows) apply_row(row.features);
  return out;
}

std::pair<FeatureTable, TransformRecipe> apply_transform_policy(const FeatureTable& table,
                                                                const TransformPolicy& policy) {
  TransformRecipe recipe;
  recipe.feature_names = table.feature_names;
  recipe.columns.resize(table.num_features());
  for (std::size_t f = 0; f < table.num_features(); ++f) {
    // Statistics are taken over the sorted column so the recipe does not
    // depend on row order.
    std::vector<double> col = table.column(f);
    std::sort(col.begin(), col.end());
    FeatureTransform& tr = recipe.columns[f];
    if (col.size() >= 3 && std::abs(skewness(col)) > policy.skew_threshold) {
      const double lo = col.front();
      if (lo > 0.0) {
        tr.kind = TransformKind::log;
      } else if (lo >= 0.0) {
        tr.kind = TransformKind::sqrt;
      } else {
        tr.kind = TransformKind::yeo_johnson;
        tr.lambda = fit_yeo_johnson(col);
      }
    }
    for (double& v : col) v = apply_transform(tr, v);
    if (policy.scale && !col.empty()) {
      tr.scaler = fit_scaler(col);
      if (!(tr.scaler.q3 > tr.scaler.q1)) {
        warn("feature '" + table.feature_names[f] + "' has zero IQR; only the median is removed");
      }
    } else {
      tr.scaler = {0.0, 0.0, 1.0};
    }
  }
  return {recipe.apply(table), std::move(recipe)};
}

FeatureTable rebalance(const FeatureTable& table, std::uint64_t seed) {
  if (table.task != TaskKind::classification) {
    fail(ErrorKind::usage, "rebalancing needs a classification table");
  }
  std::vector<std::vector<std::size_t>> by_class(table.labels.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) by_class.at(table.rows[r].label).push_back(r);

  std::size_t minority = std::numeric_limits<std::size_t>::max();
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].empty()) {
      warn("class '" + table.labels[k] + "' has no rows; rebalancing over the remaining classes");
      continue;
    }
    minority = std::min(minority, by_class[k].size());
  }
  if (minority == std::numeric_limits<std::size_t>::max()) return table.empty_like();

  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& rows : by_class) {
    rng.shuffle(rows);
    keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(std::min(minority, rows.size())));
  }
  std::sort(keep.begin(), keep.end());
  return table.subset(keep);
}

SelectionPolicy SelectionPolicy::parse(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) {
    fail(ErrorKind::config, "feature selection must be 'top_k=N' or 'min_mdi=x', got '" +
                                std::string(text) + "'");
  }
  const std::string key(text.substr(0, eq));
  const std::string value(text.substr(eq + 1));
  SelectionPolicy p;
  try {
    if (key == "top_k") {
      p.kind = Kind::top_k;
      p.k = value == "all" ? std::numeric_limits<std::size_t>::max() : std::stoul(value);
      return p;
    }
    if (key == "min_mdi") {
      p.kind = Kind::min_importance;
      p.min_importance = std::stod(value);
      return p;
    }
  } catch (const std::logic_error&) {
    fail(ErrorKind::config, "bad feature selection value '" + value + "'");
  }
  fail(ErrorKind::config, "unknown feature selection policy '" + key + "'");
}

std::string SelectionPolicy::to_string() const {
  if (kind == Kind::top_k) {
    return k == std::numeric_limits<std::size_t>::max() ? "top_k=all" : "top_k=" + std::to_string(k);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "min_mdi=%.17g", min_importance);
  return buf;
}

std::vector<std::size_t> select_features(std::span<const double> importances,
                                         const SelectionPolicy& policy) {
  std::vector<std::size_t> order(importances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importances[a] > importances[b]; });
  if (policy.kind == SelectionPolicy::Kind::top_k) {
    order.resize(std::min(order.size(), policy.k));
  } else {
    std::erase_if(order, [&](std::size_t f) { return importances[f] < policy.min_importance; });
  }
  if (order.empty()) fail(ErrorKind::policy, "feature selection " + policy.to_string() + " kept no features");
  return order;
}

FeatureTable project_features(const FeatureTable& table, std::span<const std::size_t> features) {
  FeatureTable out = table.empty_like();
  out.feature_names.clear();
  for (std::size_t f : features) out.feature_names.push_back(table.feature_names.at(f));
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    FeatureRow r;
    r.subject_id = row.subject_id;
    r.label = row.label;
    r.target = row.target;
    r.features.reserve(features.size());
    for (std::size_t f : features) r.features.push_back(row.features.at(f));
    out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace stresscal
