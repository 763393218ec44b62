#pragma once

// Synthetic data and scratch directories for the test suites.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <filesystem>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

#include "stresscal/ensemble.hpp"
#include "stresscal/error.hpp"
#include "stresscal/rng.hpp"
#include "stresscal/table.hpp"

namespace stresscal::testing {

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("stresscal_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct ShiftSpec {
  std::size_t subjects = 6;
  std::size_t rows_per_class = 40;
  std::size_t classes = 3;
  double class_gap = 4.0;     // distance between class centres on feature 0
  double subject_gap = 10.0;  // distance between subject baselines on feature 1
  double noise = 0.5;
  std::size_t noise_features = 2;
  std::uint64_t seed = 1;
};

// Every subject separates its classes cleanly along feature 0, but each
// subject carries its own offset on that axis (spread over the whole class
// range), and feature 1 holds a subject-specific baseline. A model trained on
// one person does well on that person; a model trained on other people does
// not transfer.
inline FeatureTable subject_shift_table(const ShiftSpec& spec) {
  FeatureTable t;
  t.feature_names = {"signal", "baseline"};
  for (std::size_t j = 0; j < spec.noise_features; ++j) t.feature_names.push_back("noise" + std::to_string(j));
  for (std::size_t k = 0; k < spec.classes; ++k) t.labels.push_back("c" + std::to_string(k));
  Rng rng(spec.seed);
  const double span = spec.class_gap * static_cast<double>(spec.classes);
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    const std::string id = "s" + std::to_string(s / 10) + std::to_string(s % 10);
    // Low-discrepancy offsets so any set of subjects covers the range evenly.
    const double offset = span * std::fmod(0.5 + 0.6180339887498949 * static_cast<double>(s), 1.0);
    for (std::size_t i = 0; i < spec.rows_per_class; ++i) {
      for (std::size_t k = 0; k < spec.classes; ++k) {
        FeatureRow row;
        row.subject_id = id;
        row.label = k;
        row.target = 10.0 * static_cast<double>(k) + rng.normal();
        row.features.push_back(static_cast<double>(k) * spec.class_gap + offset + spec.noise * rng.normal());
        row.features.push_back(static_cast<double>(s) * spec.subject_gap + spec.noise * rng.normal());
        for (std::size_t j = 0; j < spec.noise_features; ++j) row.features.push_back(rng.normal());
        t.rows.push_back(std::move(row));
      }
    }
  }
  return t;
}

// Two Gaussian blobs per class along every feature, no subject structure.
inline FeatureTable blob_table(std::size_t rows_per_class, std::size_t features, double gap,
                               std::uint64_t seed, std::size_t subjects = 4) {
  FeatureTable t;
  for (std::size_t j = 0; j < features; ++j) t.feature_names.push_back("x" + std::to_string(j));
  t.labels = {"neg", "pos"};
  Rng rng(seed);
  for (std::size_t i = 0; i < rows_per_class; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      FeatureRow row;
      row.subject_id = "p" + std::to_string((i * 2 + k) % subjects);
      row.label = k;
      row.target = static_cast<double>(k);
      for (std::size_t j = 0; j < features; ++j) {
        row.features.push_back((k == 0 ? -gap / 2 : gap / 2) + rng.normal());
      }
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

// Random IBI window: n intervals around 800 ms.
inline std::vector<double> random_ibi(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = 800.0 + 120.0 * (rng.uniform() - 0.5) + 40.0 * rng.normal();
  return x;
}

// Weighted Gini of the two sides of `feature <= threshold`.
inline double split_gini(const Dataset& d, std::size_t feature, double threshold) {
  std::vector<double> left(d.classes(), 0.0), right(d.classes(), 0.0);
  for (std::size_t r = 0; r < d.rows(); ++r) (d.value(r, feature) <= threshold ? left : right)[d.label(r)] += 1.0;
  auto side = [](const std::vector<double>& c) {
    const double n = std::accumulate(c.begin(), c.end(), 0.0);
    if (n == 0.0) return 0.0;
    double g = 0.0;
    for (double v : c) g += (v / n) * (1.0 - v / n);
    return n * g;
  };
  return (side(left) + side(right)) / static_cast<double>(d.rows());
}

// Random instance of at most 8 rows and 2 features, then a depth-1 random
// forest tree without bootstrap, checked against enumeration of every
// feature/threshold pair. Returns false on a mismatch.
inline bool depth1_split_matches_enumeration(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 2 + rng.below(7);
  Dataset d(n, 2, TaskKind::classification, 2);
  for (std::size_t r = 0; r < n; ++r) {
    // Small integer grid so ties and repeated values show up.
    d.value(r, 0) = static_cast<double>(rng.below(5));
    d.value(r, 1) = static_cast<double>(rng.below(5)) * 0.5;
    d.set_label(r, rng.below(2));
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < 2; ++f) {
    std::vector<double> values;
    for (std::size_t r = 0; r < n; ++r) values.push_back(d.value(r, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      best = std::min(best, split_gini(d, f, (values[i] + values[i + 1]) / 2.0));
    }
  }
  bool pure = true;
  for (std::size_t r = 1; r < n; ++r) pure = pure && d.label(r) == d.label(0);

  auto hyper = EnsembleHyperparams::defaults(Algorithm::random_forest, TaskKind::classification);
  hyper.max_depth = 1;
  hyper.bootstrap = false;
  hyper.max_features = MaxFeaturesRule::parse("all");
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Rng tree_rng(derive_seed(seed, 1));
  const DecisionTree tree = fit_tree(d, rows, hyper, tree_rng);
  const TreeNode& root = tree.nodes.front();
  if (root.is_leaf()) return pure || !std::isfinite(best);
  if (pure || !std::isfinite(best)) return false;
  return std::abs(split_gini(d, static_cast<std::size_t>(root.feature), root.threshold) - best) <= 1e-12;
}

// Kind of the Error thrown by f, or nullopt when it does not throw one.
template <class F>
std::optional<ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

}  // namespace stresscal::testing
