#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stresscal/rng.hpp"
#include "stresscal/table.hpp"

namespace stresscal {

enum class Algorithm { random_forest, extra_trees };

const char* algorithm_name(Algorithm algorithm) noexcept;
Algorithm parse_algorithm(std::string_view text);

// Candidate features drawn per node. `automatic` is sqrt(p) for
// classification and p/3 for regression.
struct MaxFeaturesRule {
  enum class Kind { automatic, sqrt, third, all, fixed };
  Kind kind = Kind::automatic;
  std::size_t count = 0;  // fixed only

  static MaxFeaturesRule parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const MaxFeaturesRule&) const = default;
};

struct EnsembleHyperparams {
  Algorithm algorithm = Algorithm::random_forest;
  TaskKind task = TaskKind::classification;
  std::size_t n_trees = 1000;
  std::size_t max_depth = 2;
  MaxFeaturesRule max_features;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  // Shipped defaults: RF depth 2 with bootstrap, ExtraTrees depth 16 without;
  // 1000 trees for both.
  static EnsembleHyperparams defaults(Algorithm algorithm, TaskKind task);

  // max(1, round(rule(p))), capped at p.
  std::size_t resolved_max_features(std::size_t n_features) const;
  void validate() const;
  bool operator==(const EnsembleHyperparams&) const = default;
};

// Column-major training matrix.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t n_rows, std::size_t n_features, TaskKind task, std::size_t n_classes);

  static Dataset from_table(const FeatureTable& table, TaskKind task);

  std::size_t rows() const { return rows_; }
  std::size_t features() const { return features_; }
  TaskKind task() const { return task_; }
  std::size_t classes() const { return classes_; }

  double value(std::size_t row, std::size_t feature) const { return x_[feature * rows_ + row]; }
  double& value(std::size_t row, std::size_t feature) { return x_[feature * rows_ + row]; }
  std::span<const double> column(std::size_t feature) const {
    return {x_.data() + feature * rows_, rows_};
  }
  std::size_t label(std::size_t row) const { return labels_[row]; }
  double target(std::size_t row) const { return targets_[row]; }
  void set_label(std::size_t row, std::size_t label) { labels_[row] = label; }
  void set_target(std::size_t row, double target) { targets_[row] = target; }

 private:
  std::size_t rows_ = 0;
  std::size_t features_ = 0;
  TaskKind task_ = TaskKind::classification;
  std::size_t classes_ = 0;
  std::vector<double> x_;
  std::vector<std::size_t> labels_;
  std::vector<double> targets_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x <= threshold
  int left = -1;
  int right = -1;
  std::size_t samples = 0;
  double impurity = 0.0;
  double value = 0.0;          // regression: mean target
  std::size_t leaf_class = 0;  // classification: modal class, ties -> lowest index

  bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;
  std::vector<double> class_distribution;  // nodes.size() * n_classes, row-major
  std::size_t n_classes = 0;
  // Impurity decrease per feature, weighted by node sample fraction.
  std::vector<double> importance;

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t internal_nodes() const;
};

// Grows one tree on `rows` (indices into data, duplicates allowed).
DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows,
                      const EnsembleHyperparams& hyper, Rng& rng);

double gini_impurity(std::span<const double> proportions);

struct ImportanceVector {
  std::vector<double> values;
  bool normalized = false;
};

class TrainedEnsemble {
 public:
  EnsembleHyperparams hyper;
  std::vector<DecisionTree> trees;
  std::vector<std::string> feature_names;
  std::vector<std::string> labels;  // classification label set
  double target_min = 0.0;
  double target_max = 0.0;
  ImportanceVector importances;

  std::size_t num_features() const { return feature_names.size(); }

  // Class index (classification) or mean of leaf means (regression).
  double predict(std::span<const double> x) const;
  std::size_t predict_class(std::span<const double> x) const;
  double predict_value(std::span<const double> x) const;

  // Row-major batch; predictions in row order for any thread count.
  std::vector<double> predict_batch(std::span<const double> rows_major, std::size_t n_rows,
                                    unsigned threads = 1) const;
};

struct FitOptions {
  unsigned threads = 1;
};

TrainedEnsemble fit_forest(const FeatureTable& table, const EnsembleHyperparams& hyper,
                           const FitOptions& options = {});

ImportanceVector feature_importances(const TrainedEnsemble& model);

}  // namespace stresscal
