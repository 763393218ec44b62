#include "stresscal/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "parallel.hpp"
#include "stresscal/diag.hpp"
#include "stresscal/error.hpp"

namespace stresscal {

const char* algorithm_name(Algorithm algorithm) noexcept {
  return algorithm == Algorithm::random_forest ? "rf" : "extratrees";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "rf" || text == "random_forest") return Algorithm::random_forest;
  if (text == "extratrees" || text == "extra_trees" || text == "et") return Algorithm::extra_trees;
  fail(ErrorKind::config, "unknown algorithm '" + std::string(text) + "' (rf | extratrees)");
}

MaxFeaturesRule MaxFeaturesRule::parse(std::string_view text) {
  MaxFeaturesRule r;
  if (text == "auto") return r;
  if (text == "sqrt") {
    r.kind = Kind::sqrt;
  } else if (text == "third") {
    r.kind = Kind::third;
  } else if (text == "all") {
    r.kind = Kind::all;
  } else {
    const std::string s(text);
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != s.size() || v == 0) {
      fail(ErrorKind::config, "max_features must be auto|sqrt|third|all|<positive int>, got '" + s + "'");
    }
    r.kind = Kind::fixed;
    r.count = v;
  }
  return r;
}

std::string MaxFeaturesRule::to_string() const {
  switch (kind) {
    case Kind::automatic: return "auto";
    case Kind::sqrt: return "sqrt";
    case Kind::third: return "third";
    case Kind::all: return "all";
    case Kind::fixed: return std::to_string(count);
  }
  return "auto";
}

EnsembleHyperparams EnsembleHyperparams::defaults(Algorithm algorithm, TaskKind task) {
  EnsembleHyperparams h;
  h.algorithm = algorithm;
  h.task = task;
  h.n_trees = 1000;
  h.max_depth = algorithm == Algorithm::random_forest ? 2 : 16;
  h.bootstrap = algorithm == Algorithm::random_forest;
  return h;
}

std::size_t EnsembleHyperparams::resolved_max_features(std::size_t n_features) const {
  if (n_features == 0) return 0;
  const double p = static_cast<double>(n_features);
  double rule = p;
  MaxFeaturesRule::Kind kind = max_features.kind;
  if (kind == MaxFeaturesRule::Kind::automatic) {
    kind = task == TaskKind::classification ? MaxFeaturesRule::Kind::sqrt : MaxFeaturesRule::Kind::third;
  }
  switch (kind) {
    case MaxFeaturesRule::Kind::sqrt: rule = std::sqrt(p); break;
    case MaxFeaturesRule::Kind::third: rule = p / 3.0; break;
    case MaxFeaturesRule::Kind::all: rule = p; break;
    case MaxFeaturesRule::Kind::fixed: rule = static_cast<double>(max_features.count); break;
    case MaxFeaturesRule::Kind::automatic: break;
  }
  const auto r = static_cast<std::size_t>(std::max(1.0, std::round(rule)));
  return std::min(r, n_features);
}

void EnsembleHyperparams::validate() const {
  if (n_trees < 1) fail(ErrorKind::parameter, "n_trees must be at least 1");
  if (max_depth < 1) fail(ErrorKind::parameter, "max_depth must be at least 1");
  if (max_features.kind == MaxFeaturesRule::Kind::fixed && max_features.count < 1) {
    fail(ErrorKind::parameter, "max_features must be at least 1");
  }
}

Dataset::Dataset(std::size_t n_rows, std::size_t n_features, TaskKind task, std::size_t n_classes)
    : rows_(n_rows),
      features_(n_features),
      task_(task),
      classes_(n_classes),
      x_(n_rows * n_features, 0.0),
      labels_(n_rows, 0),
      targets_(n_rows, 0.0) {}

Dataset Dataset::from_table(const FeatureTable& table, TaskKind task) {
  const std::size_t classes = task == TaskKind::classification ? table.labels.size() : 0;
  if (task == TaskKind::classification && classes == 0) {
    fail(ErrorKind::schema, "classification needs a declared label set");
  }
  Dataset d(table.num_rows(), table.num_features(), task, classes);
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const FeatureRow& row = table.rows[r];
    if (row.features.size() != table.num_features()) {
      fail(ErrorKind::shape, "row " + std::to_string(r) + " has the wrong number of features");
    }
    for (std::size_t f = 0; f < row.features.size(); ++f) d.value(r, f) = row.features[f];
    d.labels_[r] = row.label;
    d.targets_[r] = row.target;
  }
  return d;
}

double gini_impurity(std::span<const double> proportions) {
  double g = 0.0;
  for (double p : proportions) g += p * (1.0 - p);
  return g;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i];
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::internal_nodes() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

namespace {

// Sufficient statistics of a sample set: class counts or target sums.
struct NodeStats {
  std::vector<double> counts;
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const EnsembleHyperparams& hyper, Rng& rng)
      : data_(data),
        hyper_(hyper),
        rng_(rng),
        classification_(data.task() == TaskKind::classification),
        classes_(data.classes()),
        mtry_(hyper.resolved_max_features(data.features())) {}

  DecisionTree build(std::span<const std::size_t> rows) {
    tree_.n_classes = classes_;
    tree_.importance.assign(data_.features(), 0.0);
    index_.assign(rows.begin(), rows.end());
    total_ = static_cast<double>(index_.size());
    feature_order_.resize(data_.features());

    struct Pending {
      std::size_t node, begin, end, depth;
    };
    std::vector<Pending> stack;
    stack.push_back({new_node(0, index_.size()), 0, index_.size(), 0});
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      Split s;
      if (!try_split(p.begin, p.end, p.depth, s)) continue;

      auto first = index_.begin() + static_cast<std::ptrdiff_t>(p.begin);
      auto last = index_.begin() + static_cast<std::ptrdiff_t>(p.end);
      auto mid = std::stable_partition(first, last, [&](std::size_t r) {
        return data_.value(r, s.feature) <= s.threshold;
      });
      const auto split_at = static_cast<std::size_t>(mid - index_.begin());

      const std::size_t left = new_node(p.begin, split_at);
      const std::size_t right = new_node(split_at, p.end);
      TreeNode& node = tree_.nodes[p.node];
      node.feature = static_cast<int>(s.feature);
      node.threshold = s.threshold;
      node.left = static_cast<int>(left);
      node.right = static_cast<int>(right);

      const TreeNode& l = tree_.nodes[left];
      const TreeNode& r = tree_.nodes[right];
      const double nt = static_cast<double>(node.samples);
      const double decrease =
          (nt / total_) * (node.impurity - (static_cast<double>(l.samples) / nt) * l.impurity -
                           (static_cast<double>(r.samples) / nt) * r.impurity);
      tree_.importance[s.feature] += std::max(0.0, decrease);

      stack.push_back({right, split_at, p.end, p.depth + 1});
      stack.push_back({left, p.begin, split_at, p.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
  };

  NodeStats stats_of(std::size_t begin, std::size_t end) const {
    NodeStats s;
    if (classification_) s.counts.assign(classes_, 0.0);
    for (std::size_t i = begin; i < end; ++i) accumulate(s, index_[i], 1.0);
    return s;
  }

  void accumulate(NodeStats& s, std::size_t row, double sign) const {
    s.n += sign;
    if (classification_) {
      s.counts[data_.label(row)] += sign;
    } else {
      const double y = data_.target(row);
      s.sum += sign * y;
      s.sum_sq += sign * y * y;
    }
  }

  double impurity(const NodeStats& s) const {
    if (s.n <= 0.0) return 0.0;
    if (classification_) {
      double g = 1.0;
      for (double c : s.counts) g -= (c / s.n) * (c / s.n);
      return std::max(0.0, g);
    }
    const double mean = s.sum / s.n;
    return std::max(0.0, s.sum_sq / s.n - mean * mean);
  }

  // Larger is better; equals -(N_L * I_L + N_R * I_R) up to a constant.
  double score(const NodeStats& left, const NodeStats& right) const {
    if (classification_) {
      double a = 0.0, b = 0.0;
      for (double c : left.counts) a += c * c;
      for (double c : right.counts) b += c * c;
      return a / left.n + b / right.n;
    }
    return left.sum * left.sum / left.n + right.sum * right.sum / right.n;
  }

  std::size_t new_node(std::size_t begin, std::size_t end) {
    TreeNode node;
    node.samples = end - begin;
    std::vector<double> dist(classes_, 0.0);
    if (classification_) {
      for (std::size_t i = begin; i < end; ++i) dist[data_.label(index_[i])] += 1.0;
      std::size_t best = 0;
      for (std::size_t k = 0; k < classes_; ++k) {
        if (dist[k] > dist[best]) best = k;
      }
      node.leaf_class = best;
      double g = 1.0;
      for (double& c : dist) {
        c /= static_cast<double>(node.samples);
        g -= c * c;
      }
      node.impurity = std::max(0.0, g);
    } else {
      // Summed in sorted order so leaf values do not depend on row order.
      targets_.clear();
      for (std::size_t i = begin; i < end; ++i) targets_.push_back(data_.target(index_[i]));
      std::sort(targets_.begin(), targets_.end());
      double sum = 0.0;
      for (double y : targets_) sum += y;
      node.value = sum / static_cast<double>(node.samples);
      double ss = 0.0;
      for (double y : targets_) ss += (y - node.value) * (y - node.value);
      node.impurity = ss / static_cast<double>(node.samples);
    }
    tree_.nodes.push_back(node);
    tree_.class_distribution.insert(tree_.class_distribution.end(), dist.begin(), dist.end());
    return tree_.nodes.size() - 1;
  }

  bool pure(std::size_t begin, std::size_t end) const {
    if (classification_) {
      const std::size_t first = data_.label(index_[begin]);
      for (std::size_t i = begin + 1; i < end; ++i) {
        if (data_.label(index_[i]) != first) return false;
      }
      return true;
    }
    const double first = data_.target(index_[begin]);
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (data_.target(index_[i]) != first) return false;
    }
    return true;
  }

  bool try_split(std::size_t begin, std::size_t end, std::size_t depth, Split& best) {
    if (depth >= hyper_.max_depth || end - begin < 2 || pure(begin, end)) return false;
    const NodeStats parent = stats_of(begin, end);

    // Features are drawn without replacement; constant features do not use
    // up the max_features budget.
    std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
    std::size_t informative = 0;
    for (std::size_t drawn = 0; drawn < feature_order_.size() && informative < mtry_; ++drawn) {
      const std::size_t j = drawn + rng_.below(feature_order_.size() - drawn);
      std::swap(feature_order_[drawn], feature_order_[j]);
      const std::size_t f = feature_order_[drawn];
      const bool usable = hyper_.algorithm == Algorithm::random_forest
                              ? best_threshold(f, begin, end, parent, best)
                              : random_threshold(f, begin, end, parent, best);
      if (usable) ++informative;
    }
    return std::isfinite(best.score);
  }

  bool best_threshold(std::size_t f, std::size_t begin, std::size_t end, const NodeStats& parent,
                      Split& best) {
    sorted_.assign(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                   index_.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(sorted_.begin(), sorted_.end(), [&](std::size_t a, std::size_t b) {
      return data_.value(a, f) < data_.value(b, f);
    });
    if (data_.value(sorted_.front(), f) >= data_.value(sorted_.back(), f)) return false;

    NodeStats left;
    if (classification_) left.counts.assign(classes_, 0.0);
    NodeStats right = parent;
    for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
      accumulate(left, sorted_[i], 1.0);
      accumulate(right, sorted_[i], -1.0);
      const double here = data_.value(sorted_[i], f);
      const double next = data_.value(sorted_[i + 1], f);
      if (!(here < next)) continue;
      const double sc = score(left, right);
      if (sc > best.score) {
        double threshold = here + (next - here) / 2.0;
        if (!(threshold < next)) threshold = here;
        best = {f, threshold, sc};
      }
    }
    return true;
  }

  bool random_threshold(std::size_t f, std::size_t begin, std::size_t end, const NodeStats& parent,
                        Split& best) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = data_.value(index_[i], f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo < hi)) return false;
    double threshold = lo + rng_.uniform() * (hi - lo);
    if (!(threshold < hi)) threshold = lo;

    NodeStats left;
    if (classification_) left.counts.assign(classes_, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      if (data_.value(index_[i], f) <= threshold) accumulate(left, index_[i], 1.0);
    }
    NodeStats right = parent;
    if (classification_) {
      for (std::size_t k = 0; k < classes_; ++k) right.counts[k] -= left.counts[k];
    } else {
      right.sum -= left.sum;
      right.sum_sq -= left.sum_sq;
    }
    right.n -= left.n;
    const double sc = score(left, right);
    if (sc > best.score) best = {f, threshold, sc};
    return true;
  }

  const Dataset& data_;
  const EnsembleHyperparams& hyper_;
  Rng& rng_;
  bool classification_;
  std::size_t classes_;
  std::size_t mtry_;
  double total_ = 0.0;
  DecisionTree tree_;
  std::vector<std::size_t> index_;
  std::vector<std::size_t> sorted_;
  std::vector<std::size_t> feature_order_;
  std::vector<double> targets_;
};

}  // namespace

DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows,
                      const EnsembleHyperparams& hyper, Rng& rng) {
  if (rows.empty()) fail(ErrorKind::insufficient_data, "cannot grow a tree on zero rows");
  if (hyper.task != data.task()) fail(ErrorKind::parameter, "hyperparameter task does not match the data");
  return TreeBuilder(data, hyper, rng).build(rows);
}

TrainedEnsemble fit_forest(const FeatureTable& table, const EnsembleHyperparams& hyper,
                           const FitOptions& options) {
  hyper.validate();
  if (table.rows.empty()) fail(ErrorKind::insufficient_data, "cannot fit a forest on an empty table");
  if (table.num_features() == 0) fail(ErrorKind::shape, "cannot fit a forest without features");
  // Rows are put in a canonical order first, so the fitted forest depends
  // only on the multiset of training rows and not on how they were listed.
  std::vector<std::size_t> order(table.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const FeatureRow& x = table.rows[a];
    const FeatureRow& y = table.rows[b];
    if (x.features != y.features) return x.features < y.features;
    if (x.label != y.label) return x.label < y.label;
    if (x.target != y.target) return x.target < y.target;
    return x.subject_id < y.subject_id;
  });
  const Dataset data = Dataset::from_table(table.subset(order), hyper.task);
  const std::size_t n = data.rows();

  TrainedEnsemble model;
  model.hyper = hyper;
  model.feature_names = table.feature_names;
  if (hyper.task == TaskKind::classification) {
    model.labels = table.labels;
    std::vector<bool> seen(data.classes(), false);
    std::size_t distinct = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (!seen[data.label(r)]) {
        seen[data.label(r)] = true;
        ++distinct;
      }
    }
    if (distinct < 2) warn("single-class training data: the forest is a constant predictor");
  } else {
    model.target_min = model.target_max = data.target(0);
    for (std::size_t r = 1; r < n; ++r) {
      model.target_min = std::min(model.target_min, data.target(r));
      model.target_max = std::max(model.target_max, data.target(r));
    }
  }

  model.trees.resize(hyper.n_trees);
  detail::parallel_for(hyper.n_trees, options.threads, [&](std::size_t t) {
    Rng rng(derive_seed(hyper.seed, t));
    std::vector<std::size_t> rows(n);
    if (hyper.bootstrap) {
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees[t] = fit_tree(data, rows, hyper, rng);
  });
  model.importances = feature_importances(model);
  return model;
}

ImportanceVector feature_importances(const TrainedEnsemble& model) {
  ImportanceVector out;
  out.values.assign(model.feature_names.size(), 0.0);
  for (const auto& tree : model.trees) {
    for (std::size_t f = 0; f < out.values.size() && f < tree.importance.size(); ++f) {
      out.values[f] += tree.importance[f];
    }
  }
  double total = 0.0;
  for (double& v : out.values) {
    v /= static_cast<double>(std::max<std::size_t>(1, model.trees.size()));
    total += v;
  }
  if (total > 0.0) {
    for (double& v : out.values) v /= total;
    out.normalized = true;
  } else {
    warn("no tree made a split; importances are all zero");
  }
  return out;
}

std::size_t TrainedEnsemble::predict_class(std::span<const double> x) const {
  if (x.size() != feature_names.size()) {
    fail(ErrorKind::shape, "expected " + std::to_string(feature_names.size()) +
                               " features, got " + std::to_string(x.size()));
  }
  std::vector<std::size_t> votes(std::max<std::size_t>(1, labels.size()), 0);
  for (const auto& tree : trees) ++votes[tree.leaf_for(x).leaf_class];
  // max_element returns the first maximum: ties go to the lowest label.
  return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

double TrainedEnsemble::predict_value(std::span<const double> x) const {
  if (x.size() != feature_names.size()) {
    fail(ErrorKind::shape, "expected " + std::to_string(feature_names.size()) +
                               " features, got " + std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.leaf_for(x).value;
  return sum / static_cast<double>(trees.size());
}

double TrainedEnsemble::predict(std::span<const double> x) const {
  return hyper.task == TaskKind::classification ? static_cast<double>(predict_class(x))
                                                : predict_value(x);
}

std::vector<double> TrainedEnsemble::predict_batch(std::span<const double> rows_major,
                                                   std::size_t n_rows, unsigned threads) const {
  const std::size_t p = feature_names.size();
  if (rows_major.size() != n_rows * p) fail(ErrorKind::shape, "batch size does not match rows x features");
  std::vector<double> out(n_rows);
  detail::parallel_for(n_rows, threads, [&](std::size_t r) {
    out[r] = predict(rows_major.subspan(r * p, p));
  });
  return out;
}

}  // namespace stresscal
