#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "stresscal/diag.hpp"
#include "stresscal/ensemble.hpp"
#include "stresscal/error.hpp"
#include "support.hpp"

using namespace stresscal;

namespace {

EnsembleHyperparams small(Algorithm alg, TaskKind task, std::size_t trees, std::uint64_t seed = 42) {
  auto h = EnsembleHyperparams::defaults(alg, task);
  h.n_trees = trees;
  h.seed = seed;
  return h;
}

double accuracy(const TrainedEnsemble& m, const FeatureTable& t) {
  std::size_t ok = 0;
  for (const auto& row : t.rows) ok += m.predict_class(row.features) == row.label;
  return static_cast<double>(ok) / static_cast<double>(t.rows.size());
}

}  // namespace

TEST_CASE("Gini impurity") {
  CHECK(gini_impurity(std::vector<double>{1.0, 0.0}) == 0.0);
  CHECK(gini_impurity(std::vector<double>{0.5, 0.5}) == 0.5);
  CHECK(gini_impurity(std::vector<double>{0.7, 0.3}) == doctest::Approx(0.42));
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(5);
    std::vector<double> p(k);
    double sum = 0.0;
    for (auto& v : p) sum += (v = rng.uniform());
    for (auto& v : p) v /= sum;
    const double g = gini_impurity(p);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0 - 1.0 / static_cast<double>(k) + 1e-12);
  }
  CHECK(gini_impurity(std::vector<double>(4, 0.25)) == doctest::Approx(0.75));
}

TEST_CASE("hyperparameter defaults and max_features") {
  const auto rf = EnsembleHyperparams::defaults(Algorithm::random_forest, TaskKind::classification);
  CHECK(rf.n_trees == 1000);
  CHECK(rf.max_depth == 2);
  CHECK(rf.bootstrap);
  const auto et = EnsembleHyperparams::defaults(Algorithm::extra_trees, TaskKind::regression);
  CHECK(et.n_trees == 1000);
  CHECK(et.max_depth == 16);
  CHECK_FALSE(et.bootstrap);
  CHECK(rf.resolved_max_features(75) == 9);
  CHECK(et.resolved_max_features(75) == 25);
  CHECK(et.resolved_max_features(1) == 1);
  auto fixed = rf;
  fixed.max_features = MaxFeaturesRule::parse("100");
  CHECK(fixed.resolved_max_features(10) == 10);
  auto bad = rf;
  bad.n_trees = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("a separable 1-D problem is learned exactly") {
  FeatureTable t;
  t.feature_names = {"x"};
  t.labels = {"a", "b"};
  for (int i = -20; i < 20; ++i) t.rows.push_back({"s", i < 0 ? 0u : 1u, 0.0, {i + 0.5}});
  auto h = small(Algorithm::random_forest, TaskKind::classification, 25);
  const Dataset d = Dataset::from_table(t, TaskKind::classification);
  std::vector<std::size_t> rows(d.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Rng rng(1);
  const auto tree = fit_tree(d, rows, h, rng);
  CHECK(tree.depth() <= 2);
  for (const auto& row : t.rows) CHECK(tree.leaf_for(row.features).leaf_class == row.label);
  const auto m = fit_forest(t, h);
  CHECK(accuracy(m, t) == 1.0);
}

TEST_CASE("identical regression targets give single-leaf trees") {
  FeatureTable t;
  t.feature_names = {"x", "y"};
  t.labels = {"a"};
  t.task = TaskKind::regression;
  ScopedWarningCapture warnings;
  for (int i = 0; i < 30; ++i) t.rows.push_back({"s", 0, 4.25, {double(i), double(i % 3)}});
  const auto m = fit_forest(t, small(Algorithm::extra_trees, TaskKind::regression, 5));
  for (const auto& tree : m.trees) CHECK(tree.nodes.size() == 1);
  CHECK(m.predict(std::vector<double>{100.0, -3.0}) == 4.25);
}

TEST_CASE("same seed and rng stream give identical forests") {
  const auto t = testing::blob_table(60, 5, 1.0, 3);
  const auto h = small(Algorithm::random_forest, TaskKind::classification, 40, 7);
  const auto a = fit_forest(t, h);
  const auto b = fit_forest(t, h, FitOptions{3});
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t i = 0; i < a.trees.size(); ++i) {
    REQUIRE(a.trees[i].nodes.size() == b.trees[i].nodes.size());
    for (std::size_t j = 0; j < a.trees[i].nodes.size(); ++j) {
      CHECK(a.trees[i].nodes[j].feature == b.trees[i].nodes[j].feature);
      CHECK(a.trees[i].nodes[j].threshold == b.trees[i].nodes[j].threshold);
    }
  }
  CHECK(a.importances.values == b.importances.values);
  const Dataset d = Dataset::from_table(t, TaskKind::classification);
  std::vector<std::size_t> rows(d.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Rng r1(99), r2(99);
  const auto t1 = fit_tree(d, rows, h, r1);
  const auto t2 = fit_tree(d, rows, h, r2);
  REQUIRE(t1.nodes.size() == t2.nodes.size());
  for (std::size_t j = 0; j < t1.nodes.size(); ++j) CHECK(t1.nodes[j].threshold == t2.nodes[j].threshold);
}

TEST_CASE("blob classification and noisy linear regression") {
  const auto train = testing::blob_table(200, 4, 4.0, 10);
  const auto test = testing::blob_table(200, 4, 4.0, 11);
  const auto rf = fit_forest(train, small(Algorithm::random_forest, TaskKind::classification, 100));
  CHECK(accuracy(rf, test) > 0.95);

  const double sigma = 0.3;
  auto make = [&](std::uint64_t seed) {
    FeatureTable t;
    t.feature_names = {"x"};
    t.labels = {"a"};
    t.task = TaskKind::regression;
    Rng rng(seed);
    for (int i = 0; i < 400; ++i) {
      const double x = 10.0 * rng.uniform();
      t.rows.push_back({"s", 0, x + sigma * rng.normal(), {x}});
    }
    return t;
  };
  const auto rtrain = make(1), rtest = make(2);
  const auto et = fit_forest(rtrain, small(Algorithm::extra_trees, TaskKind::regression, 100));
  double ss = 0.0;
  for (const auto& row : rtest.rows) {
    const double p = et.predict(row.features);
    CHECK(p >= et.target_min);
    CHECK(p <= et.target_max);
    ss += (p - row.target) * (p - row.target);
  }
  CHECK(std::sqrt(ss / static_cast<double>(rtest.rows.size())) < 1.5 * sigma);
}

TEST_CASE("prediction contracts") {
  FeatureTable t;
  t.feature_names = {"x"};
  t.labels = {"a", "b", "c"};
  t.rows = {{"s", 2, 0, {1.0}}, {"s", 2, 0, {2.0}}};
  ScopedWarningCapture warnings;
  const auto m = fit_forest(t, small(Algorithm::random_forest, TaskKind::classification, 3));
  CHECK(warnings.contains("single-class"));
  CHECK(m.predict_class(std::vector<double>{-100.0}) == 2);
  CHECK_THROWS_AS(m.predict(std::vector<double>{1.0, 2.0}), Error);

  // Hand-built forest with a 1-1 vote between labels 1 and 0.
  TrainedEnsemble tie;
  tie.hyper = small(Algorithm::random_forest, TaskKind::classification, 2);
  tie.feature_names = {"x"};
  tie.labels = {"a", "b"};
  for (std::size_t label : {1u, 0u}) {
    DecisionTree tree;
    tree.n_classes = 2;
    TreeNode leaf;
    leaf.leaf_class = label;
    tree.nodes.push_back(leaf);
    tree.importance = {0.0};
    tie.trees.push_back(tree);
  }
  CHECK(tie.predict_class(std::vector<double>{0.0}) == 0);
}

TEST_CASE("MDI importances") {
  Rng rng(17);
  FeatureTable t;
  t.feature_names = {"signal", "n1", "n2", "n3"};
  t.labels = {"lo", "hi"};
  for (int i = 0; i < 400; ++i) {
    const double x = rng.normal();
    t.rows.push_back({"s", x > 0 ? 1u : 0u, 0.0, {x, rng.normal(), rng.normal(), rng.normal()}});
  }
  const auto m = fit_forest(t, small(Algorithm::random_forest, TaskKind::classification, 200));
  CHECK(m.importances.values[0] > 0.8);
  CHECK(std::accumulate(m.importances.values.begin(), m.importances.values.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : m.importances.values) CHECK(v >= 0.0);

  FeatureTable noise = t;
  for (auto& row : noise.rows) row.label = rng.below(2);
  const auto n = fit_forest(noise, small(Algorithm::random_forest, TaskKind::classification, 300));
  const double mean = 0.25;
  CHECK(*std::max_element(n.importances.values.begin(), n.importances.values.end()) < 3.0 * mean);

  FeatureTable flat = t;
  for (auto& row : flat.rows) row.features = {1.0, 1.0, 1.0, 1.0};
  ScopedWarningCapture warnings;
  const auto z = fit_forest(flat, small(Algorithm::random_forest, TaskKind::classification, 5));
  CHECK_FALSE(z.importances.normalized);
  for (double v : z.importances.values) CHECK(v == 0.0);
  CHECK(warnings.contains("no tree made a split"));
}

TEST_CASE("depth-2 random forest trees have at most 3 internal nodes") {
  const auto t = testing::blob_table(80, 6, 0.5, 4);
  const auto m = fit_forest(t, small(Algorithm::random_forest, TaskKind::classification, 50));
  for (const auto& tree : m.trees) {
    CHECK(tree.depth() <= 2);
    CHECK(tree.internal_nodes() <= 3);
  }
}

TEST_CASE("row order does not change the forest") {
  auto t = testing::blob_table(50, 3, 1.0, 6);
  const auto h = small(Algorithm::random_forest, TaskKind::classification, 30);
  const auto a = fit_forest(t, h);
  std::reverse(t.rows.begin(), t.rows.end());
  const auto b = fit_forest(t, h);
  CHECK(a.importances.values == b.importances.values);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
    CHECK(a.predict(x) == b.predict(x));
  }
}

TEST_CASE("depth-1 splits match exhaustive enumeration") {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    CAPTURE(seed);
    CHECK(testing::depth1_split_matches_enumeration(seed));
  }
}
