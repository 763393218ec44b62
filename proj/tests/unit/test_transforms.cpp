#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "stresscal/diag.hpp"
#include "stresscal/error.hpp"
#include "stresscal/rng.hpp"
#include "stresscal/stats.hpp"
#include "stresscal/transforms.hpp"
#include "support.hpp"

using namespace stresscal;

namespace {

FeatureTable one_column(const std::vector<double>& x) {
  FeatureTable t;
  t.feature_names = {"x"};
  t.labels = {"a"};
  for (double v : x) t.rows.push_back({"s", 0, 0.0, {v}});
  return t;
}

FeatureTable counted(const std::map<std::size_t, std::size_t>& counts) {
  FeatureTable t;
  t.feature_names = {"v"};
  t.labels = {"a", "b", "c"};
  double id = 0.0;
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) t.rows.push_back({"s", label, 0.0, {id++}});
  }
  return t;
}

}  // namespace

TEST_CASE("skewness examples") {
  CHECK(skewness(std::vector<double>{-1, 0, 1}) == doctest::Approx(0.0));
  CHECK(skewness(std::vector<double>{0, 0, 0, 10}) > 0.0);
  CHECK(skewness(std::vector<double>(5, 2.0)) == 0.0);
}

TEST_CASE("Yeo-Johnson values") {
  CHECK(yeo_johnson(5.0, 1.0) == doctest::Approx(5.0));
  CHECK(yeo_johnson(-5.0, 1.0) == doctest::Approx(-5.0));
  CHECK(yeo_johnson(0.0, 0.0) == 0.0);
  CHECK(yeo_johnson(-3.0, 2.0) == doctest::Approx(-std::log(4.0)));
  CHECK(yeo_johnson(3.0, 0.5) == doctest::Approx(2.0));
  CHECK(yeo_johnson(3.0, 0.0) == doctest::Approx(std::log(4.0)));
  // y < 0, lambda != 2: -((1-y)^(2-l) - 1) / (2-l)
  CHECK(yeo_johnson(-1.0, 0.5) == doctest::Approx(-(std::pow(2.0, 1.5) - 1.0) / 1.5));
}

TEST_CASE("Yeo-Johnson lambda fitting") {
  Rng rng(11);
  std::vector<double> normal(4000), lognormal(4000);
  for (std::size_t i = 0; i < normal.size(); ++i) {
    normal[i] = 3.0 + rng.normal();
    lognormal[i] = std::exp(rng.normal() * 0.5);
  }
  CHECK(std::abs(fit_yeo_johnson(normal) - 1.0) <= 0.3);
  // Reference lambda for this exact sample from an independent maximum-likelihood
  // implementation (scipy.stats.yeojohnson).
  const double lambda = fit_yeo_johnson(lognormal);
  CHECK(lambda == doctest::Approx(-0.9220152).epsilon(1e-3));
  std::vector<double> transformed;
  for (double v : lognormal) transformed.push_back(yeo_johnson(v, lambda));
  CHECK(std::abs(stats::skewness(transformed)) < 0.1 * stats::skewness(lognormal));
  ScopedWarningCapture warnings;
  CHECK(fit_yeo_johnson(std::vector<double>(10, 4.0)) == 1.0);
  CHECK(warnings.messages().size() == 1);
  CHECK_THROWS_AS(fit_yeo_johnson(std::vector<double>{1, 2}), Error);
}

TEST_CASE("robust scaler") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const auto p = fit_scaler(x);
  CHECK(p.median == 3.0);
  CHECK(p.q1 == 2.0);
  CHECK(p.q3 == 4.0);
  CHECK(robust_scale(5.0, p) == doctest::Approx(1.0));
  CHECK(robust_scale(p.median, p) == 0.0);
  CHECK(robust_scale(p.q3, p) == doctest::Approx((p.q3 - p.median) / (p.q3 - p.q1)));
  ScalerParams flat{2.0, 2.0, 2.0};
  CHECK(robust_scale(5.0, flat) == 3.0);
}

TEST_CASE("robust scaling is translation equivariant") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(17), shifted(17);
    const double c = 100.0 * rng.normal();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal() * 3.0;
      shifted[i] = x[i] + c;
    }
    const auto p = fit_scaler(x);
    const auto q = fit_scaler(shifted);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(robust_scale(x[i], p) - robust_scale(shifted[i], q)) < 1e-9);
    }
  }
}

TEST_CASE("transform policy picks one transform per column") {
  Rng rng(21);
  FeatureTable t;
  t.feature_names = {"mild", "positive", "nonneg", "signed"};
  t.labels = {"a"};
  for (int i = 0; i < 400; ++i) {
    const double e = std::exp(1.2 * rng.normal());
    t.rows.push_back({"s", 0, 0.0, {rng.uniform(), e, i % 4 == 0 ? 0.0 : e, e - 1.5}});
  }
  const auto [out, recipe] = apply_transform_policy(t);
  REQUIRE(recipe.columns.size() == 4);
  CHECK(recipe.columns[0].kind == TransformKind::none);
  CHECK(recipe.columns[1].kind == TransformKind::log);
  CHECK(recipe.columns[2].kind == TransformKind::sqrt);
  CHECK(recipe.columns[3].kind == TransformKind::yeo_johnson);
  for (const auto& row : out.rows) {
    for (double v : row.features) CHECK(std::isfinite(v));
  }
  for (const auto& c : recipe.columns) {
    CHECK(c.scaler.q1 <= c.scaler.median);
    CHECK(c.scaler.median <= c.scaler.q3);
  }
  // Replaying the recipe reproduces the transformed table.
  const FeatureTable replay = recipe.apply(t);
  for (std::size_t r = 0; r < t.rows.size(); ++r) CHECK(replay.rows[r].features == out.rows[r].features);
}

TEST_CASE("recipes use training statistics only") {
  Rng rng(31);
  FeatureTable train, test;
  train.feature_names = test.feature_names = {"x"};
  train.labels = test.labels = {"a"};
  for (int i = 0; i < 200; ++i) train.rows.push_back({"s", 0, 0.0, {std::exp(rng.normal())}});
  for (int i = 0; i < 50; ++i) test.rows.push_back({"t", 0, 0.0, {1000.0 + 50.0 * rng.uniform()}});
  const auto [fitted, recipe] = apply_transform_policy(train);
  FeatureTable combined = train;
  combined.rows.insert(combined.rows.end(), test.rows.begin(), test.rows.end());
  const auto [_, leaky] = apply_transform_policy(combined);
  CHECK(leaky.columns[0].scaler.median != recipe.columns[0].scaler.median);
  const FeatureTable applied = recipe.apply(test);
  for (std::size_t r = 0; r < test.rows.size(); ++r) {
    const double expect = robust_scale(apply_transform(recipe.columns[0], test.rows[r].features[0]),
                                       recipe.columns[0].scaler);
    CHECK(applied.rows[r].features[0] == expect);
  }
  // Values below the fitted domain stay finite.
  std::vector<double> odd{-50.0};
  recipe.apply_row(odd);
  CHECK(std::isfinite(odd[0]));
  std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(recipe.apply_row(wrong), Error);
}

TEST_CASE("policy is independent of row order") {
  Rng rng(12);
  std::vector<double> x(300);
  for (auto& v : x) v = std::exp(rng.normal()) - 0.7;
  auto [a, ra] = apply_transform_policy(one_column(x));
  std::reverse(x.begin(), x.end());
  auto [b, rb] = apply_transform_policy(one_column(x));
  CHECK(ra.columns[0].kind == rb.columns[0].kind);
  CHECK(ra.columns[0].lambda == rb.columns[0].lambda);
  CHECK(ra.columns[0].scaler.median == rb.columns[0].scaler.median);
}

TEST_CASE("rebalance") {
  const FeatureTable t = counted({{0, 10}, {1, 4}, {2, 7}});
  const FeatureTable out = rebalance(t, 5);
  CHECK(out.class_counts() == std::vector<std::size_t>{4, 4, 4});
  // Output rows are a subset of the input rows, in input order.
  double last = -1.0;
  for (const auto& row : out.rows) {
    CHECK(row.features[0] > last);
    last = row.features[0];
    CHECK(t.rows[static_cast<std::size_t>(row.features[0])].label == row.label);
  }
  CHECK(rebalance(t, 5).rows.size() == out.rows.size());
  const FeatureTable again = rebalance(t, 5);
  for (std::size_t i = 0; i < out.rows.size(); ++i) CHECK(again.rows[i].features == out.rows[i].features);
  const FeatureTable balanced = counted({{0, 3}, {1, 3}, {2, 3}});
  const FeatureTable same = rebalance(balanced, 1);
  REQUIRE(same.rows.size() == balanced.rows.size());
  for (std::size_t i = 0; i < same.rows.size(); ++i) CHECK(same.rows[i].features == balanced.rows[i].features);
}

TEST_CASE("feature selection") {
  const std::vector<double> imp{0.5, 0.3, 0.15, 0.05};
  CHECK(select_features(imp, SelectionPolicy::parse("top_k=2")) == std::vector<std::size_t>{0, 1});
  CHECK(select_features(imp, SelectionPolicy::parse("min_mdi=0.2")) == std::vector<std::size_t>{0, 1});
  CHECK(select_features(imp, SelectionPolicy::parse("top_k=all")) == std::vector<std::size_t>{0, 1, 2, 3});
  const std::vector<double> shuffled{0.15, 0.5, 0.05, 0.3};
  CHECK(select_features(shuffled, SelectionPolicy::parse("top_k=3")) == std::vector<std::size_t>{1, 3, 0});
  try {
    (void)select_features(imp, SelectionPolicy::parse("min_mdi=0.9"));
    FAIL("expected a policy error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::policy);
  }
  CHECK_THROWS_AS(SelectionPolicy::parse("best=3"), Error);
  CHECK(SelectionPolicy::parse("top_k=7").to_string() == "top_k=7");
}
