#include "doctest.h"

#include <cmath>
#include <vector>

#include "stresscal/error.hpp"
#include "stresscal/stats.hpp"

using namespace stresscal;

TEST_CASE("mean, median and population spread") {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(stats::mean(x) == doctest::Approx(5.0));
  CHECK(stats::median(x) == doctest::Approx(4.5));
  CHECK(stats::variance(x) == doctest::Approx(4.0));
  CHECK(stats::stddev(x) == doctest::Approx(2.0));
  CHECK(stats::min(x) == 2.0);
  CHECK(stats::max(x) == 9.0);
  const std::vector<double> odd{3, 1, 2};
  CHECK(stats::median(odd) == 2.0);
}

TEST_CASE("skewness and excess kurtosis against hand moments") {
  const std::vector<double> sym{-1, 0, 1};
  CHECK(stats::skewness(sym) == doctest::Approx(0.0));
  // [0,0,0,10]: mean 2.5, m2 = 18.75, m3 = 93.75, m4 = 820.3125
  const std::vector<double> x{0, 0, 0, 10};
  CHECK(stats::skewness(x) == doctest::Approx(93.75 / std::pow(18.75, 1.5)));
  CHECK(stats::kurtosis(x) == doctest::Approx(820.3125 / (18.75 * 18.75) - 3.0));
  const std::vector<double> flat(7, 3.25);
  CHECK(stats::skewness(flat) == 0.0);
  CHECK(stats::kurtosis(flat) == 0.0);
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> x{5, 1, 4, 2, 3};
  CHECK(stats::quantile(x, 0.25) == doctest::Approx(2.0));
  CHECK(stats::quantile(x, 0.5) == doctest::Approx(3.0));
  CHECK(stats::quantile(x, 0.75) == doctest::Approx(4.0));
  CHECK(stats::quantile(x, 0.0) == 1.0);
  CHECK(stats::quantile(x, 1.0) == 5.0);
  const std::vector<double> y{1, 2, 3, 4};
  CHECK(stats::quantile(y, 0.25) == doctest::Approx(1.75));
  CHECK_THROWS_AS(stats::quantile(std::vector<double>{}, 0.5), Error);
}

TEST_CASE("diff") {
  const std::vector<double> x{800, 810, 790};
  CHECK(stats::diff(x) == std::vector<double>{10, -20});
  CHECK(stats::diff(std::vector<double>{1}).empty());
}
