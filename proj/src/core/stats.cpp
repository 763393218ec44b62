#include "stresscal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stresscal/error.hpp"

namespace stresscal::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

double median(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return quantile(x, 0.5);
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

namespace {

// Standardized central moment of order `k`; 0 for zero variance.
double standardized_moment(std::span<const double> x, int k) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double m2 = 0.0, mk = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    mk += std::pow(d, k);
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  mk /= n;
  // Relative guard: rounding noise on a constant series must not read as spread.
  const double scale = std::max(1.0, m * m);
  if (m2 <= 1e-28 * scale) return std::numeric_limits<double>::quiet_NaN();
  return mk / std::pow(m2, 0.5 * k);
}

}  // namespace

double skewness(std::span<const double> x) {
  const double s = standardized_moment(x, 3);
  return std::isnan(s) ? 0.0 : s;
}

double kurtosis(std::span<const double> x) {
  const double s = standardized_moment(x, 4);
  return std::isnan(s) ? 0.0 : s - 3.0;
}

double min(std::span<const double> x) {
  return x.empty() ? 0.0 : *std::min_element(x.begin(), x.end());
}

double max(std::span<const double> x) {
  return x.empty() ? 0.0 : *std::max_element(x.begin(), x.end());
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorKind::empty_input, "quantile of an empty sample");
  p = std::clamp(p, 0.0, 1.0);
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> x, double p) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, p);
}

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d;
  if (x.size() < 2) return d;
  d.reserve(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
  return d;
}

}  // namespace stresscal::stats
