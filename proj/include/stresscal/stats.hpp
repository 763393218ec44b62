#pragma once

#include <span>
#include <vector>

// Descriptive statistics shared by the feature and transform modules.
// Standard deviations are population (divide by N) throughout.
namespace stresscal::stats {

double mean(std::span<const double> x);
double median(std::span<const double> x);
double variance(std::span<const double> x);
double stddev(std::span<const double> x);

// Standardized third central moment; 0 when the variance is 0.
double skewness(std::span<const double> x);
// Excess kurtosis (standardized fourth moment minus 3); 0 when the variance is 0.
double kurtosis(std::span<const double> x);

double min(std::span<const double> x);
double max(std::span<const double> x);

// Quantile by linear interpolation between order statistics (type 7).
double quantile(std::span<const double> x, double p);
double quantile_sorted(std::span<const double> sorted, double p);

// x[i+1] - x[i].
std::vector<double> diff(std::span<const double> x);

}  // namespace stresscal::stats
