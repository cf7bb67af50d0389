#pragma once

#include <span>
#include <vector>

namespace interseg {

double mean(std::span<const double> v);

/// Population variance (divides by n).
double variance(std::span<const double> v);

/// Median; averages the two middle values for even sizes. Empty input throws.
double median(std::vector<double> v);

/// Pearson correlation. Throws std::invalid_argument when either side has
/// zero variance or sizes differ / are < 2.
double pearson(std::span<const double> x, std::span<const double> y);

/// Average ranks (0-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

double spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value for a correlation coefficient r over n pairs, using the
/// t approximation t = r sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom.
double correlation_p_value(double r, std::size_t n);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double stat, double dof);

}  // namespace interseg
