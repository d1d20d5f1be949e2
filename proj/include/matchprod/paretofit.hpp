#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace matchprod {

struct TailFit {
  double lambda_hat = 0.0;
  double standard_error = 0.0;
  double r_squared = 0.0;
  double threshold = -std::numeric_limits<double>::infinity();  // on ln(value)
  std::size_t n_used = 0;
};

// ln(rank - 0.5) = c - lambda ln(value), ranks descending (largest value is
// rank 1) among observations with ln(value) >= threshold. Ties keep input
// order. Throws TooFewObservations below 10 usable values and DomainError on
// non-positive values.
TailFit rank_regression(std::span<const double> sample,
                        double threshold = -std::numeric_limits<double>::infinity());

// Pooled variant with year dummies: ranks are computed within each year and
// the regression adds one dummy per year after the first.
TailFit rank_regression_with_years(std::span<const double> sample, std::span<const int> years,
                                   double threshold = -std::numeric_limits<double>::infinity());

}  // namespace matchprod
