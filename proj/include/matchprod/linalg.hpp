#pragma once

#include <vector>

#include <Eigen/Dense>

namespace matchprod {

struct OlsResult {
  Eigen::VectorXd coef;       // zero for dropped columns
  Eigen::VectorXd se;         // classical standard errors; NaN for dropped columns
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  double ssr = 0.0;
  double r2 = 0.0;            // centered
  int rank = 0;
  std::vector<int> dropped;   // columns removed by the pivoted QR
};

// Least squares through column-pivoted QR. Collinear columns are detected
// with a relative threshold and dropped; throws RankDeficient when
// `allow_rank_deficient` is false and any column had to be dropped.
OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool allow_rank_deficient = true);

double mean(const std::vector<double>& v);
// Population variance and covariance (divide by n).
double variance(const std::vector<double>& v);
double covariance(const std::vector<double>& a, const std::vector<double>& b);

// Linear interpolation between order statistics, q in [0,1].
double quantile(std::vector<double> v, double q);

}  // namespace matchprod
