#include "matchprod/paretofit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "matchprod/error.hpp"
#include "matchprod/linalg.hpp"

namespace matchprod {

namespace {

constexpr std::size_t kMinObservations = 10;

// Descending ranks with ties in input order.
std::vector<double> descending_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<double>(i + 1);
  return rank;
}

void check_positive(std::span<const double> sample) {
  for (double v : sample) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::DomainError, "Pareto fit needs positive values");
  }
}

}  // namespace

TailFit rank_regression(std::span<const double> sample, double threshold) {
  check_positive(sample);
  std::vector<double> logs;
  for (double v : sample) {
    const double lv = std::log(v);
    if (lv >= threshold) logs.push_back(lv);
  }
  if (logs.size() < kMinObservations) {
    throw Error(ErrorKind::TooFewObservations, "rank regression needs at least 10 values");
  }
  const std::vector<double> rank = descending_ranks(logs);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(logs.size()), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(logs.size()));
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    x(r, 1) = logs[i];
    y[r] = std::log(rank[i] - 0.5);
  }
  const OlsResult fit = ols(x, y, false);
  TailFit out;
  out.lambda_hat = -fit.coef[1];
  out.standard_error = fit.se[1];
  out.r_squared = fit.r2;
  out.threshold = threshold;
  out.n_used = logs.size();
  return out;
}

TailFit rank_regression_with_years(std::span<const double> sample, std::span<const int> years,
                                   double threshold) {
  if (sample.size() != years.size()) throw Error(ErrorKind::InvalidParam, "values and years differ in length");
  check_positive(sample);
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (std::log(sample[i]) >= threshold) by_year[years[i]].push_back(i);
  }
  std::size_t n = 0;
  for (const auto& [yr, rows] : by_year) n += rows.size();
  if (n < kMinObservations) throw Error(ErrorKind::TooFewObservations, "rank regression needs at least 10 values");
  const Eigen::Index k = 2 + static_cast<Eigen::Index>(by_year.size()) - 1;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), k);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::Index r = 0;
  Eigen::Index dummy = 1;
  for (const auto& [yr, rows] : by_year) {
    std::vector<double> logs;
    for (std::size_t i : rows) logs.push_back(std::log(sample[i]));
    const std::vector<double> rank = descending_ranks(logs);
    for (std::size_t i = 0; i < logs.size(); ++i, ++r) {
      x(r, 0) = 1.0;
      x(r, 1) = logs[i];
      if (dummy > 1) x(r, dummy) = 1.0;
      y[r] = std::log(rank[i] - 0.5);
    }
    ++dummy;
  }
  const OlsResult fit = ols(x, y, false);
  TailFit out;
  out.lambda_hat = -fit.coef[1];
  out.standard_error = fit.se[1];
  out.r_squared = fit.r2;
  out.threshold = threshold;
  out.n_used = n;
  return out;
}

}  // namespace matchprod
