#include "matchprod/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "matchprod/error.hpp"

namespace matchprod {

OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool allow_rank_deficient) {
  if (x.rows() != y.size()) throw Error(ErrorKind::InvalidParam, "design and response sizes differ");
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorKind::TooFewObservations, "empty regression");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  OlsResult out;
  out.rank = rank;
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> kept;
  for (int i = 0; i < x.cols(); ++i) {
    if (i < rank) {
      kept.push_back(perm[i]);
    } else {
      out.dropped.push_back(perm[i]);
    }
  }
  std::sort(kept.begin(), kept.end());
  std::sort(out.dropped.begin(), out.dropped.end());
  if (!out.dropped.empty() && !allow_rank_deficient) {
    throw Error(ErrorKind::RankDeficient, "regressors are collinear");
  }

  // Refactor only when columns were dropped.
  Eigen::MatrixXd xk;
  std::optional<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>> reduced;
  if (!out.dropped.empty()) {
    xk.resize(x.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) xk.col(static_cast<Eigen::Index>(i)) = x.col(kept[i]);
    reduced.emplace(xk);
  }
  const Eigen::MatrixXd& xr = reduced ? xk : x;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qk = reduced ? *reduced : qr;
  const Eigen::VectorXd bk = qk.solve(y);

  out.coef = Eigen::VectorXd::Zero(x.cols());
  out.se = Eigen::VectorXd::Constant(x.cols(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < kept.size(); ++i) out.coef[kept[i]] = bk[static_cast<Eigen::Index>(i)];
  out.fitted = xr * bk;
  out.residuals = y - out.fitted;
  out.ssr = out.residuals.squaredNorm();
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  out.r2 = sst > 0.0 ? 1.0 - out.ssr / sst : 1.0;

  const Eigen::Index dof = x.rows() - static_cast<Eigen::Index>(kept.size());
  if (dof > 0) {
    const double s2 = out.ssr / static_cast<double>(dof);
    const Eigen::Index kc = xr.cols();
    const Eigen::MatrixXd r = qk.matrixR().topLeftCorner(kc, kc).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(kc, kc));
    // (X'X)^{-1} = P R^{-1} R^{-T} P'
    const Eigen::MatrixXd cov_perm = rinv * rinv.transpose();
    const auto& pk = qk.colsPermutation().indices();
    for (Eigen::Index i = 0; i < kc; ++i) {
      out.se[kept[static_cast<std::size_t>(pk[i])]] = std::sqrt(s2 * cov_perm(i, i));
    }
  }
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) { return covariance(v, v); }

double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::InvalidParam, "covariance of unequal lengths");
  if (a.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double ma = mean(a);
  const double mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size());
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] + w * (v[hi] - v[lo]);
}

}  // namespace matchprod
