#include "matchprod/prodfn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/tools/minima.hpp>

#include "matchprod/error.hpp"
#include "matchprod/linalg.hpp"
#include "matchprod/rng.hpp"

namespace matchprod {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRhoBound = 0.995;

double safe_log(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::DomainError, std::string("non-positive ") + what + " in firm panel");
  }
  return std::log(v);
}

PfRow base_row(const FirmYear& fy) {
  PfRow r;
  r.firm_id = fy.firm_id;
  r.sector = fy.sector;
  r.year = fy.year;
  r.ln_f = safe_log(fy.f, "value added");
  r.ln_l = safe_log(fy.l, "labor");
  r.ln_k = safe_log(fy.k, "capital");
  r.ln_m = safe_log(fy.m, "materials");
  r.ln_pg = safe_log(fy.p_g, "output price");
  r.ln_pm = safe_log(fy.p_m, "materials price");
  return r;
}

// Regressors of the production function, intercept first.
int n_regressors(ProductionForm form) { return form == ProductionForm::Ces ? 4 : 5; }

void fill_regressors(const PfRow& r, ProductionForm form, double* out) {
  out[0] = 1.0;
  if (form == ProductionForm::Ces) {
    out[1] = r.ln_y;
    out[2] = r.ln_l;
    out[3] = r.ln_k;
  } else {
    out[1] = r.ln_x;
    out[2] = r.ln_y;
    out[3] = r.ln_l;
    out[4] = r.ln_k;
  }
}

// Sample moments of the stage-2 system. All pieces of g and its Jacobian are
// linear in these small matrices:
//   g(b, rho) = zy - zxt b - rho (zphi - zxl b)
struct MomentData {
  Eigen::MatrixXd z;   // N x L
  Eigen::MatrixXd xt;  // N x K
  Eigen::MatrixXd xl;  // N x K
  Eigen::VectorXd yt;
  Eigen::VectorXd phil;
  Eigen::MatrixXd zxt, zxl;
  Eigen::VectorXd zy, zphi;
  Eigen::MatrixXd w;   // weighting matrix
  Eigen::MatrixXd w_half;  // w = w_half * w_half'
};

std::vector<std::pair<std::size_t, std::size_t>> consecutive_pairs(const PfPanel& panel) {
  std::vector<std::size_t> order(panel.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (panel[a].firm_id != panel[b].firm_id) return panel[a].firm_id < panel[b].firm_id;
    return panel[a].year < panel[b].year;
  });
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const PfRow& prev = panel[order[i - 1]];
    const PfRow& cur = panel[order[i]];
    if (prev.firm_id == cur.firm_id && cur.year == prev.year + 1) pairs.emplace_back(order[i - 1], order[i]);
  }
  return pairs;
}

MomentData build_moments(const PfPanel& panel, const std::vector<double>& phi, const PfOptions& opt) {
  if (phi.size() != panel.size()) throw Error(ErrorKind::InvalidParam, "stage-1 values do not align with the panel");
  const auto pairs = consecutive_pairs(panel);
  // Year dummies for every pair year after the first.
  std::map<int, int> dummy_of;
  if (opt.year_effects) {
    std::set<int> years;
    for (const auto& pr : pairs) years.insert(panel[pr.second].year);
    int next = 0;
    for (auto it = years.begin(); it != years.end(); ++it) {
      if (it != years.begin()) dummy_of[*it] = next++;
    }
  }
  const int n_dummies = static_cast<int>(dummy_of.size());
  const int k_base = n_regressors(opt.form);
  const int k = k_base + n_dummies;
  int l = 6 + n_dummies;
  if (opt.form == ProductionForm::CobbDouglas) ++l;
  if (opt.price_instruments) l += 2;
  const auto n = static_cast<Eigen::Index>(pairs.size());
  if (n < 2 * (l + 1)) {
    throw Error(ErrorKind::InsufficientPanel,
                "only " + std::to_string(pairs.size()) + " consecutive firm-year pairs");
  }
  MomentData d;
  d.z.resize(n, l);
  d.xt.resize(n, k);
  d.xl.resize(n, k);
  d.yt.resize(n);
  d.phil.resize(n);
  std::vector<double> buf(static_cast<std::size_t>(k_base));
  for (Eigen::Index i = 0; i < n; ++i) {
    const PfRow& prev = panel[pairs[static_cast<std::size_t>(i)].first];
    const PfRow& cur = panel[pairs[static_cast<std::size_t>(i)].second];
    fill_regressors(cur, opt.form, buf.data());
    for (int c = 0; c < k_base; ++c) d.xt(i, c) = buf[static_cast<std::size_t>(c)];
    fill_regressors(prev, opt.form, buf.data());
    for (int c = 0; c < k_base; ++c) d.xl(i, c) = buf[static_cast<std::size_t>(c)];
    for (int c = k_base; c < k; ++c) d.xt(i, c) = d.xl(i, c) = 0.0;
    d.yt[i] = cur.ln_f;
    d.phil[i] = phi[pairs[static_cast<std::size_t>(i)].first];
    Eigen::Index c = 0;
    d.z(i, c++) = 1.0;
    d.z(i, c++) = d.phil[i];
    d.z(i, c++) = prev.ln_m;
    d.z(i, c++) = prev.ln_y;
    d.z(i, c++) = prev.ln_l;
    d.z(i, c++) = cur.ln_k;
    if (opt.form == ProductionForm::CobbDouglas) d.z(i, c++) = prev.ln_x;
    if (opt.price_instruments) {
      d.z(i, c++) = prev.ln_pg;
      d.z(i, c++) = prev.ln_pm;
    }
    for (int c2 = 0; c2 < n_dummies; ++c2) d.z(i, c + c2) = 0.0;
    auto di = dummy_of.find(cur.year);
    if (di != dummy_of.end()) {
      d.xt(i, k_base + di->second) = 1.0;
      d.z(i, c + di->second) = 1.0;
    }
  }
  // Standardized instruments make the identity-weighted objective invariant
  // to shifts and rescaling of any instrument.
  for (Eigen::Index c = 1; c < l; ++c) {
    const double m = d.z.col(c).mean();
    d.z.col(c).array() -= m;
    const double sd = std::sqrt(d.z.col(c).squaredNorm() / static_cast<double>(n));
    if (sd > 0.0) d.z.col(c) /= sd;
  }
  const double inv = 1.0 / static_cast<double>(n);
  d.zxt = d.z.transpose() * d.xt * inv;
  d.zxl = d.z.transpose() * d.xl * inv;
  d.zy = d.z.transpose() * d.yt * inv;
  d.zphi = d.z.transpose() * d.phil * inv;
  d.w = Eigen::MatrixXd::Identity(l, l);
  d.w_half = d.w;
  return d;
}

struct Point {
  Eigen::VectorXd b;
  double rho = 0.0;
};

Eigen::VectorXd moments(const MomentData& d, const Eigen::VectorXd& b, double rho) {
  return d.zy - d.zxt * b - rho * (d.zphi - d.zxl * b);
}

double objective(const MomentData& d, const Eigen::VectorXd& b, double rho) {
  const Eigen::VectorXd g = moments(d, b, rho);
  return g.dot(d.w * g);
}

// Jacobian of g with respect to (b, rho).
Eigen::MatrixXd jacobian(const MomentData& d, const Eigen::VectorXd& b, double rho) {
  const Eigen::Index k = b.size();
  Eigen::MatrixXd j(d.zy.size(), k + 1);
  j.leftCols(k) = -(d.zxt - rho * d.zxl);
  j.col(k) = -(d.zphi - d.zxl * b);
  return j;
}

// For fixed rho the moments are linear in b: weighted least squares.
Eigen::VectorXd profile_b(const MomentData& d, double rho) {
  const Eigen::MatrixXd a = d.zxt - rho * d.zxl;
  const Eigen::VectorXd c = d.zy - rho * d.zphi;
  const Eigen::MatrixXd wa = d.w_half.transpose() * a;
  const Eigen::VectorXd wc = d.w_half.transpose() * c;
  return wa.colPivHouseholderQr().solve(wc);
}

double profile_objective(const MomentData& d, double rho) { return objective(d, profile_b(d, rho), rho); }

Point profile_minimum(const MomentData& d) {
  double best_rho = 0.0;
  double best = std::numeric_limits<double>::infinity();
  const int steps = 199;
  for (int i = 0; i <= steps; ++i) {
    const double rho = -0.99 + 1.98 * i / steps;
    const double q = profile_objective(d, rho);
    if (q < best) {
      best = q;
      best_rho = rho;
    }
  }
  const double step = 1.98 / steps;
  const auto res = boost::math::tools::brent_find_minima(
      [&](double rho) { return profile_objective(d, rho); }, std::max(-kRhoBound, best_rho - step),
      std::min(kRhoBound, best_rho + step), std::numeric_limits<double>::digits);
  Point p;
  p.rho = res.second <= best ? res.first : best_rho;
  p.b = profile_b(d, p.rho);
  return p;
}

struct LmOutcome {
  Point point;
  double q = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

LmOutcome levenberg_marquardt(const MomentData& d, Point start, const PfOptions& opt) {
  const Eigen::Index k = start.b.size();
  auto pack = [&](const Point& p) {
    Eigen::VectorXd v(k + 1);
    v.head(k) = p.b;
    v[k] = p.rho;
    return v;
  };
  Eigen::VectorXd v = pack(start);
  double q = objective(d, v.head(k), v[k]);
  double mu = 1e-3;
  LmOutcome out;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd g = moments(d, v.head(k), v[k]);
    const Eigen::MatrixXd j = jacobian(d, v.head(k), v[k]);
    const Eigen::MatrixXd jw = j.transpose() * d.w;
    const Eigen::VectorXd grad = 2.0 * jw * g;
    out.gradient_norm = grad.norm();
    if (out.gradient_norm < opt.gradient_tolerance) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd h = jw * j;
    bool improved = false;
    while (mu < 1e16) {
      Eigen::MatrixXd damped = h;
      damped.diagonal() += mu * h.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-jw * g);
      Eigen::VectorXd trial = v + step;
      trial[k] = std::clamp(trial[k], -kRhoBound, kRhoBound);
      const double qt = objective(d, trial.head(k), trial[k]);
      if (std::isfinite(qt) && qt < q) {
        const double change = (trial - v).norm();
        v = trial;
        q = qt;
        mu = std::max(mu / 3.0, 1e-12);
        improved = true;
        if (change < 1e-15 * (1.0 + v.norm())) it = opt.max_iterations;
        break;
      }
      mu *= 4.0;
    }
    if (!improved) break;
  }
  // A stalled search at a stationary point counts as converged.
  if (!out.converged) {
    const Eigen::VectorXd g = moments(d, v.head(k), v[k]);
    const Eigen::VectorXd grad = 2.0 * jacobian(d, v.head(k), v[k]).transpose() * d.w * g;
    out.gradient_norm = grad.norm();
    out.converged = out.gradient_norm < opt.gradient_tolerance;
  }
  out.point.b = v.head(k);
  out.point.rho = v[k];
  out.q = q;
  return out;
}

Point ols_start(const MomentData& d) {
  const OlsResult fit = ols(d.xt, d.yt, true);
  Point p;
  p.b = fit.coef;
  // AR(1) slope of the implied productivity.
  const Eigen::VectorXd om_t = d.yt - d.xt * p.b;
  const Eigen::VectorXd om_l = d.phil - d.xl * p.b;
  Eigen::MatrixXd x(om_l.size(), 2);
  x.col(0).setOnes();
  x.col(1) = om_l;
  const OlsResult ar = ols(x, om_t, true);
  p.rho = std::clamp(ar.coef[1], -0.95, 0.95);
  return p;
}

void set_two_step_weights(MomentData& d, const Point& p) {
  const Eigen::VectorXd e = d.yt - d.xt * p.b - p.rho * (d.phil - d.xl * p.b);
  const Eigen::MatrixXd ze = d.z.array().colwise() * e.array();
  const Eigen::MatrixXd s = ze.transpose() * ze / static_cast<double>(e.size());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  d.w = ldlt.solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
  Eigen::LLT<Eigen::MatrixXd> llt(d.w);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "moment covariance is singular");
  d.w_half = llt.matrixL();
}

LmOutcome minimize(const MomentData& d, const PfOptions& opt) {
  std::vector<Point> starts;
  const Point base = ols_start(d);
  starts.push_back(base);
  RandomStream rs(opt.seed);
  for (int s = 0; s < opt.perturbed_starts; ++s) {
    Point p = base;
    for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b[i] += rs.normal(0.0, opt.start_scale);
    p.rho = std::clamp(p.rho + rs.normal(0.0, opt.start_scale), -0.95, 0.95);
    starts.push_back(p);
  }
  starts.push_back(profile_minimum(d));
  LmOutcome best;
  best.q = std::numeric_limits<double>::infinity();
  for (const Point& s : starts) {
    const LmOutcome o = levenberg_marquardt(d, s, opt);
    if (o.q < best.q) best = o;
  }
  return best;
}

std::vector<std::vector<int>> monomials(int n_vars, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(n_vars), 0);
  // Exponent vectors in graded order, intercept first.
  for (int total = 0; total <= degree; ++total) {
    std::function<void(int, int)> rec = [&](int var, int left) {
      if (var == n_vars - 1) {
        cur[static_cast<std::size_t>(var)] = left;
        out.push_back(cur);
        return;
      }
      for (int e = left; e >= 0; --e) {
        cur[static_cast<std::size_t>(var)] = e;
        rec(var + 1, left - e);
      }
    };
    rec(0, total);
  }
  return out;
}

}  // namespace

PfPanel pf_panel_from_truth(const FirmPanel& firms) {
  PfPanel out;
  out.reserve(firms.size());
  for (const FirmYear& fy : firms) {
    PfRow r = base_row(fy);
    r.ln_y = safe_log(fy.y, "top-worker type");
    r.ln_x = safe_log(fy.x, "non-top type");
    out.push_back(r);
  }
  return out;
}

PfPanel pf_panel_from_quality(const FirmPanel& firms, const std::vector<FirmQuality>& quality) {
  std::map<std::pair<std::int32_t, std::int32_t>, const FirmQuality*> q;
  for (const FirmQuality& fq : quality) q[{fq.firm_id, fq.year}] = &fq;
  PfPanel out;
  for (const FirmYear& fy : firms) {
    auto it = q.find({fy.firm_id, fy.year});
    if (it == q.end()) continue;
    PfRow r = base_row(fy);
    r.ln_y = it->second->ln_y;
    r.ln_x = it->second->ln_x;
    out.push_back(r);
  }
  if (out.empty()) throw Error(ErrorKind::KeyMismatch, "no firm-year matches the quality table");
  return out;
}

Stage1Result stage1(const PfPanel& panel, int degree, ProductionForm form) {
  if (degree < 1) throw Error(ErrorKind::InvalidParam, "stage-1 degree must be at least 1");
  if (panel.empty()) throw Error(ErrorKind::TooFewObservations, "empty panel");
  const std::size_t n = panel.size();
  std::vector<std::vector<double>> vars;
  auto add_var = [&](auto getter) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = getter(panel[i]);
    const double m = mean(v);
    const double sd = std::sqrt(variance(v));
    if (!(sd > 1e-12 * (1.0 + std::abs(m)))) return;
    for (double& a : v) a = (a - m) / sd;
    vars.push_back(std::move(v));
  };
  add_var([](const PfRow& r) { return r.ln_y; });
  add_var([](const PfRow& r) { return r.ln_l; });
  add_var([](const PfRow& r) { return r.ln_k; });
  add_var([](const PfRow& r) { return r.ln_m; });
  add_var([](const PfRow& r) { return r.ln_pg; });
  add_var([](const PfRow& r) { return r.ln_pm; });
  if (form == ProductionForm::CobbDouglas) add_var([](const PfRow& r) { return r.ln_x; });

  const auto terms = monomials(static_cast<int>(vars.size()), degree);
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(terms.size()));
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    y[i] = panel[si].ln_f;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      double v = 1.0;
      for (std::size_t j = 0; j < vars.size(); ++j) {
        for (int e = 0; e < terms[t][j]; ++e) v *= vars[j][si];
      }
      x(i, static_cast<Eigen::Index>(t)) = v;
    }
  }
  if (rows <= x.cols()) throw Error(ErrorKind::TooFewObservations, "stage 1 has more terms than observations");
  const OlsResult fit = ols(x, y, true);
  Stage1Result out;
  out.phi.assign(fit.fitted.data(), fit.fitted.data() + fit.fitted.size());
  out.residuals.assign(fit.residuals.data(), fit.residuals.data() + fit.residuals.size());
  out.r2 = fit.r2;
  out.n_terms = static_cast<int>(terms.size());
  out.dropped = fit.dropped;
  return out;
}

std::vector<std::string> pf_coefficient_names(ProductionForm form) {
  if (form == ProductionForm::Ces) return {"beta_0", "theta", "alpha_l", "alpha_k", "rho"};
  return {"beta_0", "beta_x", "beta_y", "alpha_l", "alpha_k", "rho"};
}

double PfEstimate::get(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return coef.at(i);
  }
  throw Error(ErrorKind::MissingCoefficients, "no coefficient named " + name);
}

namespace {

struct Stage2Fit {
  PfEstimate est;
  Point point;
};

// Multistart search, or a single local search from `start` when given.
Stage2Fit fit_stage2(const PfPanel& panel, const Stage1Result& s1, const PfOptions& opt, const Point* start) {
  MomentData d = build_moments(panel, s1.phi, opt);
  auto search = [&]() { return start ? levenberg_marquardt(d, *start, opt) : minimize(d, opt); };
  LmOutcome best = search();
  if (opt.weighting == GmmWeighting::TwoStep) {
    set_two_step_weights(d, best.point);
    best = start ? levenberg_marquardt(d, best.point, opt) : minimize(d, opt);
  }
  Stage2Fit fit;
  PfEstimate& est = fit.est;
  est.sector = panel.front().sector;
  est.form = opt.form;
  est.names = pf_coefficient_names(opt.form);
  est.coef.assign(best.point.b.data(), best.point.b.data() + n_regressors(opt.form));
  est.coef.push_back(best.point.rho);
  est.se.assign(est.coef.size(), kNaN);
  est.objective = best.q;
  est.converged = best.converged;
  est.n_obs = panel.size();
  est.n_pairs = static_cast<std::size_t>(d.yt.size());
  est.stage1 = s1;
  fit.point = best.point;
  return fit;
}

void require_single_sector(const PfPanel& panel) {
  if (panel.empty()) throw Error(ErrorKind::InsufficientPanel, "empty panel");
  for (const PfRow& r : panel) {
    if (r.sector != panel.front().sector) {
      throw Error(ErrorKind::InvalidParam, "estimate_production expects a single sector");
    }
  }
}

Stage1Result checked_stage1(const PfPanel& panel, const PfOptions& opt) {
  try {
    return stage1(panel, opt.degree, opt.form);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TooFewObservations) throw;
    throw Error(ErrorKind::InsufficientPanel, e.what());
  }
}

}  // namespace

PfEstimate stage2(const PfPanel& panel, const Stage1Result& s1, const PfOptions& opt) {
  return fit_stage2(panel, s1, opt, nullptr).est;
}

double stage2_objective(const PfPanel& panel, const std::vector<double>& phi,
                        const std::vector<double>& coef, const PfOptions& opt) {
  const MomentData d = build_moments(panel, phi, opt);
  const auto k = static_cast<Eigen::Index>(n_regressors(opt.form));
  if (static_cast<Eigen::Index>(coef.size()) != k + 1) {
    throw Error(ErrorKind::InvalidParam, "coefficient vector has the wrong length");
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d.xt.cols());
  b.head(k) = Eigen::Map<const Eigen::VectorXd>(coef.data(), k);
  const double rho = coef.back();
  if (d.xt.cols() > k) {
    // Year intercepts at their minimizing values given the other coefficients.
    const Eigen::MatrixXd a = d.w_half.transpose() * d.zxt.rightCols(d.xt.cols() - k);
    const Eigen::VectorXd r = d.w_half.transpose() * moments(d, b, rho);
    b.tail(d.xt.cols() - k) = a.colPivHouseholderQr().solve(r);
  }
  return objective(d, b, rho);
}

PfEstimate estimate_production(const PfPanel& panel, const PfOptions& opt) {
  require_single_sector(panel);
  return stage2(panel, checked_stage1(panel, opt), opt);
}

std::vector<PfEstimate> estimate_by_sector(const PfPanel& panel, const PfOptions& opt) {
  std::map<std::int32_t, PfPanel> parts;
  for (const PfRow& r : panel) parts[r.sector].push_back(r);
  std::vector<PfEstimate> out;
  for (const auto& [sector, rows] : parts) out.push_back(estimate_production(rows, opt));
  return out;
}

std::vector<double> assemble_phi(const PfPanel& panel, const std::vector<PfEstimate>& estimates) {
  std::map<std::int32_t, std::pair<const PfEstimate*, std::size_t>> cursor;
  for (const PfEstimate& e : estimates) cursor[e.sector] = {&e, 0};
  std::vector<double> phi;
  phi.reserve(panel.size());
  for (const PfRow& r : panel) {
    auto it = cursor.find(r.sector);
    if (it == cursor.end()) {
      throw Error(ErrorKind::MissingCoefficients, "no estimate for sector " + std::to_string(r.sector));
    }
    auto& [est, pos] = it->second;
    if (pos >= est->stage1.phi.size()) throw Error(ErrorKind::KeyMismatch, "stage-1 values do not cover the panel");
    phi.push_back(est->stage1.phi[pos++]);
  }
  return phi;
}

PfEstimate estimate_cd(const PfPanel& panel, PfOptions opt) {
  opt.form = ProductionForm::CobbDouglas;
  return estimate_production(panel, opt);
}

BootstrapResult bootstrap_se(const PfPanel& panel, int replications, const PfOptions& opt,
                             std::uint64_t seed) {
  if (replications < 2) throw Error(ErrorKind::InvalidParam, "bootstrap needs at least two replications");
  std::map<std::int32_t, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < panel.size(); ++i) rows_of[panel[i].firm_id].push_back(i);
  std::vector<std::int32_t> firms;
  for (const auto& [id, rows] : rows_of) firms.push_back(id);
  if (firms.empty()) throw Error(ErrorKind::InsufficientPanel, "empty panel");

  // Replicates search locally from the full-sample estimate so that they
  // track the same root of the moment conditions.
  require_single_sector(panel);
  const Point centre = fit_stage2(panel, checked_stage1(panel, opt), opt, nullptr).point;

  BootstrapResult out;
  for (int b = 0; b < replications; ++b) {
    RandomStream rs(derive_seed(seed, {static_cast<std::uint64_t>(b)}));
    PfPanel sample;
    sample.reserve(panel.size());
    for (std::size_t draw = 0; draw < firms.size(); ++draw) {
      const std::int32_t src = firms[rs.below(firms.size())];
      for (std::size_t i : rows_of[src]) {
        PfRow r = panel[i];
        r.firm_id = static_cast<std::int32_t>(draw);  // duplicates stay distinct firms
        sample.push_back(r);
      }
    }
    try {
      const PfEstimate est = fit_stage2(sample, checked_stage1(sample, opt), opt, &centre).est;
      bool finite = true;
      for (double c : est.coef) finite = finite && std::isfinite(c);
      if (!finite) throw Error(ErrorKind::NoConvergence, "non-finite replicate");
      out.replicates.push_back(est.coef);
    } catch (const Error&) {
      ++out.failures;
    }
  }
  if (static_cast<double>(out.replicates.size()) < 0.8 * replications || out.replicates.size() < 2) {
    throw Error(ErrorKind::BootstrapFailed, std::to_string(out.failures) + " of " +
                                               std::to_string(replications) + " replicates failed");
  }
  const std::size_t k = out.replicates.front().size();
  out.se.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> v;
    for (const auto& rep : out.replicates) v.push_back(rep[c]);
    const double m = mean(v);
    double ss = 0.0;
    for (double a : v) ss += (a - m) * (a - m);
    out.se[c] = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

std::vector<TfpRow> recover_tfp(const PfPanel& panel, const std::vector<double>& phi,
                                const std::vector<PfEstimate>& estimates) {
  if (phi.size() != panel.size()) throw Error(ErrorKind::InvalidParam, "stage-1 values do not align with the panel");
  std::map<std::int32_t, const PfEstimate*> by_sector;
  for (const PfEstimate& e : estimates) by_sector[e.sector] = &e;
  std::vector<TfpRow> out;
  out.reserve(panel.size());
  double buf[5];
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const PfRow& r = panel[i];
    auto it = by_sector.find(r.sector);
    if (it == by_sector.end()) {
      throw Error(ErrorKind::MissingCoefficients, "no estimate for sector " + std::to_string(r.sector));
    }
    const PfEstimate& e = *it->second;
    const int k = n_regressors(e.form);
    if (static_cast<int>(e.coef.size()) != k + 1) throw Error(ErrorKind::MissingCoefficients, "incomplete estimate");
    fill_regressors(r, e.form, buf);
    double fit = 0.0;
    for (int c = 0; c < k; ++c) fit += e.coef[static_cast<std::size_t>(c)] * buf[c];
    out.push_back({r.firm_id, r.sector, r.year, phi[i] - fit});
  }
  return out;
}

}  // namespace matchprod
