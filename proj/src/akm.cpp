#include "matchprod/akm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "matchprod/error.hpp"
#include "matchprod/kernels.hpp"

namespace matchprod {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

// Dense indices for the workers and firms present in a match table.
struct Indexing {
  std::vector<std::int64_t> worker_ids;
  std::vector<std::int32_t> firm_ids;
  std::unordered_map<std::int64_t, std::size_t> worker_index;
  std::unordered_map<std::int32_t, std::size_t> firm_index;
  std::vector<std::int32_t> wi;  // per row
  std::vector<std::int32_t> fi;  // per row
};

Indexing index_matches(const MatchTable& matches) {
  Indexing ix;
  for (const MatchRecord& m : matches) {
    ix.worker_ids.push_back(m.worker_id);
    ix.firm_ids.push_back(m.firm_id);
  }
  std::sort(ix.worker_ids.begin(), ix.worker_ids.end());
  ix.worker_ids.erase(std::unique(ix.worker_ids.begin(), ix.worker_ids.end()), ix.worker_ids.end());
  std::sort(ix.firm_ids.begin(), ix.firm_ids.end());
  ix.firm_ids.erase(std::unique(ix.firm_ids.begin(), ix.firm_ids.end()), ix.firm_ids.end());
  ix.worker_index.reserve(ix.worker_ids.size());
  for (std::size_t i = 0; i < ix.worker_ids.size(); ++i) ix.worker_index[ix.worker_ids[i]] = i;
  for (std::size_t i = 0; i < ix.firm_ids.size(); ++i) ix.firm_index[ix.firm_ids[i]] = i;
  ix.wi.reserve(matches.size());
  ix.fi.reserve(matches.size());
  for (const MatchRecord& m : matches) {
    ix.wi.push_back(static_cast<std::int32_t>(ix.worker_index.at(m.worker_id)));
    ix.fi.push_back(static_cast<std::int32_t>(ix.firm_index.at(m.firm_id)));
  }
  return ix;
}

// Component label per firm, numbered by the smallest firm id they contain.
std::vector<int> firm_components(const Indexing& ix, int* n_components) {
  const std::size_t nw = ix.worker_ids.size();
  DisjointSets ds(nw + ix.firm_ids.size());
  for (std::size_t r = 0; r < ix.wi.size(); ++r) {
    ds.unite(static_cast<std::size_t>(ix.wi[r]), nw + static_cast<std::size_t>(ix.fi[r]));
  }
  std::vector<int> comp(ix.firm_ids.size(), -1);
  std::unordered_map<std::size_t, int> label;
  for (std::size_t f = 0; f < ix.firm_ids.size(); ++f) {
    const std::size_t root = ds.find(nw + f);
    auto it = label.find(root);
    if (it == label.end()) it = label.emplace(root, static_cast<int>(label.size())).first;
    comp[f] = it->second;
  }
  *n_components = static_cast<int>(label.size());
  return comp;
}

// Rows grouped by a dense key, for segment sums in the transposed product.
struct Grouping {
  std::vector<std::int32_t> perm;
  std::vector<std::size_t> offsets;  // size n_groups + 1
};

Grouping group_rows(const std::vector<std::int32_t>& key, std::size_t n_groups) {
  Grouping g;
  g.offsets.assign(n_groups + 1, 0);
  for (std::int32_t k : key) g.offsets[static_cast<std::size_t>(k) + 1] += 1;
  for (std::size_t i = 0; i < n_groups; ++i) g.offsets[i + 1] += g.offsets[i];
  g.perm.resize(key.size());
  std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t r = 0; r < key.size(); ++r) {
    g.perm[cursor[static_cast<std::size_t>(key[r])]++] = static_cast<std::int32_t>(r);
  }
  return g;
}

// Sparse design [worker | firm | age-sex | year bin] applied matrix-free.
class AkmDesign {
 public:
  AkmDesign(const Indexing& ix, std::vector<std::int32_t> bins, std::size_t n_bins,
            std::array<std::vector<double>, kAgeSexTerms> x)
      : wi_(ix.wi), fi_(ix.fi), bi_(std::move(bins)), x_(std::move(x)),
        nw_(ix.worker_ids.size()), nf_(ix.firm_ids.size()), nb_(n_bins),
        by_worker_(group_rows(wi_, nw_)), by_firm_(group_rows(fi_, nf_)),
        by_bin_(group_rows(bi_, nb_)), scratch_(wi_.size()) {}

  std::size_t rows() const { return wi_.size(); }
  std::size_t cols() const { return nw_ + nf_ + kAgeSexTerms + nb_; }
  std::size_t firm_offset() const { return nw_; }
  std::size_t beta_offset() const { return nw_ + nf_; }
  std::size_t bin_offset() const { return nw_ + nf_ + kAgeSexTerms; }

  void apply(const std::vector<double>& v, std::vector<double>& out) const {
    const std::span<const double> alpha(v.data(), nw_);
    const std::span<const double> psi(v.data() + nw_, nf_);
    const std::span<const double> gamma(v.data() + bin_offset(), nb_);
    kernels::gather_add(alpha, wi_, psi, fi_, out);
    kernels::gather_accumulate(gamma, bi_, out);
    for (int k = 0; k < kAgeSexTerms; ++k) {
      const double b = v[beta_offset() + static_cast<std::size_t>(k)];
      if (b != 0.0) kernels::axpy(b, x_[static_cast<std::size_t>(k)], out);
    }
  }

  void apply_transpose(const std::vector<double>& u, std::vector<double>& out) {
    segment_sums(u, by_worker_, out.data());
    segment_sums(u, by_firm_, out.data() + nw_);
    for (int k = 0; k < kAgeSexTerms; ++k) {
      out[beta_offset() + static_cast<std::size_t>(k)] = kernels::dot(x_[static_cast<std::size_t>(k)], u);
    }
    segment_sums(u, by_bin_, out.data() + bin_offset());
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(cols(), 0.0);
    for (std::size_t i = 0; i < nw_; ++i) d[i] = static_cast<double>(by_worker_.offsets[i + 1] - by_worker_.offsets[i]);
    for (std::size_t i = 0; i < nf_; ++i) d[nw_ + i] = static_cast<double>(by_firm_.offsets[i + 1] - by_firm_.offsets[i]);
    for (int k = 0; k < kAgeSexTerms; ++k) {
      const auto& col = x_[static_cast<std::size_t>(k)];
      d[beta_offset() + static_cast<std::size_t>(k)] = kernels::dot(col, col);
    }
    for (std::size_t i = 0; i < nb_; ++i) d[bin_offset() + i] = static_cast<double>(by_bin_.offsets[i + 1] - by_bin_.offsets[i]);
    return d;
  }

 private:
  void segment_sums(const std::vector<double>& u, const Grouping& g, double* out) {
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    kernels::gather_accumulate(u, g.perm, scratch_);
    const std::size_t n = g.offsets.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = kernels::sum(std::span<const double>(scratch_.data() + g.offsets[i],
                                                    g.offsets[i + 1] - g.offsets[i]));
    }
  }

  std::vector<std::int32_t> wi_, fi_, bi_;
  std::array<std::vector<double>, kAgeSexTerms> x_;
  std::size_t nw_, nf_, nb_;
  Grouping by_worker_, by_firm_, by_bin_;
  std::vector<double> scratch_;
};

double masked_dot(const std::vector<double>& a, const std::vector<double>& b) {
  return kernels::dot(a, b);
}

}  // namespace

ScreenResult apply_sample_screens(const MatchTable& matches, const ScreenConfig& cfg) {
  ScreenResult out;
  out.report.input = matches.size();
  std::vector<std::size_t> keep;
  keep.reserve(matches.size());
  for (std::size_t r = 0; r < matches.size(); ++r) {
    const MatchRecord& m = matches[r];
    if (m.age < cfg.min_age || m.age > cfg.max_age) {
      ++out.report.dropped_age;
    } else if (cfg.drop_owners && m.is_owner) {
      ++out.report.dropped_owner;
    } else if (!(m.earnings >= cfg.earnings_floor) || !(m.earnings > 0.0)) {
      ++out.report.dropped_floor;
    } else {
      keep.push_back(r);
    }
  }

  // Best two jobs per worker-year; the second only if close enough.
  std::vector<std::size_t> order = keep;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const MatchRecord& x = matches[a];
    const MatchRecord& y = matches[b];
    if (x.worker_id != y.worker_id) return x.worker_id < y.worker_id;
    if (x.year != y.year) return x.year < y.year;
    if (x.earnings != y.earnings) return x.earnings > y.earnings;
    if (x.firm_id != y.firm_id) return x.firm_id < y.firm_id;
    return a < b;
  });
  std::vector<std::uint8_t> drop(matches.size(), 0);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && matches[order[j]].worker_id == matches[order[i]].worker_id &&
           matches[order[j]].year == matches[order[i]].year) {
      ++j;
    }
    for (std::size_t q = i + 2; q < j; ++q) {
      drop[order[q]] = 1;
      ++out.report.dropped_extra_jobs;
    }
    if (j - i >= 2 &&
        matches[order[i + 1]].earnings < cfg.second_job_ratio * matches[order[i]].earnings) {
      drop[order[i + 1]] = 1;
      ++out.report.dropped_second_job;
    }
    i = j;
  }
  for (std::size_t r : keep) {
    if (!drop[r]) out.matches.push_back(matches[r]);
  }
  out.report.output = out.matches.size();
  return out;
}

ConnectedSet largest_connected_set(const MatchTable& matches) {
  ConnectedSet out;
  out.stats.total_matches = matches.size();
  if (matches.empty()) return out;
  const Indexing ix = index_matches(matches);
  int n_comp = 0;
  const std::vector<int> comp = firm_components(ix, &n_comp);
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_comp), 0);
  for (std::int32_t f : ix.fi) counts[static_cast<std::size_t>(comp[static_cast<std::size_t>(f)])] += 1;
  // Labels follow ascending firm id, so the first maximum holds the smallest id.
  const std::size_t best = static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());

  std::vector<std::uint8_t> worker_in(ix.worker_ids.size(), 0);
  std::vector<std::uint8_t> firm_in(ix.firm_ids.size(), 0);
  for (std::size_t r = 0; r < matches.size(); ++r) {
    if (static_cast<std::size_t>(comp[static_cast<std::size_t>(ix.fi[r])]) == best) {
      out.matches.push_back(matches[r]);
      worker_in[static_cast<std::size_t>(ix.wi[r])] = 1;
      firm_in[static_cast<std::size_t>(ix.fi[r])] = 1;
    }
  }
  out.stats.n_components = static_cast<std::size_t>(n_comp);
  out.stats.match_counts = counts;
  std::sort(out.stats.match_counts.begin(), out.stats.match_counts.end(), std::greater<>());
  out.stats.kept_matches = out.matches.size();
  out.stats.kept_workers = static_cast<std::size_t>(std::count(worker_in.begin(), worker_in.end(), 1));
  out.stats.kept_firms = static_cast<std::size_t>(std::count(firm_in.begin(), firm_in.end(), 1));
  out.stats.coverage = static_cast<double>(out.stats.kept_matches) / static_cast<double>(matches.size());
  return out;
}

double AkmEstimate::alpha_of(std::int64_t worker_id) const {
  auto it = worker_index.find(worker_id);
  if (it == worker_index.end()) {
    throw Error(ErrorKind::UnknownWorker, "worker " + std::to_string(worker_id) + " not estimated");
  }
  return alpha[it->second];
}

double AkmEstimate::psi_of(std::int32_t firm_id) const {
  auto it = firm_index.find(firm_id);
  if (it == firm_index.end()) {
    throw Error(ErrorKind::InvalidParam, "firm " + std::to_string(firm_id) + " not estimated");
  }
  return psi[it->second];
}

double AkmEstimate::year_effect(int year) const {
  const int b = year_bin(year, first_year);
  if (year < first_year || b >= static_cast<int>(year_effects.size())) {
    throw Error(ErrorKind::InvalidParam, "year " + std::to_string(year) + " outside the estimation window");
  }
  return year_effects[static_cast<std::size_t>(b)];
}

AkmEstimate estimate_akm(const MatchTable& matches, const AkmSpec& spec) {
  if (matches.empty()) throw Error(ErrorKind::TooFewObservations, "no matches to estimate");
  const std::size_t n = matches.size();
  AkmEstimate est;
  Indexing ix = index_matches(matches);
  int n_comp = 0;
  est.component = firm_components(ix, &n_comp);
  est.n_components = n_comp;
  if (spec.require_connected && n_comp > 1) {
    throw Error(ErrorKind::NotConnected,
                "worker-firm graph has " + std::to_string(n_comp) + " components");
  }

  int first_year = spec.first_year;
  if (first_year == 0) {
    first_year = std::min_element(matches.begin(), matches.end(), [](const auto& a, const auto& b) {
                   return a.year < b.year;
                 })->year;
  }
  est.first_year = first_year;
  std::vector<std::int32_t> bins(n);
  std::array<std::vector<double>, kAgeSexTerms> xcols;
  for (auto& c : xcols) c.resize(n);
  std::vector<double> y(n);
  int max_bin = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const MatchRecord& m = matches[r];
    if (!(m.earnings > 0.0)) throw Error(ErrorKind::InvalidParam, "earnings must be positive");
    if (m.year < first_year) throw Error(ErrorKind::InvalidParam, "match year precedes the bin origin");
    bins[r] = year_bin(m.year, first_year);
    max_bin = std::max(max_bin, static_cast<int>(bins[r]));
    const auto xs = age_sex_covariates(m.age, m.male);
    for (int k = 0; k < kAgeSexTerms; ++k) xcols[static_cast<std::size_t>(k)][r] = xs[static_cast<std::size_t>(k)];
    y[r] = std::log(m.earnings);
  }
  const std::size_t nb = static_cast<std::size_t>(max_bin) + 1;
  const std::size_t nw = ix.worker_ids.size();
  const std::size_t nf = ix.firm_ids.size();
  AkmDesign design(ix, bins, nb, xcols);
  const std::size_t p = design.cols();

  // Free coordinates: one firm per component and the first bin are pinned,
  // as are columns without any variation in the sample.
  std::vector<double> diag = design.diagonal();
  std::vector<double> mask(p, 1.0);
  {
    std::vector<std::uint8_t> pinned(static_cast<std::size_t>(n_comp), 0);
    for (std::size_t f = 0; f < nf; ++f) {
      const std::size_t c = static_cast<std::size_t>(est.component[f]);
      if (!pinned[c]) {
        pinned[c] = 1;
        mask[design.firm_offset() + f] = 0.0;
      }
    }
    mask[design.bin_offset()] = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      if (!(diag[i] > 0.0)) mask[i] = 0.0;
    }
  }
  std::vector<double> precond(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) precond[i] = mask[i] > 0.0 ? 1.0 / diag[i] : 0.0;

  std::vector<double> v(p, 0.0), r(p), z(p), dir(p), q(p), rows_tmp(n), resid(n);
  auto normal_apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    design.apply(in, rows_tmp);
    design.apply_transpose(rows_tmp, out);
    kernels::mul(out, mask, out);
  };
  auto true_residual = [&] {
    design.apply(v, rows_tmp);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - rows_tmp[i];
    design.apply_transpose(resid, r);
    kernels::mul(r, mask, r);
  };

  std::vector<double> rhs(p);
  design.apply_transpose(y, rhs);
  kernels::mul(rhs, mask, rhs);
  const double rhs_norm = std::sqrt(masked_dot(rhs, rhs));
  int iterations = 0;
  double rel = 0.0;
  if (rhs_norm > 0.0) {
    // Restarted from the true residual so the recurrence cannot drift.
    for (;;) {
      true_residual();
      rel = std::sqrt(masked_dot(r, r)) / rhs_norm;
      if (rel < spec.tolerance) break;
      if (iterations >= spec.max_iterations) {
        throw Error(ErrorKind::SolverNoConvergence,
                    "conjugate gradients stopped at relative residual " + std::to_string(rel));
      }
      kernels::mul(r, precond, z);
      dir = z;
      double rz = masked_dot(r, z);
      while (iterations < spec.max_iterations) {
        ++iterations;
        normal_apply(dir, q);
        const double pq = masked_dot(dir, q);
        if (!(pq > 0.0)) break;
        const double step = rz / pq;
        kernels::axpy(step, dir, v);
        kernels::axpy(-step, q, r);
        rel = std::sqrt(masked_dot(r, r)) / rhs_norm;
        if (rel < 0.1 * spec.tolerance) break;
        kernels::mul(r, precond, z);
        const double rz_new = masked_dot(r, z);
        kernels::xpby(z, rz_new / rz, dir);
        rz = rz_new;
      }
    }
  }
  est.iterations = iterations;
  est.relative_residual = rel;

  est.worker_ids = ix.worker_ids;
  est.firm_ids = ix.firm_ids;
  est.alpha.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(nw));
  est.psi.assign(v.begin() + static_cast<std::ptrdiff_t>(nw), v.begin() + static_cast<std::ptrdiff_t>(nw + nf));
  for (int k = 0; k < kAgeSexTerms; ++k) {
    est.beta[static_cast<std::size_t>(k)] = v[design.beta_offset() + static_cast<std::size_t>(k)];
  }
  est.year_effects.assign(v.begin() + static_cast<std::ptrdiff_t>(design.bin_offset()), v.end());
  est.intercept = kernels::sum(est.alpha) / static_cast<double>(nw);
  for (double& a : est.alpha) a -= est.intercept;

  design.apply(v, rows_tmp);
  est.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) est.residuals[i] = y[i] - rows_tmp[i];
  const double ybar = kernels::sum(y) / static_cast<double>(n);
  double sst = 0.0;
  for (double yi : y) sst += (yi - ybar) * (yi - ybar);
  const double ssr = kernels::dot(est.residuals, est.residuals);
  est.n_obs = n;
  est.n_params = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1.0));
  est.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  est.adj_r2 = (sst > 0.0 && n > est.n_params)
                   ? 1.0 - (ssr / static_cast<double>(n - est.n_params)) / (sst / static_cast<double>(n - 1))
                   : std::numeric_limits<double>::quiet_NaN();
  est.worker_index = std::move(ix.worker_index);
  est.firm_index = std::move(ix.firm_index);
  return est;
}

std::vector<double> worker_quality(const AkmEstimate& est, const MatchTable& matches) {
  std::vector<double> h;
  h.reserve(matches.size());
  for (const MatchRecord& m : matches) {
    const auto xs = age_sex_covariates(m.age, m.male);
    double v = est.alpha_of(m.worker_id);
    for (int k = 0; k < kAgeSexTerms; ++k) v += est.beta[static_cast<std::size_t>(k)] * xs[static_cast<std::size_t>(k)];
    h.push_back(v);
  }
  return h;
}

std::vector<std::uint8_t> identify_top_workers(const MatchTable& matches, double tie_ratio) {
  std::vector<std::size_t> order(matches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const MatchRecord& x = matches[a];
    const MatchRecord& y = matches[b];
    if (x.firm_id != y.firm_id) return x.firm_id < y.firm_id;
    if (x.year != y.year) return x.year < y.year;
    if (x.earnings != y.earnings) return x.earnings > y.earnings;
    if (x.worker_id != y.worker_id) return x.worker_id < y.worker_id;
    return a < b;
  });
  std::vector<std::uint8_t> flags(matches.size(), 0);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && matches[order[j]].firm_id == matches[order[i]].firm_id &&
           matches[order[j]].year == matches[order[i]].year) {
      ++j;
    }
    flags[order[i]] = 1;
    if (j - i >= 2 && matches[order[i + 1]].earnings > tie_ratio * matches[order[i]].earnings) {
      flags[order[i + 1]] = 1;
    }
    i = j;
  }
  return flags;
}

FirmQualityResult firm_quality(const MatchTable& matches, const std::vector<double>& h,
                               const std::vector<std::uint8_t>& top_flags) {
  if (h.size() != matches.size() || top_flags.size() != matches.size()) {
    throw Error(ErrorKind::InvalidParam, "quality and flag vectors must align with matches");
  }
  struct Acc {
    double top = 0.0, nontop = 0.0;
    int n_top = 0, n_nontop = 0;
  };
  std::map<std::pair<std::int32_t, std::int32_t>, Acc> acc;
  for (std::size_t r = 0; r < matches.size(); ++r) {
    Acc& a = acc[{matches[r].firm_id, matches[r].year}];
    if (top_flags[r]) {
      a.top += h[r];
      ++a.n_top;
    } else {
      a.nontop += h[r];
      ++a.n_nontop;
    }
  }
  FirmQualityResult out;
  for (const auto& [key, a] : acc) {
    if (a.n_top == 0) throw Error(ErrorKind::InvalidParam, "firm-year without a flagged top worker");
    if (a.n_nontop == 0) {
      ++out.dropped_no_nontop;
      continue;
    }
    out.rows.push_back({key.first, key.second, a.top / a.n_top, a.nontop / a.n_nontop, a.n_top,
                        a.n_nontop});
  }
  return out;
}

std::vector<VarianceRow> variance_decomposition(const AkmEstimate& est, const MatchTable& matches,
                                                const std::vector<int>& size_bins) {
  if (matches.size() != est.residuals.size()) {
    throw Error(ErrorKind::InvalidParam, "matches do not align with the estimate");
  }
  if (size_bins.empty() || !std::is_sorted(size_bins.begin(), size_bins.end())) {
    throw Error(ErrorKind::InvalidParam, "size bins must be ascending lower bounds");
  }
  const std::size_t n = matches.size();
  std::map<std::pair<std::int32_t, std::int32_t>, int> firm_size;
  for (const MatchRecord& m : matches) firm_size[{m.firm_id, m.year}] += 1;

  std::vector<double> lnw(n), wk(n), fm(n), xb(n), re(n);
  std::vector<int> group(n, -1);
  for (std::size_t r = 0; r < n; ++r) {
    const MatchRecord& m = matches[r];
    lnw[r] = std::log(m.earnings);
    wk[r] = est.alpha_of(m.worker_id);
    fm[r] = est.psi_of(m.firm_id);
    const auto xs = age_sex_covariates(m.age, m.male);
    double v = est.year_effect(m.year);
    for (int k = 0; k < kAgeSexTerms; ++k) v += est.beta[static_cast<std::size_t>(k)] * xs[static_cast<std::size_t>(k)];
    xb[r] = v;
    re[r] = est.residuals[r];
    const int size = firm_size[{m.firm_id, m.year}];
    for (std::size_t b = 0; b < size_bins.size(); ++b) {
      if (size >= size_bins[b]) group[r] = static_cast<int>(b);
    }
  }

  auto summarize = [&](const std::string& label, const std::vector<std::size_t>& rows) {
    VarianceRow out;
    out.group = label;
    out.n = rows.size();
    if (rows.empty()) return out;
    const double inv = 1.0 / static_cast<double>(rows.size());
    auto mean_of = [&](const std::vector<double>& v) {
      double s = 0.0;
      for (std::size_t r : rows) s += v[r];
      return s * inv;
    };
    const double ml = mean_of(lnw), mw = mean_of(wk), mf = mean_of(fm), mx = mean_of(xb), me = mean_of(re);
    auto cov = [&](const std::vector<double>& a, double ma, const std::vector<double>& b, double mb) {
      double s = 0.0;
      for (std::size_t r : rows) s += (a[r] - ma) * (b[r] - mb);
      return s * inv;
    };
    out.var_lnw = cov(lnw, ml, lnw, ml);
    out.var_worker = cov(wk, mw, wk, mw);
    out.var_firm = cov(fm, mf, fm, mf);
    out.var_xb = cov(xb, mx, xb, mx);
    out.var_resid = cov(re, me, re, me);
    out.cov_worker_firm = cov(wk, mw, fm, mf);
    out.cov_worker_xb = cov(wk, mw, xb, mx);
    out.cov_firm_xb = cov(fm, mf, xb, mx);
    out.cov_worker_resid = cov(wk, mw, re, me);
    out.cov_firm_resid = cov(fm, mf, re, me);
    out.cov_xb_resid = cov(xb, mx, re, me);
    out.worker_share = out.var_lnw > 0.0 ? out.var_worker / out.var_lnw : 0.0;
    const double parts = out.var_worker + out.var_firm + out.var_xb + out.var_resid +
                         2.0 * (out.cov_worker_firm + out.cov_worker_xb + out.cov_firm_xb +
                                out.cov_worker_resid + out.cov_firm_resid + out.cov_xb_resid);
    out.closure_error = out.var_lnw - parts;
    return out;
  };

  std::vector<VarianceRow> table;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  table.push_back(summarize("all", all));
  for (std::size_t b = 0; b < size_bins.size(); ++b) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < n; ++r) {
      if (group[r] == static_cast<int>(b)) rows.push_back(r);
    }
    std::string label = std::to_string(size_bins[b]);
    label += b + 1 < size_bins.size() ? "-" + std::to_string(size_bins[b + 1] - 1) : "+";
    table.push_back(summarize(label, rows));
  }
  return table;
}

}  // namespace matchprod
