#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace matchprod {

// One firm-year. Columns after `p_m` are simulation truth and are absent
// (NaN) when a table is read back without truth columns.
struct FirmYear {
  std::int32_t firm_id = 0;
  std::int32_t sector = 0;
  std::int32_t year = 0;
  double f = 0.0;  // value added
  double k = 0.0;  // capital
  double l = 0.0;  // worker count
  double m = 0.0;  // intermediates
  double p_g = 1.0;
  double p_m = 1.0;
  double omega = 0.0;
  double omega_x = 0.0;
  double x = 0.0;
  double y = 0.0;
  double eps = 0.0;
  double s = 0.0;  // value-added share within year
};

struct MatchRecord {
  std::int64_t worker_id = 0;
  std::int32_t firm_id = 0;
  std::int32_t year = 0;
  double earnings = 0.0;
  int age = 40;
  int male = 0;
  double alpha_true = 0.0;
  bool is_top = false;
  bool is_owner = false;
};

using FirmPanel = std::vector<FirmYear>;
using MatchTable = std::vector<MatchRecord>;

inline constexpr int kAgeSexTerms = 5;

// Age-sex covariates with age normalized at 40 (and scaled by 1/10):
// (a*male, a^2, a^2*male, a^3, a^3*male). All vanish at age 40, which pins
// the profile flat there.
inline std::array<double, kAgeSexTerms> age_sex_covariates(int age, int male) {
  const double a = (age - 40) / 10.0;
  const double a2 = a * a;
  const double a3 = a2 * a;
  const double mm = male ? 1.0 : 0.0;
  return {a * mm, a2, a2 * mm, a3, a3 * mm};
}

// Two-year bins counted from the first sample year; bin 0 is the reference.
inline int year_bin(int year, int first_year) { return (year - first_year) / 2; }

}  // namespace matchprod
