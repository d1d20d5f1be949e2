#include "matchprod/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "matchprod/error.hpp"

namespace matchprod {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double optional_number(const CsvTable& t, std::size_t row, const std::string& name) {
  if (!t.has_column(name)) return kNaN;
  return t.number(row, t.column(name));
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path) {
  if (!out_) throw Error(ErrorKind::MissingInput, "cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::sep() {
  if (in_row_ >= columns_) throw Error(ErrorKind::InvalidParam, "too many fields for " + path_.string());
  if (in_row_) out_ << ',';
  ++in_row_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::int64_t v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw Error(ErrorKind::InvalidParam, "short row in " + path_.string());
  out_ << '\n';
  in_row_ = 0;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::MissingInput, "missing column " + name);
}

bool CsvTable::has_column(const std::string& name) const {
  for (const std::string& h : header) {
    if (h == name) return true;
  }
  return false;
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  if (s == "nan" || s.empty()) return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigParse, "not a number: '" + s + "'");
  }
}

std::int64_t CsvTable::integer(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ConfigParse, "not an integer: '" + s + "'");
  }
  return v;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingInput, "cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ConfigParse, path.string() + " has no header");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (fields.size() != t.header.size()) {
      throw Error(ErrorKind::ConfigParse, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                              std::to_string(t.header.size()) + " fields");
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

void write_firms(const std::filesystem::path& path, const FirmPanel& firms, bool truth) {
  std::vector<std::string> header{"firm_id", "sector", "year", "value_added", "capital", "labor_count",
                                  "materials", "p_g", "p_m", "share"};
  if (truth) {
    for (const char* c : {"omega", "omega_x", "x", "y", "eps"}) header.emplace_back(c);
  }
  CsvWriter w(path, header);
  for (const FirmYear& f : firms) {
    w << static_cast<int>(f.firm_id) << static_cast<int>(f.sector) << static_cast<int>(f.year) << f.f
      << f.k << f.l << f.m << f.p_g << f.p_m << f.s;
    if (truth) w << f.omega << f.omega_x << f.x << f.y << f.eps;
    w.end_row();
  }
}

FirmPanel read_firms(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_id = t.column("firm_id"), c_sec = t.column("sector"), c_yr = t.column("year"),
                    c_f = t.column("value_added"), c_k = t.column("capital"), c_l = t.column("labor_count"),
                    c_m = t.column("materials"), c_pg = t.column("p_g"), c_pm = t.column("p_m");
  FirmPanel out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    FirmYear f;
    f.firm_id = static_cast<std::int32_t>(t.integer(r, c_id));
    f.sector = static_cast<std::int32_t>(t.integer(r, c_sec));
    f.year = static_cast<std::int32_t>(t.integer(r, c_yr));
    f.f = t.number(r, c_f);
    f.k = t.number(r, c_k);
    f.l = t.number(r, c_l);
    f.m = t.number(r, c_m);
    f.p_g = t.number(r, c_pg);
    f.p_m = t.number(r, c_pm);
    f.s = optional_number(t, r, "share");
    f.omega = optional_number(t, r, "omega");
    f.omega_x = optional_number(t, r, "omega_x");
    f.x = optional_number(t, r, "x");
    f.y = optional_number(t, r, "y");
    f.eps = optional_number(t, r, "eps");
    out.push_back(f);
  }
  return out;
}

void write_matches(const std::filesystem::path& path, const MatchTable& matches, bool truth) {
  std::vector<std::string> header{"worker_id", "firm_id", "year", "earnings", "age", "sex", "owner_flag"};
  if (truth) {
    header.emplace_back("alpha_i");
    header.emplace_back("is_top");
  }
  CsvWriter w(path, header);
  for (const MatchRecord& m : matches) {
    w << m.worker_id << static_cast<int>(m.firm_id) << static_cast<int>(m.year) << m.earnings << m.age
      << m.male << static_cast<int>(m.is_owner);
    if (truth) w << m.alpha_true << static_cast<int>(m.is_top);
    w.end_row();
  }
}

MatchTable read_matches(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_w = t.column("worker_id"), c_f = t.column("firm_id"), c_y = t.column("year"),
                    c_e = t.column("earnings"), c_a = t.column("age"), c_s = t.column("sex");
  const bool has_owner = t.has_column("owner_flag");
  const bool has_alpha = t.has_column("alpha_i");
  const bool has_top = t.has_column("is_top");
  MatchTable out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    MatchRecord m;
    m.worker_id = t.integer(r, c_w);
    m.firm_id = static_cast<std::int32_t>(t.integer(r, c_f));
    m.year = static_cast<std::int32_t>(t.integer(r, c_y));
    m.earnings = t.number(r, c_e);
    m.age = static_cast<int>(t.integer(r, c_a));
    m.male = static_cast<int>(t.integer(r, c_s));
    m.is_owner = has_owner && t.integer(r, t.column("owner_flag")) != 0;
    m.alpha_true = has_alpha ? t.number(r, t.column("alpha_i")) : kNaN;
    m.is_top = has_top && t.integer(r, t.column("is_top")) != 0;
    out.push_back(m);
  }
  return out;
}

void write_firm_quality(const std::filesystem::path& path, const std::vector<FirmQuality>& rows) {
  CsvWriter w(path, {"firm_id", "year", "ln_y", "ln_x", "n_top", "n_nontop"});
  for (const FirmQuality& q : rows) {
    w << static_cast<int>(q.firm_id) << static_cast<int>(q.year) << q.ln_y << q.ln_x << q.n_top << q.n_nontop;
    w.end_row();
  }
}

std::vector<FirmQuality> read_firm_quality(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_f = t.column("firm_id"), c_y = t.column("year"), c_ly = t.column("ln_y"),
                    c_lx = t.column("ln_x"), c_nt = t.column("n_top"), c_nn = t.column("n_nontop");
  std::vector<FirmQuality> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({static_cast<std::int32_t>(t.integer(r, c_f)), static_cast<std::int32_t>(t.integer(r, c_y)),
                   t.number(r, c_ly), t.number(r, c_lx), static_cast<int>(t.integer(r, c_nt)),
                   static_cast<int>(t.integer(r, c_nn))});
  }
  return out;
}

std::vector<double> read_value_column(const std::filesystem::path& path, const std::string& column) {
  const CsvTable t = read_csv(path);
  const std::size_t c = column.empty() ? 0 : t.column(column);
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back(t.number(r, c));
  return out;
}

}  // namespace matchprod
