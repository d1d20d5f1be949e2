#pragma once

// Comma-separated tables with a header row. Doubles are written with 17
// significant digits so that a write/read round trip is exact.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "matchprod/akm.hpp"
#include "matchprod/matcheff.hpp"
#include "matchprod/panel.hpp"
#include "matchprod/prodfn.hpp"

namespace matchprod {

std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(std::int64_t v);
  CsvWriter& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
  CsvWriter& operator<<(std::size_t v) { return *this << static_cast<std::int64_t>(v); }
  CsvWriter& operator<<(const std::string& v);
  CsvWriter& operator<<(const char* v) { return *this << std::string(v); }
  void end_row();

 private:
  void sep();
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::filesystem::path path_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position; throws MissingInput when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  std::int64_t integer(std::size_t row, std::size_t col) const;
};

// Throws MissingInput if the file cannot be opened, ConfigParse on ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

void write_firms(const std::filesystem::path& path, const FirmPanel& firms, bool truth = true);
// Truth columns missing from the file come back as NaN.
FirmPanel read_firms(const std::filesystem::path& path);

void write_matches(const std::filesystem::path& path, const MatchTable& matches, bool truth = true);
MatchTable read_matches(const std::filesystem::path& path);

void write_firm_quality(const std::filesystem::path& path, const std::vector<FirmQuality>& rows);
std::vector<FirmQuality> read_firm_quality(const std::filesystem::path& path);

// One numeric column (the first) of a file with a header row.
std::vector<double> read_value_column(const std::filesystem::path& path, const std::string& column = "");

}  // namespace matchprod
