#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "reslab/types.hpp"

namespace reslab {

// Shortest decimal form that round-trips a double, for deterministic
// reports and CSV files.
std::string fmt_double(double x);

nlohmann::ordered_json json_complex(Complex z);

struct CsvRow {
  int branch_id = 0;
  Complex z;
  Complex r;
  std::string status;
};

// Fixed header branch_id,re_z,im_z,re_r,im_r,status; byte-identical
// output for identical rows.
std::string csv_table(const std::vector<CsvRow>& rows);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

nlohmann::ordered_json json_checks(const std::vector<Check>& checks);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace reslab
