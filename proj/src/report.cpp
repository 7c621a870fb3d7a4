#include "reslab/report.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "reslab/errors.hpp"

namespace reslab {

std::string fmt_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json json_complex(Complex z) {
  return nlohmann::ordered_json::array({z.real(), z.imag()});
}

std::string csv_table(const std::vector<CsvRow>& rows) {
  std::string out = "branch_id,re_z,im_z,re_r,im_r,status\n";
  for (const CsvRow& row : rows) {
    out += std::to_string(row.branch_id);
    out += ',';
    out += fmt_double(row.z.real());
    out += ',';
    out += fmt_double(row.z.imag());
    out += ',';
    out += fmt_double(row.r.real());
    out += ',';
    out += fmt_double(row.r.imag());
    out += ',';
    out += row.status;
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json json_checks(const std::vector<Check>& checks) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Check& c : checks) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    if (!c.detail.empty()) j["detail"] = c.detail;
    arr.push_back(j);
  }
  return arr;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << content;
  if (!out) throw Error("short write: " + path);
}

}  // namespace reslab
