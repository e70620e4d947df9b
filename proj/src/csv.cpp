#include "stochfv/csv.hpp"

#include <cstdio>
#include <fstream>

#include "stochfv/errors.hpp"

namespace stochfv {

std::string csv_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string csv_int(std::int64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(x));
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

void emit_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("csv: cannot open " + path + " for writing");
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << csv_escape(row[i]);
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw IoError("csv: row arity does not match header in " + path);
    write_row(row);
  }
  if (!out) throw IoError("csv: write failed for " + path);
}

}  // namespace stochfv
