#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stochfv {

// Shortest text that parses back to the same double would also round-trip,
// but a fixed 17-significant-digit form keeps files byte-identical across
// standard library versions.
std::string csv_double(double x);
std::string csv_int(std::int64_t x);

// RFC 4180 quoting: fields containing a comma, quote, or newline are
// wrapped in quotes with inner quotes doubled.
std::string csv_escape(const std::string& field);

// Writes header + rows with LF line endings. Every row must have the same
// arity as the header.
void emit_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows);

}  // namespace stochfv
