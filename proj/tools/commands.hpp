#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qd::cli {

enum ExitCode { Ok = 0, Usage = 1, Invalid = 2, Inconclusive = 3, OracleFailure = 4 };

// Entry point of the qdiff tool; data goes to `out` unless --out names a directory.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// RFC-4180 field quoting.
std::string csv_field(const std::string& s);
std::string csv_row(const std::vector<std::string>& fields);
std::string csv_real(double x);

// FNV-1a, 64 bit.
std::uint64_t content_hash(const std::string& s);

}  // namespace qd::cli
