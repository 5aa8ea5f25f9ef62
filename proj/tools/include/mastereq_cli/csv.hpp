#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mastereq/controller.hpp"

namespace mastereq::cli {

inline constexpr const char* kRecordHeader =
    "step,t,dt,krylov_dim,rho_a_l1,magnus_res_l1,outflow,space_size,moan_niesen,rejected";

/// Shortest round-trip text with 17 significant digits.
std::string format_number(double x);
/// RFC 4180 quoting when the field needs it.
std::string quote_field(const std::string& field);
std::vector<std::string> split_line(const std::string& line);

void write_records(std::ostream& out, const std::vector<StepRecord>& records);
/// Throws IoError when the file cannot be written.
void emit_csv(const std::vector<StepRecord>& records, const std::filesystem::path& path);

/// Throws ConfigError on a malformed file.
std::vector<StepRecord> parse_records(std::istream& in);
std::vector<StepRecord> read_csv(const std::filesystem::path& path);

/// Generic table with a header row.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

}  // namespace mastereq::cli
