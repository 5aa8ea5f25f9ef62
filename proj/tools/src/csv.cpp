#include "mastereq_cli/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mastereq_cli/config.hpp"

namespace mastereq::cli {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw ConfigError("unterminated quote in CSV line");
  return fields;
}

void write_records(std::ostream& out, const std::vector<StepRecord>& records) {
  out << kRecordHeader << "\r\n";
  for (const auto& r : records) {
    out << r.step << ',' << format_number(r.t) << ',' << format_number(r.dt) << ','
        << r.krylov_dim << ',' << format_number(r.rho_a_l1) << ','
        << format_number(r.magnus_res_l1) << ',' << format_number(r.outflow) << ','
        << r.space_size << ',' << format_number(r.moan_niesen) << ',' << (r.rejected ? 1 : 0)
        << "\r\n";
  }
}

void emit_csv(const std::vector<StepRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_records(out, records);
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

std::vector<StepRecord> parse_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordHeader) throw ConfigError("unexpected CSV header: " + line);
  std::vector<StepRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = split_line(line);
    if (f.size() != 10) throw ConfigError("CSV row has " + std::to_string(f.size()) + " fields");
    try {
      StepRecord r;
      r.step = std::stoll(f[0]);
      r.t = std::stod(f[1]);
      r.dt = std::stod(f[2]);
      r.krylov_dim = std::stoll(f[3]);
      r.rho_a_l1 = std::stod(f[4]);
      r.magnus_res_l1 = std::stod(f[5]);
      r.outflow = std::stod(f[6]);
      r.space_size = std::stoll(f[7]);
      r.moan_niesen = std::stod(f[8]);
      r.rejected = std::stoi(f[9]) != 0;
      records.push_back(r);
    } catch (const std::logic_error&) {
      throw ConfigError("malformed CSV row: " + line);
    }
  }
  return records;
}

std::vector<StepRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_records(in);
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << quote_field(fields[i]);
    out << "\r\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace mastereq::cli
