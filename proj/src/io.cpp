#include "ldgp/io.hpp"

#include "ldgp/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ldgp {

namespace {

std::vector<std::vector<std::string>> split_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, field_started = false;
  auto end_field = [&] {
    fields.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(fields.size() == 1 && fields[0].empty())) records.push_back(fields);
    fields.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw ValidationError("csv: unterminated quoted field");
  if (field_started || !fields.empty()) end_record();
  return records;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  std::size_t a = 0, b = cell.size();
  while (a < b && (cell[a] == ' ' || cell[a] == '\t')) ++a;
  while (b > a && (cell[b - 1] == ' ' || cell[b - 1] == '\t')) --b;
  double v = 0.0;
  const char* first = cell.data() + a;
  if (a < b && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, cell.data() + b, v);
  if (a == b || ec != std::errc() || ptr != cell.data() + b)
    throw ValidationError("csv: row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                          ": not a number: '" + cell + "'");
  return v;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

Table parse_csv(const std::string& text) {
  auto records = split_records(text);
  if (records.empty()) throw ValidationError("csv: missing header row");
  Table t;
  t.header = records.front();
  const std::size_t cols = t.header.size();
  t.values.resize(static_cast<Eigen::Index>(records.size() - 1), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != cols)
      throw ValidationError("csv: row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                            " fields, header has " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c)
      t.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = parse_cell(records[r][c], r, c);
  }
  return t;
}

Table read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += quote(row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string format_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  std::vector<std::vector<std::string>> rows{header};
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < values.cols(); ++j) row.push_back(format_number(values(i, j)));
    rows.push_back(std::move(row));
  }
  return format_csv(rows);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json bundle_to_json(const LDGPEmulator& emulator) {
  json j;
  j["kind"] = "linked";
  j["imputations"] = emulator.imputations();
  j["network"] = to_json(emulator.spec());
  j["models"] = json::object();
  for (const auto& [id, e] : emulator.emulators()) j["models"][id] = to_json(e);
  return j;
}

LDGPEmulator bundle_from_json(const json& j) {
  try {
    if (j.value("kind", std::string()) != "linked") throw ValidationError("not a linked emulator bundle");
    std::map<std::string, NodeEmulator> ems;
    for (const auto& [id, m] : j.at("models").items()) ems.emplace(id, node_emulator_from_json(m));
    return link_ldgp(std::move(ems), network_from_json(j.at("network")), j.at("imputations").get<int>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed emulator bundle: ") + e.what());
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  if (dynamic_cast<const json::exception*>(&e)) return 2;
  return 1;
}

}  // namespace ldgp
