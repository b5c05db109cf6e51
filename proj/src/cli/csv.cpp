#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unistd.h>

#include "sdr/io/cli.hpp"

namespace sdr::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv_records(std::istream& in, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false, after_quote = false;
  long line = 1;
  char ch;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
    after_quote = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) records.push_back(row);
    row.clear();
  };
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    if (ch == ',') {
      end_field();
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get(ch);
      end_row();
      ++line;
    } else if (ch == '\n') {
      end_row();
      ++line;
    } else if (ch == '"') {
      if (field_started)
        throw InputError(source + ": line " + std::to_string(line) + ": stray quote inside field");
      quoted = true;
      field_started = true;
    } else {
      if (after_quote)
        throw InputError(source + ": line " + std::to_string(line) + ": text after closing quote");
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw InputError(source + ": unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return records;
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
  const auto records = parse_csv_records(in, source);
  if (records.empty()) throw InputError(source + ": missing header row");
  CsvTable t;
  std::set<std::string> seen;
  for (const auto& raw : records[0]) {
    const std::string name = trim(raw);
    if (name.empty()) throw InputError(source + ": empty column name in header");
    if (!seen.insert(name).second) throw InputError(source + ": duplicate column name '" + name + "'");
    t.names.push_back(name);
  }
  const Index cols = static_cast<Index>(t.names.size());
  t.values.resize(static_cast<Index>(records.size()) - 1, cols);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (static_cast<Index>(rec.size()) != cols)
      throw InputError(source + ": row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                       " fields, expected " + std::to_string(cols));
    for (Index c = 0; c < cols; ++c) {
      const std::string cell = trim(rec[static_cast<std::size_t>(c)]);
      char* end = nullptr;
      errno = 0;
      const double v = cell.empty() ? NAN : std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
        throw InputError(source + ": row " + std::to_string(r) + ", column '" +
                         t.names[static_cast<std::size_t>(c)] + "': not a finite number: '" + cell + "'");
      t.values(static_cast<Index>(r) - 1, c) = v;
    }
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return parse_csv(in, path);
}

Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Index>(i);
  throw InputError("column '" + name + "' not found");
}

Matrix CsvTable::select(const std::vector<std::string>& wanted) const {
  Matrix out(values.rows(), static_cast<Index>(wanted.size()));
  for (std::size_t i = 0; i < wanted.size(); ++i) out.col(static_cast<Index>(i)) = values.col(column(wanted[i]));
  return out;
}

std::string format_csv(const std::vector<std::string>& names, const Matrix& values) {
  std::ostringstream os;
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << quote(names[i]);
  os << '\n' << std::setprecision(17);
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) os << (c ? "," : "") << values(r, c);
    os << '\n';
  }
  return os.str();
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw InputError("cannot replace " + path + ": " + ec.message());
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> parse_name_list(const std::string& spec) {
  std::string body = spec;
  if (!spec.empty() && spec[0] == '@') {
    body = read_text(spec.substr(1));
    for (char& c : body)
      if (c == '\n' || c == '\r') c = ',';
  }
  std::vector<std::string> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Matrix Standardization::apply(const Matrix& data) const {
  if (!active()) return data;
  if (data.cols() != mean.size()) throw InputError("standardization width mismatch");
  Matrix out = data.rowwise() - mean.transpose();
  return out.array().rowwise() / scale.transpose().array();
}

}  // namespace sdr::io
