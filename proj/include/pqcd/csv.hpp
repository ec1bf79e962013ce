#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pqcd {

// %.12g keeps doubles round-trippable for our tolerances while staying compact
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// one CSV artifact: `# key=value` comment lines, a header row, string cells,
// always UTF-8 with LF line endings
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_meta(const std::string& key, const std::string& value) { meta.emplace_back(key, value); }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns.size())
      throw std::invalid_argument("CsvTable: row width does not match header");
    rows.push_back(std::move(cells));
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ",";
      out += columns[c];
    }
    out += "\n";
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ",";
        out += row[c];
      }
      out += "\n";
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << to_string();
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  const auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : s) {
      if (ch == ',') {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += ch;
      }
    }
    cells.push_back(cell);
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      const std::size_t eq = body.find('=');
      if (eq == std::string::npos)
        t.meta.emplace_back(body, "");
      else
        t.meta.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      t.columns = split(line);
      header_seen = true;
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

// drops columns whose name ends in _ms so reruns can be compared byte-for-byte
inline CsvTable strip_timing_columns(const CsvTable& t) {
  CsvTable out;
  out.meta = t.meta;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    const std::string& name = t.columns[c];
    if (name.size() >= 3 && name.compare(name.size() - 3, 3, "_ms") == 0) continue;
    keep.push_back(c);
    out.columns.push_back(name);
  }
  for (const auto& row : t.rows) {
    std::vector<std::string> cells;
    for (std::size_t c : keep) cells.push_back(row.at(c));
    out.rows.push_back(std::move(cells));
  }
  return out;
}

}  // namespace pqcd
