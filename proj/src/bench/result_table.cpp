#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "greenq/bench.hpp"

namespace greenq::bench {

namespace {

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw std::logic_error("row width does not match the column count");
  rows.push_back(std::move(row));
}

std::string ResultTable::to_csv() const {
  std::string out;
  for (const auto& [key, value] : provenance) out += "# " + key + ": " + value + "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_number(row[c]);
    out += "\n";
  }
  return out;
}

void ResultTable::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_csv();
}

}  // namespace greenq::bench
