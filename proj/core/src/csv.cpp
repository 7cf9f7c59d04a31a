#include "cauchykmf/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kmf {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvTable::add_row(std::vector<double> row) {
  if (row.size() != header.size())
    throw std::invalid_argument("CsvTable: row width does not match header");
  rows.push_back(std::move(row));
}

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (!std::isnan(row[i])) out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string field_csv(const Mesh& mesh, const Eigen::VectorXd& field) {
  if (field.size() != static_cast<Eigen::Index>(mesh.nodes.size()))
    throw std::invalid_argument("field_csv: field length does not match the mesh");
  CsvTable t;
  t.header = {"node", "x", "y", "value"};
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    t.add_row({static_cast<double>(i), mesh.nodes[i].x, mesh.nodes[i].y,
               field[static_cast<Eigen::Index>(i)]});
  return t.to_string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace kmf
