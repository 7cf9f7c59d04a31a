#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "cauchykmf/geometry.hpp"

namespace kmf {

// %.17g rendering; round-trips doubles exactly and keeps CSV output
// byte-stable across runs.
std::string format_double(double v);

// Header plus numeric rows; NaN entries render as empty cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  std::string to_string() const;
};

// Field export: node id, x, y, value.
std::string field_csv(const Mesh& mesh, const Eigen::VectorXd& field);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace kmf
