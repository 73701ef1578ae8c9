#pragma once

#include <string>
#include <utility>
#include <vector>

namespace qmt {

// CSV readers for the CLI input formats. Comma separated, '.' decimal;
// an optional header row is detected by a non-numeric first field.
// Malformed rows raise std::invalid_argument naming the line number.

std::vector<double> read_numeric_csv(const std::string& path);

struct TwoGroupData {
  std::vector<double> x, y;
};
TwoGroupData read_two_group_csv(const std::string& path);  // columns: value, group in {x,y}

struct RdData {
  std::vector<double> y, z;
};
RdData read_rd_csv(const std::string& path);  // columns: y, z

struct CondData {
  std::vector<double> y;
  std::vector<int> t;
  std::vector<std::vector<double>> x;
};
CondData read_cond_csv(const std::string& path);  // columns: y, t, x1..xd

std::vector<std::pair<double, double>> read_tau_q_csv(const std::string& path);

// Write content to path via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace qmt
