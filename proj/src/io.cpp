#include "qmt/io.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qmt {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end != '\0') {
    if (!std::isspace(static_cast<unsigned char>(*end))) return false;
    ++end;
  }
  return true;
}

[[noreturn]] void bad_row(const std::string& path, size_t line_no, const std::string& why) {
  std::ostringstream msg;
  msg << path << ":" << line_no << ": " << why;
  throw std::invalid_argument(msg.str());
}

// Applies `row` to every data row; a non-numeric first row is treated as
// a header and skipped.
template <class F>
void for_each_row(const std::string& path, F&& row) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input file " + path);
  std::string line;
  size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    double probe;
    if (first && !parse_double(fields[0], probe)) {
      first = false;
      continue;  // header
    }
    first = false;
    row(fields, line_no);
  }
}

}  // namespace

std::vector<double> read_numeric_csv(const std::string& path) {
  std::vector<double> out;
  for_each_row(path, [&](const std::vector<std::string>& f, size_t line_no) {
    double v;
    if (!parse_double(f[0], v)) bad_row(path, line_no, "expected a number");
    out.push_back(v);
  });
  if (out.empty()) throw std::invalid_argument(path + ": no observations");
  return out;
}

TwoGroupData read_two_group_csv(const std::string& path) {
  TwoGroupData d;
  for_each_row(path, [&](const std::vector<std::string>& f, size_t line_no) {
    if (f.size() < 2) bad_row(path, line_no, "expected columns value,group");
    double v;
    if (!parse_double(f[0], v)) bad_row(path, line_no, "expected a number in column 1");
    const std::string& g = f[1];
    if (g == "x" || g == "X" || g == "0") {
      d.x.push_back(v);
    } else if (g == "y" || g == "Y" || g == "1") {
      d.y.push_back(v);
    } else {
      bad_row(path, line_no, "group must be x or y");
    }
  });
  if (d.x.empty() || d.y.empty()) {
    throw std::invalid_argument(path + ": need observations in both groups");
  }
  return d;
}

RdData read_rd_csv(const std::string& path) {
  RdData d;
  for_each_row(path, [&](const std::vector<std::string>& f, size_t line_no) {
    if (f.size() < 2) bad_row(path, line_no, "expected columns y,z");
    double yv, zv;
    if (!parse_double(f[0], yv) || !parse_double(f[1], zv)) {
      bad_row(path, line_no, "expected two numbers");
    }
    d.y.push_back(yv);
    d.z.push_back(zv);
  });
  if (d.y.empty()) throw std::invalid_argument(path + ": no observations");
  return d;
}

CondData read_cond_csv(const std::string& path) {
  CondData d;
  size_t dim = 0;
  for_each_row(path, [&](const std::vector<std::string>& f, size_t line_no) {
    if (f.size() < 3) bad_row(path, line_no, "expected columns y,t,x1..xd");
    if (dim == 0) dim = f.size() - 2;
    if (f.size() - 2 != dim) bad_row(path, line_no, "inconsistent covariate count");
    double yv, tv;
    if (!parse_double(f[0], yv) || !parse_double(f[1], tv)) {
      bad_row(path, line_no, "expected numbers in columns 1-2");
    }
    if (tv != 0.0 && tv != 1.0) bad_row(path, line_no, "t must be 0 or 1");
    std::vector<double> xs(dim);
    for (size_t c = 0; c < dim; ++c) {
      if (!parse_double(f[c + 2], xs[c])) bad_row(path, line_no, "expected a number");
    }
    d.y.push_back(yv);
    d.t.push_back(static_cast<int>(tv));
    d.x.push_back(std::move(xs));
  });
  if (d.y.empty()) throw std::invalid_argument(path + ": no observations");
  return d;
}

std::vector<std::pair<double, double>> read_tau_q_csv(const std::string& path) {
  std::vector<std::pair<double, double>> out;
  for_each_row(path, [&](const std::vector<std::string>& f, size_t line_no) {
    if (f.size() < 2) bad_row(path, line_no, "expected columns tau,q");
    double tau, q;
    if (!parse_double(f[0], tau) || !parse_double(f[1], q)) {
      bad_row(path, line_no, "expected two numbers");
    }
    out.push_back({tau, q});
  });
  if (out.size() < 2) throw std::invalid_argument(path + ": need at least two rows");
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace qmt
