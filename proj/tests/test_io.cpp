#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "qmt/io.hpp"

using namespace qmt;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("numeric csv with and without header") {
  const std::string p1 = write_temp("qmt_io1.csv", "value\n1.5\n2\n-3e-2\n");
  const auto v1 = read_numeric_csv(p1);
  CHECK(v1 == std::vector<double>{1.5, 2.0, -0.03});
  const std::string p2 = write_temp("qmt_io2.csv", "1\n2\n");
  CHECK(read_numeric_csv(p2).size() == 2);
  const std::string p3 = write_temp("qmt_io3.csv", "1\nnot_a_number\n");
  CHECK_THROWS_AS(read_numeric_csv(p3), std::invalid_argument);
  const std::string p4 = write_temp("qmt_io4.csv", "");
  CHECK_THROWS_AS(read_numeric_csv(p4), std::invalid_argument);
  for (const auto& p : {p1, p2, p3, p4}) std::filesystem::remove(p);
}

TEST_CASE("two group csv") {
  const std::string p = write_temp("qmt_io5.csv", "value,group\n1,x\n2,y\n3,x\n");
  const auto d = read_two_group_csv(p);
  CHECK(d.x == std::vector<double>{1, 3});
  CHECK(d.y == std::vector<double>{2});
  const std::string bad = write_temp("qmt_io6.csv", "1,x\n2,z\n");
  CHECK_THROWS_AS(read_two_group_csv(bad), std::invalid_argument);
  const std::string single = write_temp("qmt_io7.csv", "1,x\n2,x\n");
  CHECK_THROWS_AS(read_two_group_csv(single), std::invalid_argument);
  for (const auto& q : {p, bad, single}) std::filesystem::remove(q);
}

TEST_CASE("rd and conditional csv") {
  const std::string p = write_temp("qmt_io8.csv", "y,z\n1,-0.5\n2,0.5\n");
  const auto d = read_rd_csv(p);
  CHECK(d.y == std::vector<double>{1, 2});
  CHECK(d.z == std::vector<double>{-0.5, 0.5});

  const std::string c = write_temp("qmt_io9.csv", "y,t,x1,x2\n1,0,0.1,3\n2,1,0.2,4\n");
  const auto cd = read_cond_csv(c);
  CHECK(cd.t == std::vector<int>{0, 1});
  CHECK(cd.x[1] == std::vector<double>{0.2, 4.0});
  const std::string badt = write_temp("qmt_io10.csv", "1,2,0.1\n");
  CHECK_THROWS_AS(read_cond_csv(badt), std::invalid_argument);
  for (const auto& q : {p, c, badt}) std::filesystem::remove(q);
}

TEST_CASE("atomic write replaces the file completely") {
  const std::string p =
      (std::filesystem::temp_directory_path() / "qmt_io_atomic.txt").string();
  write_file_atomic(p, "first\n");
  write_file_atomic(p, "second\n");
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line == "second");
  CHECK_FALSE(std::filesystem::exists(p + ".tmp"));
  std::filesystem::remove(p);
}
