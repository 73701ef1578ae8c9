#pragma once

#include <vector>

#include "qmt/calibration.hpp"
#include "qmt/data.hpp"
#include "qmt/mtp2.hpp"

namespace qmt {

// Regression discontinuity: outcomes and a scalar running variable with a
// cutoff; the q nearest observations on each side form the two local
// samples. Observations at exactly the cutoff count as the right side.
struct RdSpec {
  std::vector<double> z;  // running variable
  std::vector<double> y;  // outcomes
  double cutoff = 0.0;
  int q = 1;
};

struct LocalSamples {
  std::vector<double> left;   // or control arm
  std::vector<double> right;  // or treated arm
};

LocalSamples rd_select(const RdSpec& spec);
Mtp2Result rd_mtp(const RdSpec& spec, const Calibration& calib);

// Conditional comparison at a covariate point: per treatment arm, order
// covariate rows by a weighted norm around x0 and keep the q_t nearest
// outcomes. Discrete coordinates get a dominating weight so mismatches
// are never preferred over exact cell matches.
struct CondSpec {
  std::vector<double> y;
  std::vector<int> t;                     // 0/1 treatment arm
  std::vector<std::vector<double>> x;     // covariate rows
  std::vector<double> x0;
  std::vector<double> weights;            // empty = all ones
  int q0 = 1;
  int q1 = 1;
};

LocalSamples conditional_select(const CondSpec& spec);
Mtp2Result conditional_mtp(const CondSpec& spec, const Calibration& calib);

}  // namespace qmt
