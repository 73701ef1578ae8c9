#include "qmt/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qmt {

LocalSamples rd_select(const RdSpec& spec) {
  if (spec.z.size() != spec.y.size()) {
    throw std::invalid_argument("rd_select: z and y lengths differ");
  }
  if (spec.q < 1) throw std::invalid_argument("rd_select: q must be positive");
  struct Row {
    double dist;
    size_t index;
  };
  std::vector<Row> left, right;
  for (size_t i = 0; i < spec.z.size(); ++i) {
    const double d = std::fabs(spec.z[i] - spec.cutoff);
    if (spec.z[i] < spec.cutoff) {
      left.push_back({d, i});
    } else {
      right.push_back({d, i});
    }
  }
  auto nearest = [&](std::vector<Row>& rows) {
    if (static_cast<int>(rows.size()) < spec.q) {
      throw std::invalid_argument("rd_select: fewer than q observations on one side");
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.dist != b.dist ? a.dist < b.dist : a.index < b.index;
    });
    std::vector<double> out(static_cast<size_t>(spec.q));
    for (int k = 0; k < spec.q; ++k) out[static_cast<size_t>(k)] = spec.y[rows[static_cast<size_t>(k)].index];
    return out;
  };
  return {nearest(left), nearest(right)};
}

Mtp2Result rd_mtp(const RdSpec& spec, const Calibration& calib) {
  const LocalSamples ls = rd_select(spec);
  return run_mtp_2s(Sample(ls.left), Sample(ls.right), calib);
}

LocalSamples conditional_select(const CondSpec& spec) {
  const size_t n = spec.y.size();
  if (spec.t.size() != n || spec.x.size() != n) {
    throw std::invalid_argument("conditional_select: column lengths differ");
  }
  if (spec.q0 < 1 || spec.q1 < 1) {
    throw std::invalid_argument("conditional_select: neighborhood sizes must be positive");
  }
  const size_t d = spec.x0.size();
  std::vector<double> w = spec.weights;
  if (w.empty()) w.assign(d, 1.0);
  if (w.size() != d) throw std::invalid_argument("conditional_select: weight length mismatch");

  struct Row {
    double dist;
    size_t index;
  };
  std::vector<Row> arm0, arm1;
  for (size_t i = 0; i < n; ++i) {
    if (spec.x[i].size() != d) {
      throw std::invalid_argument("conditional_select: covariate row length mismatch");
    }
    double s = 0.0;
    for (size_t c = 0; c < d; ++c) {
      const double diff = w[c] * (spec.x[i][c] - spec.x0[c]);
      s += diff * diff;
    }
    (spec.t[i] == 0 ? arm0 : arm1).push_back({std::sqrt(s), i});
  }
  auto nearest = [&](std::vector<Row>& rows, int q, const char* arm) {
    if (static_cast<int>(rows.size()) < q) {
      throw std::invalid_argument(std::string("conditional_select: arm ") + arm +
                                  " has fewer than q observations");
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.dist != b.dist ? a.dist < b.dist : a.index < b.index;
    });
    std::vector<double> out(static_cast<size_t>(q));
    for (int k = 0; k < q; ++k) out[static_cast<size_t>(k)] = spec.y[rows[static_cast<size_t>(k)].index];
    return out;
  };
  return {nearest(arm0, spec.q0, "t=0"), nearest(arm1, spec.q1, "t=1")};
}

Mtp2Result conditional_mtp(const CondSpec& spec, const Calibration& calib) {
  const LocalSamples ls = conditional_select(spec);
  return run_mtp_2s(Sample(ls.left), Sample(ls.right), calib);
}

}  // namespace qmt
