#include "qmt/rejection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace qmt {

namespace {

bool intersects(double a_lo, double a_hi, double lo, double hi) {
  // [a_lo, a_hi) vs closed [lo, hi]
  return a_lo <= hi && a_hi > lo;
}

nlohmann::json num_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double parse_num(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace

bool RejectionSet::any_tau_in(double lo, double hi) const {
  for (const auto& iv : intervals) {
    if (!std::isnan(iv.tau_lo) && intersects(iv.tau_lo, iv.tau_hi, lo, hi)) return true;
  }
  return false;
}

bool RejectionSet::any_r_in(double lo, double hi) const {
  for (const auto& iv : intervals) {
    if (intersects(iv.r_lo, iv.r_hi, lo, hi)) return true;
  }
  return false;
}

bool RejectionSet::contains(const RejectionSet& other) const {
  for (const auto& iv : other.intervals) {
    bool covered = false;
    for (const auto& mine : intervals) {
      if (mine.side == iv.side && mine.r_lo <= iv.r_lo && mine.r_hi >= iv.r_hi) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

std::vector<RejectionInterval> merge_intervals(std::vector<RejectionInterval> raw) {
  std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
    if (a.side != b.side) return a.side < b.side;
    return a.r_lo < b.r_lo;
  });
  std::vector<RejectionInterval> out;
  for (const auto& iv : raw) {
    if (!out.empty() && out.back().side == iv.side && iv.r_lo <= out.back().r_hi) {
      auto& last = out.back();
      if (iv.r_hi > last.r_hi) {
        last.r_hi = iv.r_hi;
        if (!std::isnan(iv.tau_hi)) last.tau_hi = std::max(last.tau_hi, iv.tau_hi);
      }
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

RejectionSet apply_shape_restriction(const RejectionSet& rej) {
  RejectionSet out;
  for (Side s : {Side::below, Side::above}) {
    RejectionInterval hull;
    bool any = false;
    for (const auto& iv : rej.intervals) {
      if (iv.side != s) continue;
      if (!any) {
        hull = iv;
        any = true;
      } else {
        if (iv.r_lo < hull.r_lo) {
          hull.r_lo = iv.r_lo;
          hull.tau_lo = std::min(hull.tau_lo, iv.tau_lo);
        }
        if (iv.r_hi > hull.r_hi) {
          hull.r_hi = iv.r_hi;
          hull.tau_hi = std::max(hull.tau_hi, iv.tau_hi);
        }
      }
    }
    if (any) out.intervals.push_back(hull);
  }
  std::sort(out.intervals.begin(), out.intervals.end(),
            [](const auto& a, const auto& b) { return a.r_lo < b.r_lo; });
  return out;
}

std::string RejectionSet::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& iv : intervals) {
    nlohmann::json j;
    j["side"] = to_string(iv.side);
    if (!std::isnan(iv.tau_lo)) {
      j["tau_lo"] = iv.tau_lo;
      j["tau_hi"] = iv.tau_hi;
    }
    j["r_lo"] = num_or_inf(iv.r_lo);
    j["r_hi"] = num_or_inf(iv.r_hi);
    j["witness_k"] = iv.witness;
    arr.push_back(j);
  }
  return arr.dump();
}

RejectionSet RejectionSet::from_json(const std::string& text) {
  RejectionSet out;
  const auto arr = nlohmann::json::parse(text);
  for (const auto& j : arr) {
    RejectionInterval iv;
    iv.side = j.at("side").get<std::string>() == "below" ? Side::below : Side::above;
    if (j.contains("tau_lo")) {
      iv.tau_lo = parse_num(j.at("tau_lo"));
      iv.tau_hi = parse_num(j.at("tau_hi"));
    } else {
      iv.tau_lo = iv.tau_hi = std::numeric_limits<double>::quiet_NaN();
    }
    iv.r_lo = parse_num(j.at("r_lo"));
    iv.r_hi = parse_num(j.at("r_hi"));
    iv.witness = j.at("witness_k").get<int>();
    out.intervals.push_back(iv);
  }
  return out;
}

}  // namespace qmt
