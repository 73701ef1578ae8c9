// Python bindings for the main operations.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qmt/calibration.hpp"
#include "qmt/extensions.hpp"
#include "qmt/ks.hpp"
#include "qmt/mtp1.hpp"
#include "qmt/mtp2.hpp"
#include "qmt/quantile2.hpp"
#include "qmt/sampling.hpp"
#include "qmt/simlab.hpp"
#include "qmt/special.hpp"
#include "qmt/stepdown1.hpp"

namespace py = pybind11;
using namespace qmt;

namespace {

Sides parse_sides(const std::string& s) { return sides_from_string(s); }

py::dict interval_dict(const RejectionInterval& iv) {
  py::dict d;
  d["side"] = to_string(iv.side);
  d["tau_lo"] = iv.tau_lo;
  d["tau_hi"] = iv.tau_hi;
  d["r_lo"] = iv.r_lo;
  d["r_hi"] = iv.r_hi;
  d["witness_k"] = iv.witness;
  return d;
}

py::list rejections_list(const RejectionSet& rs) {
  py::list out;
  for (const auto& iv : rs.intervals) out.append(interval_dict(iv));
  return out;
}

py::dict calibration_dict(const Calibration& c) {
  py::dict d;
  d["alpha"] = c.alpha;
  d["tilde_alpha"] = c.tilde_alpha;
  d["sides"] = to_string(c.sides);
  d["n_x"] = c.n_x;
  d["n_y"] = c.n_y;
  d["alpha_low"] = c.alpha_low;
  d["alpha_high"] = c.alpha_high;
  d["json"] = c.to_json();
  return d;
}

Calibration formula_or_mc_2s(double alpha, int nx, int ny, const std::string& sides,
                             const std::string& scheme, long long reps, std::uint64_t seed) {
  RngStream rng(seed);
  return tilde_alpha_mc_2s(alpha, nx, ny, parse_sides(sides),
                           scheme == "permutation" ? TwoSampleScheme::permutation
                                                   : TwoSampleScheme::uniform_sim,
                           reps, rng);
}

NullModel make_null(const std::string& kind, double a, double b) {
  if (kind == "uniform") return NullModel::uniform(a, b);
  if (kind == "normal") return NullModel::normal(a, b);
  throw std::invalid_argument("null kind must be uniform or normal (use null_table for tables)");
}

}  // namespace

PYBIND11_MODULE(_qmt, m) {
  m.doc() = "multiple testing across quantiles and CDF values";

  m.def("beta_cdf", [](double k, double mshape, double x) { return beta_cdf(k, mshape, x); },
        py::arg("k"), py::arg("m"), py::arg("x"));
  m.def("beta_quantile",
        [](double k, double mshape, double q) { return beta_quantile(k, mshape, q); },
        py::arg("k"), py::arg("m"), py::arg("q"));
  m.def("binomial_cdf", &binomial_cdf, py::arg("m"), py::arg("n"), py::arg("p"));
  m.def("kolmogorov_critical", &kolmogorov_critical, py::arg("alpha"));
  m.def("tilde_alpha_formula", &tilde_alpha_formula, py::arg("alpha"), py::arg("n"));
  m.def("one_sided_adjust", &one_sided_adjust, py::arg("alpha1"));

  m.def(
      "simulate_fwer_1s",
      [](double tilde_alpha, int n, const std::string& sides, long long reps,
         std::uint64_t seed, int threads) {
        return simulate_fwer_1s(tilde_alpha, n, parse_sides(sides), reps, RngStream(seed),
                                threads);
      },
      py::arg("tilde_alpha"), py::arg("n"), py::arg("sides") = "two_sided",
      py::arg("reps") = 200000, py::arg("seed") = 1, py::arg("threads") = 0);

  m.def(
      "calibrate_1s",
      [](double alpha, int n, const std::string& sides) {
        return calibration_dict(calibrate_formula_1s(alpha, n, parse_sides(sides)));
      },
      py::arg("alpha"), py::arg("n"), py::arg("sides") = "two_sided");

  m.def(
      "calibrate_2s",
      [](double alpha, int nx, int ny, const std::string& sides, const std::string& scheme,
         long long reps, std::uint64_t seed) {
        return calibration_dict(formula_or_mc_2s(alpha, nx, ny, sides, scheme, reps, seed));
      },
      py::arg("alpha"), py::arg("nx"), py::arg("ny"), py::arg("sides") = "two_sided",
      py::arg("scheme") = "uniform_sim", py::arg("reps") = 200000, py::arg("seed") = 1);

  m.def(
      "run_mtp_1s",
      [](const std::vector<double>& data, const std::string& null_kind, double a, double b,
         double alpha, const std::string& sides) {
        const Sample s(data);
        const NullModel null = make_null(null_kind, a, b);
        const auto res =
            run_mtp_1s(s, null, calibrate_formula_1s(alpha, s.n(), parse_sides(sides)));
        py::dict d;
        d["rejections"] = rejections_list(res.rejections);
        d["tilde_alpha"] = res.calibration.tilde_alpha;
        d["had_ties"] = res.had_ties;
        return d;
      },
      py::arg("data"), py::arg("null_kind") = "uniform", py::arg("a") = 0.0,
      py::arg("b") = 1.0, py::arg("alpha") = 0.1, py::arg("sides") = "two_sided");

  m.def(
      "gof_pvalue_1s",
      [](const std::vector<double>& data, const std::string& null_kind, double a, double b,
         const std::string& sides) {
        const auto p =
            gof_pvalue_1s(Sample(data), make_null(null_kind, a, b), parse_sides(sides));
        py::dict d;
        d["value"] = p.value;
        d["censored_low"] = p.censored_low;
        d["censored_high"] = p.censored_high;
        return d;
      },
      py::arg("data"), py::arg("null_kind") = "uniform", py::arg("a") = 0.0,
      py::arg("b") = 1.0, py::arg("sides") = "two_sided");

  m.def(
      "confidence_band_1s",
      [](const std::vector<double>& data, double alpha) {
        const Band b = confidence_band_1s(Sample(data), alpha);
        py::dict d;
        d["x"] = b.x;
        d["lower"] = b.lower;
        d["upper"] = b.upper;
        d["csv"] = b.to_csv();
        return d;
      },
      py::arg("data"), py::arg("alpha") = 0.1);

  m.def(
      "stepdown_1s",
      [](const std::vector<double>& data, const std::string& null_kind, double a, double b,
         double alpha, const std::string& sides, std::uint64_t seed) {
        StepdownOptions opt;
        opt.seed = seed;
        const Sample s(data);
        const auto res = stepdown_1s(s, make_null(null_kind, a, b),
                                     calibrate_formula_1s(alpha, s.n(), parse_sides(sides)),
                                     opt);
        py::dict d;
        d["rejections"] = rejections_list(res.rejections);
        d["trace"] = trace_to_json(res.trace);
        return d;
      },
      py::arg("data"), py::arg("null_kind") = "uniform", py::arg("a") = 0.0,
      py::arg("b") = 1.0, py::arg("alpha") = 0.1, py::arg("sides") = "lower",
      py::arg("seed") = 0x51ab1e);

  m.def(
      "run_mtp_2s",
      [](const std::vector<double>& x, const std::vector<double>& y, double alpha,
         const std::string& sides, const std::string& scheme, long long reps,
         std::uint64_t seed) {
        const Sample sx(x), sy(y);
        const auto calib =
            formula_or_mc_2s(alpha, sx.n(), sy.n(), sides, scheme, reps, seed);
        const auto res = run_mtp_2s(sx, sy, calib);
        py::dict d;
        d["rejections"] = rejections_list(res.rejections);
        d["calibration"] = calibration_dict(calib);
        d["bands_csv"] = res.bands.to_csv();
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("alpha") = 0.1, py::arg("sides") = "two_sided",
      py::arg("scheme") = "uniform_sim", py::arg("reps") = 200000, py::arg("seed") = 1);

  m.def(
      "gof_pvalue_2s",
      [](const std::vector<double>& x, const std::vector<double>& y, const std::string& sides,
         const std::string& scheme, long long reps, std::uint64_t seed) {
        const auto res = gof_pvalue_2s(Sample(x), Sample(y), parse_sides(sides),
                                       scheme == "permutation"
                                           ? TwoSampleScheme::permutation
                                           : TwoSampleScheme::uniform_sim,
                                       reps, RngStream(seed));
        py::dict d;
        d["p_value"] = res.p_value;
        d["critical_level"] = res.critical_level;
        d["exhaustive"] = res.exhaustive;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("sides") = "two_sided",
      py::arg("scheme") = "permutation", py::arg("reps") = 100000, py::arg("seed") = 1);

  m.def(
      "joint_quantile_ci_2s",
      [](const std::vector<double>& x, const std::vector<double>& y, double alpha,
         const std::string& sides, std::uint64_t seed) {
        QuantileTaskOptions opt;
        opt.seed = seed;
        const auto res =
            joint_quantile_ci_2s(Sample(x), Sample(y), alpha, parse_sides(sides), opt);
        py::list cis;
        for (const auto& ci : res.cis) {
          py::dict c;
          c["tau"] = ci.tau;
          c["delta_lo"] = ci.delta_lo;
          c["delta_hi"] = ci.delta_hi;
          c["rejected"] = ci.rejected;
          cis.append(c);
        }
        py::dict d;
        d["cis"] = cis;
        d["rejected_js"] = res.rejected_js;
        d["tilde_alpha"] = res.tilde_alpha_final;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("alpha") = 0.1, py::arg("sides") = "two_sided",
      py::arg("seed") = 0xd15c);

  m.def(
      "ks_mtp_1s",
      [](const std::vector<double>& data, const std::string& null_kind, double a, double b,
         double alpha, const std::string& sides, const std::string& mode, long long reps,
         std::uint64_t seed) {
        const auto res = ks_mtp_1s(Sample(data), make_null(null_kind, a, b), alpha,
                                   parse_sides(sides),
                                   mode == "exact" ? KsMode::exact : KsMode::asymptotic,
                                   reps, RngStream(seed));
        py::dict d;
        d["statistic"] = res.statistic;
        d["critical_value"] = res.critical_value;
        d["p_value"] = res.p_value;
        d["rejections"] = rejections_list(res.rejections);
        return d;
      },
      py::arg("data"), py::arg("null_kind") = "uniform", py::arg("a") = 0.0,
      py::arg("b") = 1.0, py::arg("alpha") = 0.1, py::arg("sides") = "two_sided",
      py::arg("mode") = "exact", py::arg("reps") = 200000, py::arg("seed") = 1);

  m.def(
      "rd_mtp",
      [](const std::vector<double>& y, const std::vector<double>& z, double cutoff, int q,
         double alpha, const std::string& sides, long long reps, std::uint64_t seed) {
        RdSpec spec;
        spec.y = y;
        spec.z = z;
        spec.cutoff = cutoff;
        spec.q = q;
        const auto calib = formula_or_mc_2s(alpha, q, q, sides, "uniform_sim", reps, seed);
        const auto res = rd_mtp(spec, calib);
        py::dict d;
        d["rejections"] = rejections_list(res.rejections);
        d["calibration"] = calibration_dict(calib);
        return d;
      },
      py::arg("y"), py::arg("z"), py::arg("cutoff"), py::arg("q"), py::arg("alpha") = 0.1,
      py::arg("sides") = "two_sided", py::arg("reps") = 200000, py::arg("seed") = 1);

  m.def(
      "quantile_counterexample",
      [](double alpha, int nx, int ny) {
        const auto ce = quantile_fwer_counterexample_check(alpha, nx, ny);
        py::dict d;
        d["tilde_alpha"] = ce.tilde_alpha;
        d["step_edge"] = ce.step_edge;
        d["quantile_fwer"] = ce.quantile_fwer;
        d["m_upper"] = ce.m_upper;
        d["m_lower"] = ce.m_lower;
        return d;
      },
      py::arg("alpha") = 0.05, py::arg("nx") = 6, py::arg("ny") = 12);

  m.def(
      "run_scenario",
      [](const std::string& scenario, long long reps, std::uint64_t seed,
         const std::string& data_dir) {
        RngStream rng(seed);
        SimReport rep;
        if (scenario == "table7") {
          rep = run_power_table(reps, rng);
        } else if (scenario == "library" || scenario == "fundraising") {
          rep = run_empirical_dgp(scenario, data_dir, reps, rng);
        } else {
          rep = run_fwer_table(scenario, reps, rng);
        }
        rep.seed = seed;
        return rep.to_json();
      },
      py::arg("scenario"), py::arg("reps") = 10000, py::arg("seed") = 1,
      py::arg("data_dir") = "data");
}
