// Command line front end: batch analyses over CSV inputs, machine
// readable JSON/CSV outputs. Exit codes: 0 success, 2 bad input or
// arguments, 3 internal numeric failure.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmt/calibration.hpp"
#include "qmt/extensions.hpp"
#include "qmt/io.hpp"
#include "qmt/ks.hpp"
#include "qmt/mtp1.hpp"
#include "qmt/mtp2.hpp"
#include "qmt/quantile2.hpp"
#include "qmt/simlab.hpp"
#include "qmt/special.hpp"
#include "qmt/stepdown1.hpp"

namespace {

using nlohmann::json;

struct Common {
  std::string output;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--output", c.output, "write the primary artifact here (default stdout)");
  cmd->add_option("--format", c.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", c.seed, "seed for randomized steps (logged when generated)");
  cmd->add_option("--threads", c.threads, "worker threads for Monte Carlo (0 = all)");
}

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::fprintf(stderr, "seed: %llu\n", static_cast<unsigned long long>(s));
  return s;
}

void emit(const Common& c, const std::string& content) {
  if (c.output.empty()) {
    std::fputs(content.c_str(), stdout);
    if (!content.empty() && content.back() != '\n') std::fputc('\n', stdout);
  } else {
    qmt::write_file_atomic(c.output, content);
  }
}

qmt::NullModel parse_null(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto two_nums = [&](double& a, double& b) {
    const auto comma = args.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("null spec needs two parameters: " + spec);
    }
    a = std::stod(args.substr(0, comma));
    b = std::stod(args.substr(comma + 1));
  };
  if (kind == "uniform") {
    double a, b;
    two_nums(a, b);
    return qmt::NullModel::uniform(a, b);
  }
  if (kind == "normal") {
    double mu, sigma;
    two_nums(mu, sigma);
    return qmt::NullModel::normal(mu, sigma);
  }
  if (kind == "table") {
    return qmt::NullModel::table(qmt::read_tau_q_csv(args));
  }
  throw std::invalid_argument("unknown null kind: " + kind);
}

json rejections_json(const qmt::RejectionSet& rs) { return json::parse(rs.to_json()); }

json pvalue_json(const qmt::PValue& p) {
  json j;
  j["value"] = p.value;
  if (p.censored_low) j["censored"] = "low";
  if (p.censored_high) j["censored"] = "high";
  j["display"] = p.display();
  return j;
}

std::string resolve_table_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("QMTP_TABLE_PATH")) return env;
  return {};
}

// ---------------- test1 ----------------

struct Test1Args {
  Common common;
  std::string input, null_spec = "uniform:0,1", method = "dirichlet", sides = "two_sided";
  std::string band_out;
  double alpha = 0.1;
  long long mc_reps = 200000;
  bool stepdown = false, pretest = false, hull = false;
};

int run_test1(const Test1Args& a) {
  const qmt::Sample sample(qmt::read_numeric_csv(a.input));
  const qmt::NullModel null = parse_null(a.null_spec);
  const qmt::Sides sides = qmt::sides_from_string(a.sides);
  const std::uint64_t seed = resolve_seed(a.common);
  if (sample.tie_count() > 0) {
    std::fprintf(stderr,
                 "warning: %d tied observations; the procedures are conservative for "
                 "discrete data\n",
                 sample.tie_count());
  }

  json out;
  out["command"] = "test1";
  out["n"] = sample.n();
  out["alpha"] = a.alpha;
  out["sides"] = a.sides;
  out["method"] = a.method;

  if (a.method == "dirichlet") {
    const qmt::Calibration calib = qmt::calibrate_formula_1s(a.alpha, sample.n(), sides);
    out["calibration"] = json::parse(calib.to_json());
    qmt::RejectionSet rejections;
    if (a.pretest && sides != qmt::Sides::two_sided) {
      qmt::StepdownOptions opt;
      opt.threads = a.common.threads;
      opt.seed = seed;
      rejections = qmt::pretest_then_stepdown_1s(sample, null, calib, opt).rejections;
      out["booster"] = "pretest_stepdown";
    } else if (a.stepdown) {
      qmt::StepdownOptions opt;
      opt.threads = a.common.threads;
      opt.seed = seed;
      const auto sd = qmt::stepdown_1s(sample, null, calib, opt);
      rejections = sd.rejections;
      out["trace"] = json::parse(qmt::trace_to_json(sd.trace));
      out["booster"] = "stepdown";
    } else {
      rejections = qmt::run_mtp_1s(sample, null, calib).rejections;
    }
    if (a.hull) rejections = qmt::apply_shape_restriction(rejections);
    out["rejections"] = rejections_json(rejections);
    out["gof_pvalue"] = pvalue_json(qmt::gof_pvalue_1s(sample, null, sides));
    const qmt::Band band = qmt::confidence_band_1s(sample, a.alpha);
    if (!a.band_out.empty()) qmt::write_file_atomic(a.band_out, band.to_csv());
    if (a.common.format == "csv") {
      emit(a.common, band.to_csv());
      return 0;
    }
  } else if (a.method == "ks" || a.method == "weighted_ks") {
    qmt::RngStream rng(seed);
    const qmt::KsResult res =
        a.method == "ks"
            ? qmt::ks_mtp_1s(sample, null, a.alpha, sides, qmt::KsMode::exact, a.mc_reps,
                             rng, a.common.threads)
            : qmt::weighted_ks_mtp_1s(sample, null, a.alpha, a.mc_reps, rng,
                                      a.common.threads);
    out["statistic"] = res.statistic;
    out["critical_value"] = res.critical_value;
    out["p_value"] = res.p_value;
    auto rejections = res.rejections;
    if (a.hull) rejections = qmt::apply_shape_restriction(rejections);
    out["rejections"] = rejections_json(rejections);
    if (a.common.format == "csv") {
      emit(a.common, rejections.to_json());
      return 0;
    }
  } else {
    throw std::invalid_argument("test1: unknown method " + a.method);
  }
  emit(a.common, out.dump(2));
  return 0;
}

// ---------------- test2 / rd / cond ----------------

struct Test2Args {
  Common common;
  std::string input, method = "dirichlet", sides = "two_sided", scheme = "uniform_sim";
  std::string band_out, table_path;
  double alpha = 0.1;
  long long mc_reps = 200000;
  bool hull = false;
};

qmt::Calibration calibrate_2s_auto(const Test2Args& a, int nx, int ny, qmt::Sides sides,
                                   std::uint64_t seed) {
  const std::string table = resolve_table_path(a.table_path);
  if (!table.empty() && sides == qmt::Sides::two_sided) {
    try {
      return qmt::ReferenceTable::load(table).lookup(a.alpha, nx, ny);
    } catch (const std::out_of_range&) {
      std::fprintf(stderr, "table miss for (%g, %d, %d); calibrating by simulation\n",
                   a.alpha, nx, ny);
    }
  }
  const auto scheme = a.scheme == "permutation" ? qmt::TwoSampleScheme::permutation
                                                : qmt::TwoSampleScheme::uniform_sim;
  qmt::RngStream rng(seed, 0x2a);
  auto calib =
      qmt::tilde_alpha_mc_2s(a.alpha, nx, ny, sides, scheme, a.mc_reps, rng, a.common.threads);
  std::fprintf(stderr, "calibrated pointwise level: %.6g (attainable rate %.6g)\n",
               calib.tilde_alpha, calib.alpha_low);
  return calib;
}

int run_two_sample(const Test2Args& a, const std::vector<double>& xs,
                   const std::vector<double>& ys, const char* command) {
  const qmt::Sample x(xs), y(ys);
  const qmt::Sides sides = qmt::sides_from_string(a.sides);
  const std::uint64_t seed = resolve_seed(a.common);
  json out;
  out["command"] = command;
  out["n_x"] = x.n();
  out["n_y"] = y.n();
  out["alpha"] = a.alpha;
  out["sides"] = a.sides;
  out["method"] = a.method;

  if (a.method == "dirichlet") {
    const qmt::Calibration calib = calibrate_2s_auto(a, x.n(), y.n(), sides, seed);
    const auto res = qmt::run_mtp_2s(x, y, calib);
    if (res.had_cross_ties) {
      std::fprintf(stderr, "warning: ties across the samples; results are conservative\n");
    }
    out["calibration"] = json::parse(calib.to_json());
    auto rejections = res.rejections;
    if (a.hull) rejections = qmt::apply_shape_restriction(rejections);
    out["rejections"] = rejections_json(rejections);
    qmt::RngStream prng(seed, 0x60f);
    const auto gof = qmt::gof_pvalue_2s(
        x, y, sides,
        a.scheme == "permutation" ? qmt::TwoSampleScheme::permutation
                                  : qmt::TwoSampleScheme::uniform_sim,
        a.mc_reps, prng, a.common.threads);
    out["gof_pvalue"] = {{"value", gof.p_value}, {"exhaustive", gof.exhaustive}};
    if (!a.band_out.empty()) {
      qmt::write_file_atomic(a.band_out, res.bands.to_csv());
    }
    if (a.common.format == "csv") {
      emit(a.common, res.bands.to_csv());
      return 0;
    }
  } else if (a.method == "ks") {
    qmt::RngStream rng(seed);
    const auto res = qmt::ks_mtp_2s(x, y, a.alpha, sides, qmt::KsMode::exact, a.mc_reps,
                                    rng, a.common.threads);
    out["statistic"] = res.statistic;
    out["critical_value"] = res.critical_value;
    out["p_value"] = res.p_value;
    out["rejections"] = rejections_json(res.rejections);
  } else if (a.method == "joint" || a.method == "stepdown" ||
             a.method == "pretest_stepdown") {
    qmt::QuantileTaskOptions opt;
    opt.seed = seed;
    opt.threads = a.common.threads;
    const auto res = a.method == "joint"
                         ? qmt::joint_quantile_ci_2s(x, y, a.alpha, sides, opt)
                     : a.method == "stepdown"
                         ? qmt::stepdown_2s(x, y, a.alpha, sides, opt)
                         : qmt::pretest_then_stepdown_2s(x, y, a.alpha, sides, opt);
    out["tilde_alpha"] = res.tilde_alpha_final;
    out["iterations"] = res.iterations;
    json cis = json::array();
    for (const auto& ci : res.cis) {
      cis.push_back({{"tau", ci.tau},
                     {"delta_lo", std::isinf(ci.delta_lo) ? json("-inf") : json(ci.delta_lo)},
                     {"delta_hi", std::isinf(ci.delta_hi) ? json("inf") : json(ci.delta_hi)},
                     {"rejected", ci.rejected}});
    }
    out["cis"] = cis;
    out["rejected_js"] = res.rejected_js;
  } else {
    throw std::invalid_argument("two-sample: unknown method " + a.method);
  }
  emit(a.common, out.dump(2));
  return 0;
}

// ---------------- calibrate / table / simulate ----------------

int main_impl(int argc, char** argv) {
  CLI::App app{"multiple testing across quantiles and CDF values"};
  app.require_subcommand(1);

  // test1
  Test1Args t1;
  auto* c_test1 = app.add_subcommand("test1", "one-sample analysis against a null model");
  c_test1->add_option("--input", t1.input, "CSV with one numeric column")->required();
  c_test1->add_option("--null", t1.null_spec, "uniform:a,b | normal:mu,sigma | table:path");
  c_test1->add_option("--alpha", t1.alpha, "familywise level");
  c_test1->add_option("--method", t1.method, "dirichlet | ks | weighted_ks");
  c_test1->add_option("--sides", t1.sides, "lower | upper | two_sided");
  c_test1->add_option("--mc-reps", t1.mc_reps, "Monte Carlo replications");
  c_test1->add_option("--band-out", t1.band_out, "write the confidence band CSV here");
  c_test1->add_flag("--stepdown", t1.stepdown, "apply the stepdown booster");
  c_test1->add_flag("--pretest", t1.pretest, "pre-test then stepdown (one-sided)");
  c_test1->add_flag("--hull", t1.hull, "contiguity shape restriction");
  add_common(c_test1, t1.common);

  // test2
  Test2Args t2;
  auto* c_test2 = app.add_subcommand("test2", "two-sample comparison");
  c_test2->add_option("--input", t2.input, "CSV with columns value,group (x|y)")->required();
  c_test2->add_option("--alpha", t2.alpha, "familywise level");
  c_test2->add_option("--method", t2.method,
                      "dirichlet | ks | joint | stepdown | pretest_stepdown");
  c_test2->add_option("--sides", t2.sides, "lower | upper | two_sided");
  c_test2->add_option("--scheme", t2.scheme, "uniform_sim | permutation");
  c_test2->add_option("--mc-reps", t2.mc_reps, "Monte Carlo replications");
  c_test2->add_option("--table", t2.table_path,
                      "reference table CSV (default: QMTP_TABLE_PATH)");
  c_test2->add_option("--band-out", t2.band_out, "write the band CSV here");
  c_test2->add_flag("--hull", t2.hull, "contiguity shape restriction");
  add_common(c_test2, t2.common);

  // rd
  Test2Args trd;
  double cutoff = 0.0;
  int q = 0;
  auto* c_rd = app.add_subcommand("rd", "regression discontinuity front end");
  c_rd->add_option("--input", trd.input, "CSV with columns y,z")->required();
  c_rd->add_option("--cutoff", cutoff, "threshold of the running variable")->required();
  c_rd->add_option("--q", q, "observations kept on each side")->required();
  c_rd->add_option("--alpha", trd.alpha, "familywise level");
  c_rd->add_option("--sides", trd.sides, "lower | upper | two_sided");
  c_rd->add_option("--scheme", trd.scheme, "uniform_sim | permutation");
  c_rd->add_option("--mc-reps", trd.mc_reps, "Monte Carlo replications");
  c_rd->add_option("--table", trd.table_path, "reference table CSV");
  c_rd->add_option("--band-out", trd.band_out, "write the band CSV here");
  add_common(c_rd, trd.common);

  // cond
  Test2Args tcd;
  std::string x0_spec, weights_spec;
  int q0 = 0, q1 = 0;
  auto* c_cond = app.add_subcommand("cond", "conditional distribution comparison");
  c_cond->add_option("--input", tcd.input, "CSV with columns y,t,x1..xd")->required();
  c_cond->add_option("--x0", x0_spec, "comma separated covariate point")->required();
  c_cond->add_option("--q0", q0, "neighborhood size, untreated arm")->required();
  c_cond->add_option("--q1", q1, "neighborhood size, treated arm")->required();
  c_cond->add_option("--weights", weights_spec, "comma separated norm weights");
  c_cond->add_option("--alpha", tcd.alpha, "familywise level");
  c_cond->add_option("--sides", tcd.sides, "lower | upper | two_sided");
  c_cond->add_option("--scheme", tcd.scheme, "uniform_sim | permutation");
  c_cond->add_option("--mc-reps", tcd.mc_reps, "Monte Carlo replications");
  c_cond->add_option("--table", tcd.table_path, "reference table CSV");
  add_common(c_cond, tcd.common);

  // calibrate
  Common cc;
  double cal_alpha = 0.1;
  int cal_n = 0, cal_nx = 0, cal_ny = 0;
  std::string cal_sides = "two_sided", cal_source = "auto", cal_scheme = "uniform_sim";
  long long cal_reps = 200000;
  std::string cal_table;
  auto* c_cal = app.add_subcommand("calibrate", "compute a pointwise level");
  c_cal->add_option("--alpha", cal_alpha, "familywise level")->required();
  c_cal->add_option("--n", cal_n, "one-sample size");
  c_cal->add_option("--nx", cal_nx, "first sample size");
  c_cal->add_option("--ny", cal_ny, "second sample size");
  c_cal->add_option("--sides", cal_sides, "lower | upper | two_sided");
  c_cal->add_option("--source", cal_source, "auto | formula | mc | table");
  c_cal->add_option("--scheme", cal_scheme, "uniform_sim | permutation");
  c_cal->add_option("--mc-reps", cal_reps, "Monte Carlo replications");
  c_cal->add_option("--table", cal_table, "reference table CSV");
  add_common(c_cal, cc);

  // table generate
  Common tg;
  double tg_alpha = 0.1;
  int tg_nx = 0, tg_ny = 0;
  long long tg_reps = 200000;
  std::string tg_scheme = "uniform_sim", tg_path;
  auto* c_table = app.add_subcommand("table", "reference table maintenance");
  auto* c_gen = c_table->add_subcommand("generate", "add or refresh one entry");
  c_gen->add_option("--alpha", tg_alpha, "familywise level")->required();
  c_gen->add_option("--nx", tg_nx, "first sample size")->required();
  c_gen->add_option("--ny", tg_ny, "second sample size")->required();
  c_gen->add_option("--scheme", tg_scheme, "uniform_sim | permutation");
  c_gen->add_option("--mc-reps", tg_reps, "Monte Carlo replications");
  c_gen->add_option("--table", tg_path, "table path (default: QMTP_TABLE_PATH)");
  add_common(c_gen, tg);

  // simulate
  Common sc;
  std::string sim_scenario, sim_method = "dirichlet", sim_data_dir = "data";
  long long sim_reps = 10000;
  int sim_n = 20;
  double sim_alpha = 0.1;
  auto* c_sim = app.add_subcommand("simulate", "run a study scenario");
  c_sim->add_option("--scenario", sim_scenario,
                    "table1 | table2 | table3 | table4 | table7 | pointwise | library | "
                    "fundraising")
      ->required();
  c_sim->add_option("--reps", sim_reps, "replications");
  c_sim->add_option("--method", sim_method, "pointwise curves: dirichlet | dirichlet2 | ks | weighted_ks");
  c_sim->add_option("--n", sim_n, "pointwise curves: sample size");
  c_sim->add_option("--alpha", sim_alpha, "pointwise curves: familywise level");
  c_sim->add_option("--data-dir", sim_data_dir, "directory with the bundled DGP tables");
  add_common(c_sim, sc);

  CLI11_PARSE(app, argc, argv);

  if (c_test1->parsed()) return run_test1(t1);
  if (c_test2->parsed()) {
    const auto d = qmt::read_two_group_csv(t2.input);
    return run_two_sample(t2, d.x, d.y, "test2");
  }
  if (c_rd->parsed()) {
    const auto d = qmt::read_rd_csv(trd.input);
    qmt::RdSpec spec;
    spec.y = d.y;
    spec.z = d.z;
    spec.cutoff = cutoff;
    spec.q = q;
    const qmt::LocalSamples ls = qmt::rd_select(spec);
    return run_two_sample(trd, ls.left, ls.right, "rd");
  }
  if (c_cond->parsed()) {
    const auto d = qmt::read_cond_csv(tcd.input);
    qmt::CondSpec spec;
    spec.y = d.y;
    spec.t = d.t;
    spec.x = d.x;
    spec.q0 = q0;
    spec.q1 = q1;
    for (const auto& part : {std::make_pair(&spec.x0, x0_spec),
                             std::make_pair(&spec.weights, weights_spec)}) {
      std::string cur;
      for (char ch : part.second + ",") {
        if (ch == ',') {
          if (!cur.empty()) part.first->push_back(std::stod(cur));
          cur.clear();
        } else {
          cur.push_back(ch);
        }
      }
    }
    const qmt::LocalSamples ls = qmt::conditional_select(spec);
    return run_two_sample(tcd, ls.left, ls.right, "cond");
  }
  if (c_cal->parsed()) {
    const std::uint64_t seed = resolve_seed(cc);
    const qmt::Sides sides = qmt::sides_from_string(cal_sides);
    qmt::Calibration calib;
    if (cal_n > 0) {
      if (cal_source == "mc") {
        qmt::CalibAccuracy acc = qmt::CalibAccuracy::for_alpha(cal_alpha);
        acc.replications = cal_reps;
        acc.tolerance = acc.derived_tolerance(cal_alpha);
        calib = qmt::tilde_alpha_mc_1s(cal_alpha, cal_n, sides, acc, qmt::RngStream(seed),
                                       cc.threads);
      } else {
        if (cal_alpha < 0.001 || cal_alpha > 0.9) {
          std::fprintf(stderr,
                       "warning: alpha outside the formula's documented range [0.001, 0.9]\n");
        }
        calib = qmt::calibrate_formula_1s(cal_alpha, cal_n, sides);
      }
    } else if (cal_nx > 0 && cal_ny > 0) {
      const std::string table = resolve_table_path(cal_table);
      if (cal_source == "table" || (cal_source == "auto" && !table.empty())) {
        calib = qmt::ReferenceTable::load(table).lookup(cal_alpha, cal_nx, cal_ny,
                                                        cal_source == "auto");
      } else {
        const auto scheme = cal_scheme == "permutation" ? qmt::TwoSampleScheme::permutation
                                                        : qmt::TwoSampleScheme::uniform_sim;
        calib = qmt::tilde_alpha_mc_2s(cal_alpha, cal_nx, cal_ny, sides, scheme, cal_reps,
                                       qmt::RngStream(seed), cc.threads);
      }
    } else {
      throw std::invalid_argument("calibrate: pass --n or both --nx and --ny");
    }
    emit(cc, calib.to_json());
    return 0;
  }
  if (c_gen->parsed()) {
    const std::uint64_t seed = resolve_seed(tg);
    std::string path = resolve_table_path(tg_path);
    if (path.empty()) throw std::invalid_argument("table generate: no table path given");
    const auto scheme = tg_scheme == "permutation" ? qmt::TwoSampleScheme::permutation
                                                   : qmt::TwoSampleScheme::uniform_sim;
    const auto calib = qmt::tilde_alpha_mc_2s(tg_alpha, tg_nx, tg_ny, qmt::Sides::two_sided,
                                              scheme, tg_reps, qmt::RngStream(seed),
                                              tg.threads);
    qmt::ReferenceTable t;
    try {
      t = qmt::ReferenceTable::load(path);
    } catch (const std::runtime_error&) {
      // start a fresh table
    }
    t.upsert({tg_alpha, tg_nx, tg_ny, calib.tilde_alpha, calib.alpha_low, calib.alpha_high});
    t.save(path);
    emit(tg, calib.to_json());
    return 0;
  }
  if (c_sim->parsed()) {
    const std::uint64_t seed = resolve_seed(sc);
    qmt::RngStream rng(seed);
    std::string content;
    if (sim_scenario == "pointwise") {
      const auto curve =
          qmt::run_pointwise_rp(sim_method, sim_n, sim_alpha, sim_reps, rng, sc.threads);
      content = curve.to_csv();
    } else {
      qmt::SimReport rep;
      if (sim_scenario == "table7") {
        rep = qmt::run_power_table(sim_reps, rng, sc.threads);
      } else if (sim_scenario == "library" || sim_scenario == "fundraising") {
        rep = qmt::run_empirical_dgp(sim_scenario, sim_data_dir, sim_reps, rng, sc.threads);
      } else {
        rep = qmt::run_fwer_table(sim_scenario, sim_reps, rng, sc.threads);
      }
      rep.seed = seed;
      content = sc.format == "csv" ? rep.to_csv() : rep.to_json();
    }
    emit(sc, content);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const qmt::numeric_error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
