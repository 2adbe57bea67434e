// Command-line front end over the shared C library. Four subcommands:
//   eval      tagged-particle CDF through the contour series
//   simulate  Monte Carlo or master-equation oracle CDF
//   verify    identity and contour-stability suites
//   compare   series vs oracle on a shared grid, with pass/fail verdict
// Tables print to stdout as CSV (with a #key=value header) or JSON. Exit
// codes: 0 success, 1 usage or domain error, 2 when the series does not
// converge or a comparison criterion fails.
#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "asep/asep.h"
#include "json.hpp"

namespace {

using Json = nlohmann::json;

struct CliError {
  int code;
  std::string msg;
};

[[noreturn]] void fail(int code, std::string msg) {
  throw CliError{code, std::move(msg)};
}

[[noreturn]] void fail_api(const char* what) {
  fail(1, std::string(what) + ": " + asep_last_error());
}

struct ModelDel {
  void operator()(asep_model* m) const { asep_model_destroy(m); }
};
struct PlanDel {
  void operator()(asep_plan* p) const { asep_plan_destroy(p); }
};
struct MasterDel {
  void operator()(asep_master* s) const { asep_master_destroy(s); }
};
struct SimDel {
  void operator()(asep_sim* s) const { asep_sim_destroy(s); }
};
using ModelPtr = std::unique_ptr<asep_model, ModelDel>;
using PlanPtr = std::unique_ptr<asep_plan, PlanDel>;
using MasterPtr = std::unique_ptr<asep_master, MasterDel>;
using SimPtr = std::unique_ptr<asep_sim, SimDel>;

ModelPtr make_model(double p) {
  asep_model* m = nullptr;
  if (asep_model_create(p, &m) != ASEP_OK) fail_api("model");
  return ModelPtr(m);
}

PlanPtr make_plan(const asep_model* m) {
  asep_plan* pl = nullptr;
  if (asep_plan_create(m, ASEP_PLAN_TWO_SIDED, 1.15, &pl) != ASEP_OK)
    fail_api("contour plan");
  return PlanPtr(pl);
}

// Locale-independent shortest-exact formatting for CSV cells.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_scalar(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_float()) return fmt(v.get<double>());
  return v.dump();
}

// One output document: ordered header metadata plus a rectangular table.
struct Table {
  std::vector<std::pair<std::string, Json>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  void add(std::string key, Json value) {
    meta.emplace_back(std::move(key), std::move(value));
  }
};

void print_csv(const Table& tb) {
  std::string out;
  for (const auto& [k, v] : tb.meta) {
    out += '#';
    out += k;
    out += '=';
    out += csv_scalar(v);
    out += '\n';
  }
  for (std::size_t c = 0; c < tb.columns.size(); ++c) {
    if (c) out += ',';
    out += tb.columns[c];
  }
  out += '\n';
  for (const auto& row : tb.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += csv_scalar(row[c]);
    }
    out += '\n';
  }
  std::fputs(out.c_str(), stdout);
}

void print_json(const Table& tb, const bool* pass) {
  Json meta = Json::object();
  for (const auto& [k, v] : tb.meta) meta[k] = v;
  Json rows = Json::array();
  for (const auto& row : tb.rows) {
    Json r = Json::object();
    for (std::size_t c = 0; c < row.size(); ++c) r[tb.columns[c]] = row[c];
    rows.push_back(std::move(r));
  }
  Json doc = Json::object();
  doc["meta"] = std::move(meta);
  doc["rows"] = std::move(rows);
  if (pass != nullptr) doc["pass"] = *pass;
  std::fputs(doc.dump(2).c_str(), stdout);
  std::fputc('\n', stdout);
}

void emit(const std::string& format, const Table& tb, const bool* pass) {
  if (format == "json")
    print_json(tb, pass);
  else
    print_csv(tb);
}

// "a..b" or a single integer.
std::pair<std::int64_t, std::int64_t> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  std::int64_t lo = 0, hi = 0;
  const char* end = s.data() + s.size();
  if (dots == std::string::npos) {
    const auto r = std::from_chars(s.data(), end, lo);
    if (r.ec != std::errc{} || r.ptr != end)
      fail(1, "bad site range '" + s + "' (want a..b or a single integer)");
    hi = lo;
  } else {
    const char* mid = s.data() + dots;
    const auto r1 = std::from_chars(s.data(), mid, lo);
    const auto r2 = std::from_chars(mid + 2, end, hi);
    if (r1.ec != std::errc{} || r1.ptr != mid || r2.ec != std::errc{} ||
        r2.ptr != end)
      fail(1, "bad site range '" + s + "' (want a..b or a single integer)");
  }
  if (lo > hi) std::swap(lo, hi);
  if (hi - lo > 100000) fail(1, "site range too wide");
  return {lo, hi};
}

struct IcArgs {
  std::string name = "alternating";
  std::vector<std::int64_t> sites;
  std::int64_t k0 = 1;
};

asep_ic make_ic(const IcArgs& a) {
  asep_ic ic{};
  if (a.name == "alternating") {
    ic.kind = ASEP_IC_ALTERNATING;
  } else if (a.name == "onesided") {
    ic.kind = ASEP_IC_ONE_SIDED;
    ic.k0 = a.k0;
  } else if (a.name == "step") {
    ic.kind = ASEP_IC_STEP;
  } else if (a.name == "finite") {
    if (a.sites.empty()) fail(1, "--ic finite needs --sites");
    ic.kind = ASEP_IC_FINITE;
    ic.sites = a.sites.data();
    ic.n_sites = a.sites.size();
  } else {
    fail(1, "unknown initial condition '" + a.name + "'");
  }
  return ic;
}

std::string sites_csv(const std::vector<std::int64_t>& sites) {
  std::string s;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(sites[i]);
  }
  return s;
}

void add_common_meta(Table& tb, const char* schema, const char* command,
                     const asep_model* model) {
  tb.add("schema", schema);
  tb.add("command", command);
  tb.add("build", asep_build_id());
  tb.add("p", asep_model_p(model));
  tb.add("q", asep_model_q(model));
  tb.add("tau", asep_model_tau(model));
}

void add_ic_meta(Table& tb, const IcArgs& ic) {
  tb.add("ic", ic.name);
  if (ic.name == "onesided") tb.add("k0", ic.k0);
  if (ic.name == "finite") tb.add("sites", sites_csv(ic.sites));
}

void add_plan_meta(Table& tb, const asep_plan* plan) {
  tb.add("radius_small", asep_plan_radius_small(plan));
  tb.add("radius_large", asep_plan_radius_large(plan));
  tb.add("radius_large_pure", asep_plan_radius_large_pure(plan));
  tb.add("radius_large_tight", asep_plan_radius_large_tight(plan));
  tb.add("nodes", asep_plan_start_nodes(plan));
}

std::int64_t start_position(const asep_ic& ic, std::int64_t m) {
  std::int64_t pos = 0;
  if (asep_ic_start_position(&ic, m, &pos) != ASEP_OK)
    fail_api("start position");
  return pos;
}

std::pair<std::int64_t, std::int64_t> resolve_range(const std::string& x,
                                                    const asep_ic& ic,
                                                    std::int64_t m,
                                                    std::int64_t halfwidth) {
  if (!x.empty()) return parse_range(x);
  const std::int64_t c = start_position(ic, m);
  return {c - halfwidth, c + halfwidth};
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  IcArgs ic;
  double p = 0.3;
  double t = 1.0;
  std::int64_t m = 1;
  std::string x;
  double tol = 1e-6;
  int kmax = 12;
  std::string format = "csv";
};

int run_eval(const EvalArgs& a) {
  ModelPtr model = make_model(a.p);
  PlanPtr plan = make_plan(model.get());
  const asep_ic ic = make_ic(a.ic);
  const auto [lo, hi] = resolve_range(a.x, ic, a.m, 3);

  asep_eval_options opts;
  asep_eval_options_default(&opts);
  opts.tol = a.tol;
  opts.kmax = a.kmax;

  Table tb;
  add_common_meta(tb, "asep-table/1", "eval", model.get());
  add_ic_meta(tb, a.ic);
  tb.add("m", a.m);
  tb.add("t", a.t);
  tb.add("kmax", a.kmax);
  tb.add("tol", a.tol);
  add_plan_meta(tb, plan.get());
  tb.columns = {"x",           "probability", "tail_bound", "est_error",
                "im_residual", "terms_used",  "converged"};

  bool all_converged = true;
  for (std::int64_t x = lo; x <= hi; ++x) {
    asep_point pt{};
    if (asep_eval_cdf(plan.get(), &ic, a.m, x, a.t, &opts, &pt) != ASEP_OK)
      fail_api("eval");
    all_converged = all_converged && pt.converged != 0;
    tb.rows.push_back({x, pt.value, pt.tail_bound, pt.est_error,
                       pt.im_residual, pt.terms, pt.converged != 0});
  }
  emit(a.format, tb, nullptr);
  return all_converged ? 0 : 2;
}

// ---- simulate --------------------------------------------------------------

struct SimArgs {
  IcArgs ic;
  std::string oracle = "mc";
  double p = 0.3;
  double t = 1.0;
  std::int64_t m = 1;
  std::string x;
  std::int64_t trials = 100000;
  std::uint64_t seed = 1;
  int margin = 0;
  std::string format = "csv";
};

int run_simulate(const SimArgs& a) {
  ModelPtr model = make_model(a.p);
  const asep_ic ic = make_ic(a.ic);
  const std::int64_t tagged = start_position(ic, a.m);
  const auto [lo, hi] = resolve_range(a.x, ic, a.m, 4);

  Table tb;
  add_common_meta(tb, "asep-table/1", "simulate", model.get());
  add_ic_meta(tb, a.ic);
  tb.add("m", a.m);
  tb.add("tagged_site", tagged);
  tb.add("t", a.t);
  tb.add("oracle", a.oracle);
  tb.columns = {"x", "probability", "ci_halfwidth"};

  if (a.oracle == "mc") {
    asep_sim* raw = nullptr;
    if (asep_simulate(model.get(), &ic, tagged, a.t, a.trials, a.seed,
                      a.margin, &raw) != ASEP_OK)
      fail_api("simulate");
    SimPtr sim(raw);
    tb.add("trials", a.trials);
    tb.add("seed", a.seed);
    tb.add("flagged", asep_sim_flagged(sim.get()));
    for (std::int64_t x = lo; x <= hi; ++x)
      tb.rows.push_back(
          {x, asep_sim_prob(sim.get(), x), asep_sim_ci95(sim.get(), x)});
    // A run is only trusted while boundary effects stay below 1 in 10^4
    // trajectories.
    const bool pass = asep_sim_flagged(sim.get()) * 10000 <= a.trials;
    emit(a.format, tb, &pass);
    return pass ? 0 : 2;
  }
  if (a.oracle == "master") {
    if (ic.kind != ASEP_IC_FINITE)
      fail(1, "the master-equation oracle needs --ic finite");
    asep_master* raw = nullptr;
    if (asep_master_solve(model.get(), ic.sites, ic.n_sites, a.t, a.margin,
                          &raw) != ASEP_OK)
      fail_api("master equation");
    MasterPtr sol(raw);
    tb.add("boundary_mass", asep_master_boundary_mass(sol.get()));
    for (std::int64_t x = lo; x <= hi; ++x) {
      const double v = asep_master_cdf(sol.get(), static_cast<int>(a.m), x);
      if (!(v >= 0.0)) fail_api("master equation");
      tb.rows.push_back({x, v, 0.0});
    }
    const bool pass = true;
    emit(a.format, tb, &pass);
    return 0;
  }
  fail(1, "unknown oracle '" + a.oracle + "' (want mc or master)");
}

// ---- verify ----------------------------------------------------------------

struct VerifyArgs {
  std::string suite;
  IcArgs ic;
  double p = 0.3;
  int kmax = 6;
  int trials = 100;
  std::uint64_t seed = 1;
  std::int64_t m = 1;
  double t = 0.5;
  std::string x;
  double tol = 1e-9;
  std::string format = "json";
};

int run_verify(const VerifyArgs& a) {
  ModelPtr model = make_model(a.p);

  asep_verify_request rq;
  asep_verify_request_default(&rq);
  if (a.suite == "det-kernel") rq.suite = ASEP_VERIFY_DET_KERNEL;
  else if (a.suite == "sym-sum") rq.suite = ASEP_VERIFY_SYM_SUM;
  else if (a.suite == "residue") rq.suite = ASEP_VERIFY_RESIDUE;
  else if (a.suite == "radius") rq.suite = ASEP_VERIFY_RADIUS;
  else if (a.suite == "symm") rq.suite = ASEP_VERIFY_SYMM;
  else fail(1, "unknown suite '" + a.suite + "'");
  rq.kmax = a.kmax;
  rq.trials = a.trials;
  rq.seed = a.seed;
  rq.m = a.m;
  rq.t = a.t;
  rq.tol = a.tol;
  if (a.ic.name == "alternating") rq.ic = ASEP_IC_ALTERNATING;
  else if (a.ic.name == "onesided") rq.ic = ASEP_IC_ONE_SIDED;
  else if (a.ic.name == "step") rq.ic = ASEP_IC_STEP;
  else if (a.ic.name == "finite") rq.ic = ASEP_IC_FINITE;
  else fail(1, "unknown initial condition '" + a.ic.name + "'");
  rq.k0 = a.ic.k0;
  if (!a.x.empty()) {
    const auto [lo, hi] = parse_range(a.x);
    rq.x_lo = lo;
    rq.x_hi = hi;
  }

  std::vector<asep_verify_row> rows(64);
  std::size_t count = 0;
  asep_status st =
      asep_verify_run(model.get(), &rq, rows.data(), rows.size(), &count);
  if (st == ASEP_ERR_BUFFER) {
    rows.resize(count);
    st = asep_verify_run(model.get(), &rq, rows.data(), rows.size(), &count);
  }
  if (st != ASEP_OK) fail_api("verify");
  rows.resize(count);

  Table tb;
  add_common_meta(tb, "asep-report/1", "verify", model.get());
  tb.add("suite", a.suite);
  tb.add("kmax", a.kmax);
  tb.add("trials", a.trials);
  tb.add("seed", a.seed);
  if (a.suite == "radius" || a.suite == "symm") {
    add_ic_meta(tb, a.ic);
    tb.add("m", a.m);
    tb.add("t", a.t);
    tb.add("tol", a.tol);
  }
  const bool by_site = a.suite == "radius";
  tb.columns = {"check", by_site ? "x" : "k", "residual", "threshold", "pass"};
  bool pass = true;
  for (const asep_verify_row& r : rows) {
    const bool ok = r.residual <= r.threshold;
    pass = pass && ok;
    tb.rows.push_back({r.check, r.label, r.residual, r.threshold, ok});
  }
  emit(a.format, tb, &pass);
  return pass ? 0 : 2;
}

// ---- compare ---------------------------------------------------------------

struct CompareArgs {
  IcArgs ic;
  std::string against = "mc";
  double p = 0.3;
  double t = 1.0;
  std::int64_t m = 1;
  std::string x;
  double tol = 1e-8;
  int kmax = 12;
  std::int64_t trials = 100000;
  std::uint64_t seed = 1;
  int margin = 0;
  std::string format = "json";
};

int run_compare(const CompareArgs& a) {
  ModelPtr model = make_model(a.p);
  PlanPtr plan = make_plan(model.get());
  const asep_ic ic = make_ic(a.ic);
  const auto [lo, hi] = resolve_range(a.x, ic, a.m, 4);

  asep_eval_options opts;
  asep_eval_options_default(&opts);
  opts.tol = a.tol;
  opts.kmax = a.kmax;

  Table tb;
  add_common_meta(tb, "asep-report/1", "compare", model.get());
  tb.add("against", a.against);
  add_ic_meta(tb, a.ic);
  tb.add("m", a.m);
  tb.add("t", a.t);
  tb.add("kmax", a.kmax);
  tb.add("tol", a.tol);
  add_plan_meta(tb, plan.get());

  std::vector<double> formula(static_cast<std::size_t>(hi - lo + 1));
  std::vector<bool> conv(formula.size());
  for (std::int64_t x = lo; x <= hi; ++x) {
    asep_point pt{};
    if (asep_eval_cdf(plan.get(), &ic, a.m, x, a.t, &opts, &pt) != ASEP_OK)
      fail_api("eval");
    formula[static_cast<std::size_t>(x - lo)] = pt.value;
    conv[static_cast<std::size_t>(x - lo)] = pt.converged != 0;
  }

  bool pass = true;
  if (a.against == "mc") {
    const std::int64_t tagged = start_position(ic, a.m);
    asep_sim* raw = nullptr;
    if (asep_simulate(model.get(), &ic, tagged, a.t, a.trials, a.seed,
                      a.margin, &raw) != ASEP_OK)
      fail_api("simulate");
    SimPtr sim(raw);
    // The plain halfwidth collapses to zero at empirical counts of 0 or n,
    // where the sample simply cannot resolve the (tiny but nonzero) true
    // probability. The verdict floors the interval at one-count
    // resolution; the raw halfwidth stays visible in its own column.
    const double ci_floor = 1.96 / static_cast<double>(a.trials);
    tb.add("trials", a.trials);
    tb.add("seed", a.seed);
    tb.add("flagged", asep_sim_flagged(sim.get()));
    tb.add("ci_floor", ci_floor);
    tb.columns = {"x", "formula", "oracle", "diff", "ci_halfwidth", "z",
                  "pass"};
    for (std::int64_t x = lo; x <= hi; ++x) {
      const std::size_t i = static_cast<std::size_t>(x - lo);
      const double mc = asep_sim_prob(sim.get(), x);
      const double ci = asep_sim_ci95(sim.get(), x);
      const double diff = formula[i] - mc;
      const double z = diff / std::max(ci, ci_floor);
      const bool ok = conv[i] && std::abs(z) <= 4.0;
      pass = pass && ok;
      tb.rows.push_back({x, formula[i], mc, diff, ci, z, ok});
    }
  } else if (a.against == "master") {
    if (ic.kind != ASEP_IC_FINITE)
      fail(1, "compare --against master needs --ic finite");
    asep_master* raw = nullptr;
    if (asep_master_solve(model.get(), ic.sites, ic.n_sites, a.t, a.margin,
                          &raw) != ASEP_OK)
      fail_api("master equation");
    MasterPtr sol(raw);
    tb.add("boundary_mass", asep_master_boundary_mass(sol.get()));
    const double limit = 1e-7;
    tb.columns = {"x", "formula", "oracle", "diff", "limit", "pass"};
    for (std::int64_t x = lo; x <= hi; ++x) {
      const std::size_t i = static_cast<std::size_t>(x - lo);
      const double v = asep_master_cdf(sol.get(), static_cast<int>(a.m), x);
      if (!(v >= 0.0)) fail_api("master equation");
      const double diff = formula[i] - v;
      const bool ok = conv[i] && std::abs(diff) <= limit;
      pass = pass && ok;
      tb.rows.push_back({x, formula[i], v, diff, limit, ok});
    }
  } else if (a.against == "skellam") {
    if (ic.kind != ASEP_IC_FINITE || ic.n_sites != 1 || a.m != 1)
      fail(1,
           "compare --against skellam needs --ic finite with one site and "
           "--m 1");
    const double limit = 1e-8;
    tb.columns = {"x", "formula", "oracle", "diff", "limit", "pass"};
    for (std::int64_t x = lo; x <= hi; ++x) {
      const std::size_t i = static_cast<std::size_t>(x - lo);
      double v = 0.0;
      if (asep_skellam_cdf(model.get(), x, ic.sites[0], a.t, &v) != ASEP_OK)
        fail_api("free walker");
      const double diff = formula[i] - v;
      const bool ok = conv[i] && std::abs(diff) <= limit;
      pass = pass && ok;
      tb.rows.push_back({x, formula[i], v, diff, limit, ok});
    }
  } else if (a.against == "tail") {
    if (ic.kind != ASEP_IC_STEP)
      fail(1, "compare --against tail needs --ic step");
    tb.columns = {"x", "formula", "oracle", "diff", "limit", "pass"};
    for (std::int64_t x = lo; x <= hi; ++x) {
      const std::size_t i = static_cast<std::size_t>(x - lo);
      double v = 0.0;
      if (asep_step_current_tail(plan.get(), a.m, x, a.t, &opts, &v) !=
          ASEP_OK)
        fail_api("current tail");
      const double diff = formula[i] - v;
      // The tail reading is the same series; anything but equality is a bug.
      const bool ok = diff == 0.0;
      pass = pass && ok;
      tb.rows.push_back({x, formula[i], v, diff, 0.0, ok});
    }
  } else {
    fail(1, "unknown oracle '" + a.against +
                "' (want mc, master, skellam, or tail)");
  }
  emit(a.format, tb, &pass);
  return pass ? 0 : 2;
}

// ---- wiring ----------------------------------------------------------------

void add_format_flag(CLI::App* cmd, std::string& fmt) {
  cmd->add_option("--format", fmt, "Output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

void add_ic_flags(CLI::App* cmd, IcArgs& ic) {
  cmd->add_option("--ic", ic.name,
                  "Initial occupation: alternating, onesided, step, finite")
      ->check(CLI::IsMember({"alternating", "onesided", "step", "finite"}));
  cmd->add_option("--k0", ic.k0,
                  "Right edge offset for --ic onesided (k0 <= 1)");
  cmd->add_option("--sites", ic.sites,
                  "Occupied sites for --ic finite, ascending")
      ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app(
      "Tagged-particle law of the asymmetric exclusion process: contour "
      "series, stochastic and exact oracles, and their cross-checks");
  app.set_version_flag("--version", std::string(asep_version()) + " (" +
                                        asep_build_id() + ")");
  app.set_config("--config", "",
                 "Read defaults from a key=value file ([section] per "
                 "subcommand)");
  int threads = 0;
  app.add_option("--threads", threads,
                 "Worker threads (0 = all cores); results do not depend on "
                 "this")
      ->envname("ASEP_THREADS");
  app.require_subcommand(1);

  EvalArgs ev;
  CLI::App* eval = app.add_subcommand(
      "eval", "Evaluate P(X_m(t) <= x) over a range of sites");
  add_ic_flags(eval, ev.ic);
  eval->add_option("--p", ev.p, "Right-jump rate, in (0, 1)");
  eval->add_option("--m", ev.m, "Tagged particle index");
  eval->add_option("--t", ev.t, "Time")->check(CLI::NonNegativeNumber);
  eval->add_option("--x", ev.x, "Site range a..b (default: start -3..+3)");
  eval->add_option("--tol", ev.tol, "Absolute tolerance on the probability");
  eval->add_option("--kmax", ev.kmax, "Highest series shell")
      ->check(CLI::Range(1, 12));
  add_format_flag(eval, ev.format);

  SimArgs sm;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Sample or solve the dynamics directly and print the CDF");
  add_ic_flags(simulate, sm.ic);
  simulate->add_option("--oracle", sm.oracle, "mc or master")
      ->check(CLI::IsMember({"mc", "master"}));
  simulate->add_option("--p", sm.p, "Right-jump rate, in (0, 1)");
  simulate->add_option("--m", sm.m, "Tagged particle index");
  simulate->add_option("--t", sm.t, "Time")->check(CLI::NonNegativeNumber);
  simulate->add_option("--x", sm.x, "Site range a..b (default: start -4..+4)");
  simulate->add_option("--trials", sm.trials, "Trajectories (mc)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sm.seed, "RNG seed (mc)");
  simulate->add_option("--margin", sm.margin,
                       "Window margin in sites (0 = automatic)");
  add_format_flag(simulate, sm.format);

  VerifyArgs vf;
  CLI::App* verify = app.add_subcommand(
      "verify",
      "Run a residual suite: det-kernel, sym-sum, residue, radius, symm");
  verify
      ->add_option("suite", vf.suite,
                   "det-kernel | sym-sum | residue | radius | symm")
      ->required();
  add_ic_flags(verify, vf.ic);
  verify->add_option("--p", vf.p, "Right-jump rate, in (0, 1)");
  verify->add_option("--kmax", vf.kmax, "Highest variable count / shell");
  verify->add_option("--trials", vf.trials, "Random tuples per k")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", vf.seed, "RNG seed");
  verify->add_option("--m", vf.m, "Tagged particle index (radius, symm)");
  verify->add_option("--t", vf.t, "Time (radius, symm)")
      ->check(CLI::NonNegativeNumber);
  verify->add_option("--x", vf.x, "Site range a..b (radius, symm)");
  verify->add_option("--tol", vf.tol, "Evaluation tolerance (radius)");
  add_format_flag(verify, vf.format);

  CompareArgs cp;
  CLI::App* compare = app.add_subcommand(
      "compare", "Evaluate the series and an oracle on one grid");
  add_ic_flags(compare, cp.ic);
  compare->add_option("--against", cp.against, "mc, master, skellam, or tail")
      ->check(CLI::IsMember({"mc", "master", "skellam", "tail"}));
  compare->add_option("--p", cp.p, "Right-jump rate, in (0, 1)");
  compare->add_option("--m", cp.m, "Tagged particle index");
  compare->add_option("--t", cp.t, "Time")->check(CLI::NonNegativeNumber);
  compare->add_option("--x", cp.x, "Site range a..b (default: start -4..+4)");
  compare->add_option("--tol", cp.tol, "Series tolerance");
  compare->add_option("--kmax", cp.kmax, "Highest series shell")
      ->check(CLI::Range(1, 12));
  compare->add_option("--trials", cp.trials, "Trajectories (mc)")
      ->check(CLI::PositiveNumber);
  compare->add_option("--seed", cp.seed, "RNG seed (mc)");
  compare->add_option("--margin", cp.margin,
                      "Window margin in sites (0 = automatic)");
  add_format_flag(compare, cp.format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  asep_set_threads(threads);
  try {
    if (eval->parsed()) return run_eval(ev);
    if (simulate->parsed()) return run_simulate(sm);
    if (verify->parsed()) return run_verify(vf);
    return run_compare(cp);
  } catch (const CliError& e) {
    std::fprintf(stderr, "asep: %s\n", e.msg.c_str());
    return e.code;
  }
}
