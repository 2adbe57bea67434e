// Final acceptance gate.  Ten end-to-end checks, printed one line each as
//   A<n> <name>: PASS|FAIL (<detail>)
// with exit status 0 only when every line passes.  Each check pins its own
// grid and tolerance in code, chosen inside the region the quadrature is
// designed to resolve; nothing here adapts to the observed results.
//
// argv[1] is the path to the command-line binary, used by the output
// reproducibility check (A10).  The environment variable ASEP_ACCEPT_TRIALS
// overrides the Monte Carlo trajectory count (default 1000000) so a quick
// smoke run is possible; the published criteria assume the default.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "asep/contour.hpp"
#include "asep/dist.hpp"
#include "asep/identities.hpp"
#include "asep/model.hpp"
#include "asep/oracles.hpp"
#include "asep/rng.hpp"

namespace {

using namespace asep;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double rel_gap(cx a, cx b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// ---------------------------------------------------------------------------
// A1: the symmetrization identity that collapses the k!-term permutation sum
// into a closed product, at random pole-free points.

Outcome check_sym_sum() {
  const ModelParams mp(0.3);
  double worst = 0.0;
  for (int k = 1; k <= 6; ++k) {
    Xoshiro256 rng(20260816, static_cast<std::uint64_t>(k));
    for (int trial = 0; trial < 100; ++trial) {
      // The permutation sum runs in double precision and every factor within
      // clearance of a pole multiplies its cancellation, so the tuples keep a
      // modest pole distance; the check targets algebra, not conditioning.
      const std::vector<cx> xi = sample_identity_points(rng, k, mp, 1e-2);
      worst = std::max(
          worst, rel_gap(symmetrization_lhs(xi, mp), symmetrization_rhs(xi, mp)));
    }
  }
  return {worst <= 1e-9, "k<=6, 100 pts each, max gap " + sci(worst)};
}

// ---------------------------------------------------------------------------
// A2: the determinant reduction to a product kernel, the one-variable
// residue identity behind it, and the residue bookkeeping of its witness
// function: the residues at z = 1 and z = tau both equal p^k/q, and the sum
// of all residues matches the witness's contour integral.

Outcome check_det_and_residues() {
  const ModelParams mp(0.3);
  double worst_identity = 0.0;
  double worst_witness = 0.0;
  for (int k = 1; k <= 5; ++k) {
    Xoshiro256 rng(20260816, 100 + static_cast<std::uint64_t>(k));
    for (int trial = 0; trial < 100; ++trial) {
      const std::vector<cx> xi = sample_identity_points(rng, k, mp);
      worst_identity = std::max(
          worst_identity, rel_gap(det_kernel_lhs(xi, mp), det_kernel_rhs(xi, mp)));
      worst_identity =
          std::max(worst_identity, rel_gap(residue_identity_lhs(xi, mp),
                                           residue_identity_rhs(xi, mp)));
    }
    // Residue extraction needs extra clearance between the poles so a small
    // circle around each isolates it cleanly.
    Xoshiro256 rng2(20260816, 200 + static_cast<std::uint64_t>(k));
    const double clearance = 1e-2;
    const double rho = 0.4 * clearance;
    const double want = std::pow(mp.p, k) / mp.q;
    for (int trial = 0; trial < 10; ++trial) {
      const std::vector<cx> xi = sample_identity_points(rng2, k, mp, clearance);
      for (const cx center : {cx(1.0, 0.0), cx(mp.tau, 0.0)}) {
        const QuadratureResult res = integrate_circle(
            [&](cx w) { return residue_witness(w + center, xi, mp); }, rho,
            1e-13);
        worst_identity =
            std::max(worst_identity, rel_gap(res.value, cx(want, 0.0)));
      }
      worst_witness =
          std::max(worst_witness, rel_gap(residue_witness_contour(xi, mp),
                                          residue_witness_residue_sum(xi, mp)));
    }
  }
  const bool pass = worst_identity <= 1e-9 && worst_witness <= 1e-8;
  return {pass, "k<=5, identities " + sci(worst_identity) + ", witness vs contour " +
                    sci(worst_witness)};
}

// ---------------------------------------------------------------------------
// A3: one particle alone is a free continuous-time walker, so the evaluator
// must reproduce the Poisson-difference closed form.  This anchors the
// normalization of everything else.

Outcome check_free_particle() {
  const ModelParams mp(0.3);
  const ContourPlan plan = plan_contours(mp);
  const std::vector<std::int64_t> sites{1};
  EvalOptions opts;
  opts.tol = 1e-10;
  double worst = 0.0;
  bool all_conv = true;
  for (double t : {0.25, 1.0, 2.0}) {
    for (std::int64_t x = -3; x <= 4; ++x) {
      const SeriesReport rep = prob_finite(sites, 1, x, t, plan, opts);
      all_conv = all_conv && rep.converged;
      worst = std::max(worst,
                       std::abs(rep.value - free_particle_cdf(x, 1, t, mp)));
    }
  }
  const bool pass = all_conv && worst <= 1e-8;
  return {pass, "t in {0.25,1,2}, x in [-3,4], max diff " + sci(worst) +
                    (all_conv ? "" : ", non-converged points")};
}

// ---------------------------------------------------------------------------
// A4: small finite systems against the exact master equation, every particle
// index, every site across the occupied window plus a wide light-cone pad.

Outcome check_master() {
  const ModelParams mp(0.3);
  const ContourPlan plan = plan_contours(mp);
  const double t = 0.7;
  double worst = 0.0;
  double worst_boundary = 0.0;
  bool all_conv = true;
  const std::vector<std::vector<std::int64_t>> systems{{1, 3}, {-1, 1, 3}};
  for (const auto& sites : systems) {
    const MasterSolution sol = master_equation(sites, t, mp);
    worst_boundary = std::max(worst_boundary, sol.boundary_mass());
    EvalOptions opts;
    opts.tol = 1e-9;
    for (int m = 1; m <= static_cast<int>(sites.size()); ++m) {
      for (std::int64_t x = sites.front() - 8; x <= sites.back() + 8; ++x) {
        const SeriesReport rep = prob_finite(sites, m, x, t, plan, opts);
        all_conv = all_conv && rep.converged;
        worst = std::max(worst, std::abs(rep.value - sol.cdf(m, x)));
      }
    }
  }
  const bool pass = all_conv && worst <= 1e-7;
  return {pass, "2 and 3 particles, all m, max diff " + sci(worst) +
                    ", window leak " + sci(worst_boundary) +
                    (all_conv ? "" : ", non-converged points")};
}

// ---------------------------------------------------------------------------
// A5/A6: the infinite-pattern formulas against direct simulation.  The
// criterion is the literal two-sided test |formula - empirical| <= 4 ci at
// every site, with the confidence half-width floored at one-count
// resolution (an empirical count of 0 or n has a degenerate interval while
// the true probability is tiny but nonzero).  Base evaluations are recorded
// for the radius-independence check.

struct McCase {
  const char* name;
  InitialCondition ic;
  std::int64_t m;           // query index (odd site for the two-sided pattern)
  std::int64_t tagged_site; // initial site handed to the simulator
  double t;
};

struct EvalRecord {
  InitialCondition ic;
  std::int64_t m = 0;
  std::int64_t x = 0;
  double t = 0.0;
  SeriesReport rep;
};

std::vector<EvalRecord> g_mc_grid;

std::int64_t accept_trials() {
  if (const char* env = std::getenv("ASEP_ACCEPT_TRIALS")) {
    const long long v = std::atoll(env);
    if (v > 0) return v;
  }
  return 1000000;
}

Outcome check_against_mc(const std::vector<McCase>& cases,
                         std::uint64_t seed_base) {
  const ModelParams mp(0.3);
  const ContourPlan plan = plan_contours(mp);
  const std::int64_t trials = accept_trials();
  const double ci_floor = 1.96 / static_cast<double>(trials);
  double worst_z = 0.0;
  std::string worst_at = "-";
  std::int64_t flagged = 0;
  bool pass = true;
  std::uint64_t seed = seed_base;
  for (const McCase& c : cases) {
    SimConfig sim;
    sim.params = mp;
    sim.ic = c.ic;
    sim.tagged_site = c.tagged_site;
    sim.t = c.t;
    sim.n_traj = trials;
    sim.seed = ++seed;
    const EmpiricalCdf emp = mc_simulate(sim);
    flagged += emp.flagged();
    for (std::int64_t x = c.tagged_site - 4; x <= c.tagged_site + 4; ++x) {
      DistributionQuery q;
      q.m = c.m;
      q.x = x;
      q.t = c.t;
      q.tol = 1e-6;
      const SeriesReport rep = eval_cdf(c.ic, q, plan);
      g_mc_grid.push_back({c.ic, c.m, x, c.t, rep});
      const double ci = std::max(emp.ci95(x), ci_floor);
      const double z = std::abs(rep.value - emp.prob(x)) / ci;
      if (z > worst_z) {
        worst_z = z;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s t=%g x=%lld", c.name, c.t,
                      static_cast<long long>(x));
        worst_at = buf;
      }
      pass = pass && z <= 4.0;
    }
  }
  std::string detail = std::to_string(trials) + " trajectories, max |z| " +
                       num(worst_z) + " at " + worst_at;
  if (flagged > 0) detail += ", flagged " + std::to_string(flagged);
  return {pass, detail};
}

Outcome check_alternating_mc() {
  std::vector<McCase> cases;
  for (std::int64_t m : {std::int64_t{1}, std::int64_t{-1}})
    for (double t : {0.5, 1.0})
      cases.push_back({"two-sided", InitialCondition::alternating(), m, m, t});
  return check_against_mc(cases, 9000);
}

Outcome check_onesided_step_mc() {
  std::vector<McCase> cases;
  for (double t : {0.5, 1.0}) {
    cases.push_back({"one-sided", InitialCondition::one_sided(1), 1, 1, t});
    cases.push_back({"step", InitialCondition::step(), 1, 1, t});
  }
  return check_against_mc(cases, 9500);
}

// ---------------------------------------------------------------------------
// A7: the symmetrized determinant form of each two-sided series term against
// the unsymmetrized permutation-sum form, term by term.

Outcome check_term_paths() {
  const ModelParams mp(0.3);
  const ContourPlan plan = plan_contours(mp);
  double worst = 0.0;
  bool pass = true;
  for (int k_minus = 0; k_minus <= 3; ++k_minus) {
    for (int k_plus = 0; k_plus + k_minus <= 3; ++k_plus) {
      if (k_minus + k_plus == 0) continue;
      const TermRecord sym =
          alternating_term(1, 0, 0.5, k_minus, k_plus, plan, 1e-11);
      const TermRecord raw =
          alternating_term_unsym(1, 0, 0.5, k_minus, k_plus, plan, 1e-11);
      if (sym.coeff == 0.0 && raw.coeff == 0.0) continue;
      const double gap = rel_gap(sym.coeff * sym.integral,
                                 raw.coeff * raw.integral);
      worst = std::max(worst, gap);
      pass = pass && gap <= 1e-9 && sym.converged && raw.converged;
    }
  }
  return {pass, "orders k-+k+ <= 3, max relative gap " + sci(worst)};
}

// ---------------------------------------------------------------------------
// A8: distribution shape across rates, times, and every initial pattern:
// values stay in [0,1] up to tolerance, the CDF is monotone in x, t = 0
// reproduces the frozen step at the start site, a later particle's CDF never
// exceeds an earlier one's, and imaginary residuals stay negligible.
// The x-grids stop one site past the start for the second particle of the
// one-sided patterns; beyond that the oscillatory quadrature is outside its
// resolvable window and honestly reports non-convergence.

struct ShapeSeries {
  const char* name;
  InitialCondition ic;
  std::int64_t m;
  std::int64_t start;
  std::int64_t x_lo, x_hi;
  int dominates = -1;  // index of the series this one must dominate
};

Outcome check_shape() {
  const double mono_slack = 1e-5;
  const double range_slack = 1e-5;
  const double step_slack = 2e-6;
  const double dom_slack = 1e-5;
  bool pass = true;
  std::string first_bad;
  double worst_im = 0.0;
  int points = 0;
  const auto fail = [&](const char* what, const ShapeSeries& s, double p,
                        double t, std::int64_t x) {
    pass = false;
    if (first_bad.empty()) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s: %s m=%lld p=%g t=%g x=%lld", what,
                    s.name, static_cast<long long>(s.m), p, t,
                    static_cast<long long>(x));
      first_bad = buf;
    }
  };
  const std::vector<std::int64_t> y{-1, 2};
  const std::vector<ShapeSeries> series{
      {"finite", InitialCondition::finite(y), 1, -1, -4, 5, -1},
      {"finite", InitialCondition::finite(y), 2, 2, -4, 5, 0},
      {"two-sided", InitialCondition::alternating(), -1, -1, -4, 2, -1},
      {"two-sided", InitialCondition::alternating(), 1, 1, -2, 4, 2},
      {"one-sided", InitialCondition::one_sided(1), 1, 1, -2, 4, -1},
      {"one-sided", InitialCondition::one_sided(1), 2, 3, 0, 4, 4},
      {"step", InitialCondition::step(), 1, 1, -2, 4, -1},
      {"step", InitialCondition::step(), 2, 2, -1, 3, 6},
  };
  for (double p : {0.2, 0.3, 0.4}) {
    const ModelParams mp(p);
    const ContourPlan plan = plan_contours(mp);
    for (double t : {0.0, 0.5, 1.0}) {
      // values[i] holds series i's CDF by x offset from its own x_lo
      std::vector<std::vector<double>> values(series.size());
      for (std::size_t i = 0; i < series.size(); ++i) {
        const ShapeSeries& s = series[i];
        double prev = -1.0;
        for (std::int64_t x = s.x_lo; x <= s.x_hi; ++x) {
          DistributionQuery q;
          q.m = s.m;
          q.x = x;
          q.t = t;
          q.tol = 1e-6;
          const SeriesReport rep = eval_cdf(s.ic, q, plan);
          ++points;
          values[i].push_back(rep.value);
          if (!rep.converged) fail("non-converged", s, p, t, x);
          if (rep.raw_sum < -range_slack || rep.raw_sum > 1.0 + range_slack)
            fail("range", s, p, t, x);
          worst_im = std::max(worst_im, rep.im_residual);
          if (rep.im_residual > 1e-6) fail("imaginary residual", s, p, t, x);
          if (rep.value < prev - mono_slack) fail("monotonicity", s, p, t, x);
          prev = rep.value;
          if (t == 0.0) {
            const double frozen = x >= s.start ? 1.0 : 0.0;
            if (std::abs(rep.value - frozen) > step_slack)
              fail("frozen start", s, p, t, x);
          }
        }
      }
      for (std::size_t i = 0; i < series.size(); ++i) {
        const ShapeSeries& s = series[i];
        if (s.dominates < 0) continue;
        const ShapeSeries& d = series[static_cast<std::size_t>(s.dominates)];
        const std::int64_t lo = std::max(s.x_lo, d.x_lo);
        const std::int64_t hi = std::min(s.x_hi, d.x_hi);
        for (std::int64_t x = lo; x <= hi; ++x) {
          const double later = values[i][static_cast<std::size_t>(x - s.x_lo)];
          const double earlier =
              values[static_cast<std::size_t>(s.dominates)]
                    [static_cast<std::size_t>(x - d.x_lo)];
          if (later > earlier + dom_slack) fail("ordering", s, p, t, x);
        }
      }
    }
  }
  std::string detail = std::to_string(points) + " points, max |Im| " +
                       sci(worst_im);
  if (!pass) detail += ", first failure " + first_bad;
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// A9: re-evaluating the Monte Carlo grids on a deformed contour plan
// (large radii up 15%, small radius down 15%) must not move any probability
// beyond the quadrature's own error budget.

Outcome check_radius_independence() {
  if (g_mc_grid.empty())
    return {false, "no recorded grid (Monte Carlo checks did not run)"};
  const ModelParams mp(0.3);
  const ContourPlan alt = plan_contours(mp).scaled(1.15, 0.85);
  double worst_ratio = 0.0;
  std::string worst_at = "-";
  bool pass = true;
  for (const EvalRecord& rec : g_mc_grid) {
    DistributionQuery q;
    q.m = rec.m;
    q.x = rec.x;
    q.t = rec.t;
    q.tol = 1e-6;
    const SeriesReport again = eval_cdf(rec.ic, q, alt);
    const double budget_base = rec.rep.est_error + rec.rep.tail_bound;
    const double budget_alt = again.est_error + again.tail_bound;
    const double limit =
        std::max(1e-7, 10.0 * std::max(budget_base, budget_alt));
    const double diff = std::abs(again.value - rec.rep.value);
    if (diff / limit > worst_ratio) {
      worst_ratio = diff / limit;
      char buf[64];
      std::snprintf(buf, sizeof buf, "m=%lld x=%lld t=%g",
                    static_cast<long long>(rec.m),
                    static_cast<long long>(rec.x), rec.t);
      worst_at = buf;
    }
    pass = pass && diff <= limit;
  }
  return {pass, std::to_string(g_mc_grid.size()) +
                    " points, worst diff at " + num(worst_ratio * 100.0) +
                    "% of limit (" + worst_at + ")"};
}

// ---------------------------------------------------------------------------
// A10: the command-line tool's output is byte-identical however the work is
// scheduled: worker counts set by flag or environment must not change a
// single byte of CSV or JSON.

std::string run_command(const std::string& cmd, int& exit_code) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    exit_code = -1;
    return out;
  }
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  exit_code = status < 0 ? -1 : WEXITSTATUS(status);
  return out;
}

Outcome check_reproducible_output(const char* cli) {
  if (cli == nullptr || *cli == '\0')
    return {false, "command-line binary path not supplied"};
  const std::string base = std::string("'") + cli + "'";
  const std::vector<std::string> jobs{
      " eval --ic alternating --m 1 --p 0.3 --t 0.5 --x -2..2 --tol 1e-4"
      " --format json",
      " simulate --ic step --m 2 --p 0.3 --t 1 --x -2..4 --trials 200000"
      " --seed 7 --format csv",
      " verify det-kernel --kmax 4 --trials 40 --seed 3 --format json",
  };
  int compared = 0;
  for (const std::string& job : jobs) {
    int rc1 = 0, rc2 = 0, rc3 = 0;
    const std::string a = run_command(base + " --threads 1" + job, rc1);
    const std::string b = run_command(base + " --threads 4" + job, rc2);
    const std::string c =
        run_command("ASEP_THREADS=3 " + base + job + " 2>/dev/null", rc3);
    if (rc1 != 0 || rc2 != 0 || rc3 != 0)
      return {false, "nonzero exit from" + job};
    if (a.empty() || a != b || a != c)
      return {false, "output differs across worker counts for" + job};
    ++compared;
  }
  return {true, std::to_string(compared) +
                    " commands byte-identical across --threads 1/4 and env 3"};
}

}  // namespace

int main(int argc, char** argv) {
  const char* cli = argc > 1 ? argv[1] : nullptr;
  bool all = true;
  const auto report = [&](const char* id, const char* name,
                          const Outcome& out) {
    std::printf("%s %s: %s (%s)\n", id, name, out.pass ? "PASS" : "FAIL",
                out.detail.c_str());
    std::fflush(stdout);
    all = all && out.pass;
  };
  report("A1", "symmetrized kernel sum", check_sym_sum());
  report("A2", "determinant and residue identities", check_det_and_residues());
  report("A3", "single-particle closed form", check_free_particle());
  report("A4", "master-equation cross-check", check_master());
  report("A5", "two-sided pattern vs simulation", check_alternating_mc());
  report("A6", "one-sided and step vs simulation", check_onesided_step_mc());
  report("A7", "term-level path agreement", check_term_paths());
  report("A8", "distribution shape", check_shape());
  report("A9", "contour-radius independence", check_radius_independence());
  report("A10", "byte-identical output across workers",
         check_reproducible_output(cli));
  std::printf("%s\n", all ? "acceptance: all checks passed"
                          : "acceptance: FAILURES above");
  return all ? 0 : 1;
}
