#include "asep/asep.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "asep/contour.hpp"
#include "asep/dist.hpp"
#include "asep/errors.hpp"
#include "asep/identities.hpp"
#include "asep/model.hpp"
#include "asep/oracles.hpp"
#include "asep/parallel.hpp"
#include "asep/rng.hpp"

#ifndef ASEP_BUILD_ID
#define ASEP_BUILD_ID "unknown"
#endif

namespace {

thread_local std::string g_last_error;

// Runs fn inside the exception-to-status firewall. Nothing C++ may escape
// through the C boundary.
template <typename Fn>
asep_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const asep::PoleError& e) {
    g_last_error = e.what();
    return ASEP_ERR_POLE;
  } catch (const asep::InfeasiblePlanError& e) {
    g_last_error = e.what();
    return ASEP_ERR_INFEASIBLE_PLAN;
  } catch (const asep::StateTooLargeError& e) {
    g_last_error = e.what();
    return ASEP_ERR_STATE_TOO_LARGE;
  } catch (const asep::WindowError& e) {
    g_last_error = e.what();
    return ASEP_ERR_WINDOW;
  } catch (const asep::DomainError& e) {
    g_last_error = e.what();
    return ASEP_ERR_INVALID_ARG;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ASEP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return ASEP_ERR_INTERNAL;
  }
}

asep_status fail_invalid(const char* msg) {
  g_last_error = msg;
  return ASEP_ERR_INVALID_ARG;
}

asep::InitialCondition to_ic(const asep_ic* ic) {
  switch (ic->kind) {
    case ASEP_IC_FINITE: {
      if (ic->n_sites == 0 || ic->sites == nullptr)
        throw asep::DomainError("finite start needs a site list");
      return asep::InitialCondition::finite(
          std::vector<std::int64_t>(ic->sites, ic->sites + ic->n_sites));
    }
    case ASEP_IC_ALTERNATING:
      return asep::InitialCondition::alternating();
    case ASEP_IC_ONE_SIDED:
      return asep::InitialCondition::one_sided(ic->k0);
    case ASEP_IC_STEP:
      return asep::InitialCondition::step();
  }
  throw asep::DomainError("unknown initial condition kind");
}

asep::EvalOptions to_options(const asep_eval_options* opts) {
  asep::EvalOptions o;
  if (opts != nullptr) {
    o.kmax = opts->kmax;
    o.tol = opts->tol;
    o.max_nodes = opts->max_nodes;
    o.split_minus = opts->split_minus;
  }
  return o;
}

void fill_point(const asep::SeriesReport& rep, asep_point* out) {
  out->value = rep.value;
  out->raw_sum = rep.raw_sum;
  out->est_error = rep.est_error;
  out->tail_bound = rep.tail_bound;
  out->im_residual = rep.im_residual;
  out->terms = rep.terms;
  out->shells = rep.shells_used;
  out->converged = rep.converged ? 1 : 0;
}

double rel_gap(asep::cx a, asep::cx b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

}  // namespace

struct asep_model {
  asep::ModelParams params;
};

struct asep_plan {
  asep::ContourPlan plan;
};

struct asep_master {
  asep::MasterSolution sol;
};

struct asep_sim {
  asep::EmpiricalCdf cdf;
};

extern "C" {

const char* asep_status_name(asep_status s) {
  switch (s) {
    case ASEP_OK: return "ok";
    case ASEP_ERR_INVALID_ARG: return "invalid_arg";
    case ASEP_ERR_POLE: return "pole";
    case ASEP_ERR_INFEASIBLE_PLAN: return "infeasible_plan";
    case ASEP_ERR_STATE_TOO_LARGE: return "state_too_large";
    case ASEP_ERR_WINDOW: return "window";
    case ASEP_ERR_BUFFER: return "buffer";
    case ASEP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* asep_last_error(void) { return g_last_error.c_str(); }

const char* asep_version(void) { return "1.0.0"; }

const char* asep_build_id(void) { return ASEP_BUILD_ID; }

void asep_set_threads(int n) { asep::set_worker_count(n); }

int asep_threads(void) { return asep::worker_count(); }

asep_status asep_model_create(double p, asep_model** out) {
  if (out == nullptr) return fail_invalid("model: out is null");
  *out = nullptr;
  return guarded([&] {
    *out = new asep_model{asep::ModelParams(p)};
    return ASEP_OK;
  });
}

void asep_model_destroy(asep_model* m) { delete m; }

double asep_model_p(const asep_model* m) {
  return m ? m->params.p : std::numeric_limits<double>::quiet_NaN();
}

double asep_model_q(const asep_model* m) {
  return m ? m->params.q : std::numeric_limits<double>::quiet_NaN();
}

double asep_model_tau(const asep_model* m) {
  return m ? m->params.tau : std::numeric_limits<double>::quiet_NaN();
}

asep_status asep_plan_create(const asep_model* m, asep_plan_kind kind,
                             double safety, asep_plan** out) {
  if (m == nullptr) return fail_invalid("plan: model is null");
  if (out == nullptr) return fail_invalid("plan: out is null");
  *out = nullptr;
  return guarded([&] {
    const asep::ContourKind ck = kind == ASEP_PLAN_LARGE_ONLY
                                     ? asep::ContourKind::LargeOnly
                                     : asep::ContourKind::TwoSided;
    *out = new asep_plan{asep::plan_contours(m->params, safety, ck)};
    return ASEP_OK;
  });
}

asep_status asep_plan_scale(const asep_plan* plan, double f_large,
                            double f_small, asep_plan** out) {
  if (plan == nullptr) return fail_invalid("plan_scale: plan is null");
  if (out == nullptr) return fail_invalid("plan_scale: out is null");
  *out = nullptr;
  return guarded([&] {
    *out = new asep_plan{plan->plan.scaled(f_large, f_small)};
    return ASEP_OK;
  });
}

void asep_plan_destroy(asep_plan* plan) { delete plan; }

double asep_plan_radius_small(const asep_plan* plan) {
  return plan ? plan->plan.radius_small
              : std::numeric_limits<double>::quiet_NaN();
}

double asep_plan_radius_large(const asep_plan* plan) {
  return plan ? plan->plan.radius_large
              : std::numeric_limits<double>::quiet_NaN();
}

double asep_plan_radius_large_pure(const asep_plan* plan) {
  return plan ? plan->plan.radius_large_pure
              : std::numeric_limits<double>::quiet_NaN();
}

double asep_plan_radius_large_tight(const asep_plan* plan) {
  return plan ? plan->plan.radius_large_tight
              : std::numeric_limits<double>::quiet_NaN();
}

int asep_plan_start_nodes(const asep_plan* plan) {
  return plan ? plan->plan.nodes : 0;
}

asep_status asep_ic_start_position(const asep_ic* ic, int64_t m,
                                   int64_t* out) {
  if (ic == nullptr || out == nullptr)
    return fail_invalid("start_position: null argument");
  return guarded([&] {
    switch (ic->kind) {
      case ASEP_IC_FINITE:
        if (m < 1 || static_cast<size_t>(m) > ic->n_sites)
          throw asep::DomainError(
              "particle index out of range for the finite start");
        *out = ic->sites[m - 1];
        return ASEP_OK;
      case ASEP_IC_ALTERNATING:
        if (m % 2 == 0)
          throw asep::DomainError(
              "alternating start tags odd initial sites only");
        *out = m;
        return ASEP_OK;
      case ASEP_IC_ONE_SIDED:
        if (m < 1)
          throw asep::DomainError("particle index must be at least 1");
        *out = 2 * m - ic->k0;
        return ASEP_OK;
      case ASEP_IC_STEP:
        if (m < 1)
          throw asep::DomainError("particle index must be at least 1");
        *out = m;
        return ASEP_OK;
    }
    throw asep::DomainError("unknown initial condition kind");
  });
}

void asep_eval_options_default(asep_eval_options* opts) {
  if (opts == nullptr) return;
  const asep::EvalOptions d;
  opts->kmax = d.kmax;
  opts->tol = d.tol;
  opts->max_nodes = d.max_nodes;
  opts->split_minus = d.split_minus;
}

asep_status asep_eval_cdf(const asep_plan* plan, const asep_ic* ic, int64_t m,
                          int64_t x, double t, const asep_eval_options* opts,
                          asep_point* out) {
  if (plan == nullptr || ic == nullptr || out == nullptr)
    return fail_invalid("eval: null argument");
  return guarded([&] {
    const asep::InitialCondition cond = to_ic(ic);
    asep::DistributionQuery q;
    q.m = m;
    q.x = x;
    q.t = t;
    asep::EvalOptions o = to_options(opts);
    q.kmax = o.kmax;
    q.tol = o.tol;
    fill_point(asep::eval_cdf(cond, q, plan->plan, o), out);
    return ASEP_OK;
  });
}

asep_status asep_step_current_tail(const asep_plan* plan, int64_t m, int64_t x,
                                   double t, const asep_eval_options* opts,
                                   double* out) {
  if (plan == nullptr || out == nullptr)
    return fail_invalid("current_tail: null argument");
  return guarded([&] {
    *out = asep::current_tail_prob(m, x, t, plan->plan, to_options(opts));
    return ASEP_OK;
  });
}

asep_status asep_skellam_cdf(const asep_model* m, int64_t x, int64_t x0,
                             double t, double* out) {
  if (m == nullptr || out == nullptr)
    return fail_invalid("skellam: null argument");
  return guarded([&] {
    *out = asep::free_particle_cdf(x, x0, t, m->params);
    return ASEP_OK;
  });
}

asep_status asep_master_solve(const asep_model* m, const int64_t* sites,
                              size_t n_sites, double t, int margin,
                              asep_master** out) {
  if (m == nullptr || sites == nullptr || out == nullptr)
    return fail_invalid("master: null argument");
  *out = nullptr;
  return guarded([&] {
    const std::vector<std::int64_t> y(sites, sites + n_sites);
    *out = new asep_master{asep::master_equation(y, t, m->params, margin)};
    return ASEP_OK;
  });
}

void asep_master_destroy(asep_master* sol) { delete sol; }

double asep_master_cdf(const asep_master* sol, int m, int64_t x) {
  if (sol == nullptr) return std::numeric_limits<double>::quiet_NaN();
  try {
    return sol->sol.cdf(m, x);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double asep_master_boundary_mass(const asep_master* sol) {
  return sol ? sol->sol.boundary_mass()
             : std::numeric_limits<double>::quiet_NaN();
}

int asep_master_particles(const asep_master* sol) {
  return sol ? sol->sol.particles() : 0;
}

asep_status asep_simulate(const asep_model* m, const asep_ic* ic,
                          int64_t tagged_site, double t, int64_t n_traj,
                          uint64_t seed, int margin, asep_sim** out) {
  if (m == nullptr || ic == nullptr || out == nullptr)
    return fail_invalid("simulate: null argument");
  *out = nullptr;
  return guarded([&] {
    asep::SimConfig cfg;
    cfg.params = m->params;
    cfg.ic = to_ic(ic);
    cfg.tagged_site = tagged_site;
    cfg.t = t;
    cfg.n_traj = n_traj;
    cfg.seed = seed;
    cfg.margin = margin;
    *out = new asep_sim{asep::mc_simulate(cfg)};
    return ASEP_OK;
  });
}

void asep_sim_destroy(asep_sim* sim) { delete sim; }

double asep_sim_prob(const asep_sim* sim, int64_t x) {
  if (sim == nullptr) return std::numeric_limits<double>::quiet_NaN();
  return sim->cdf.prob(x);
}

double asep_sim_ci95(const asep_sim* sim, int64_t x) {
  if (sim == nullptr) return std::numeric_limits<double>::quiet_NaN();
  return sim->cdf.ci95(x);
}

int64_t asep_sim_cumulative_count(const asep_sim* sim, int64_t x) {
  return sim ? sim->cdf.cumulative_count(x) : 0;
}

int64_t asep_sim_trajectories(const asep_sim* sim) {
  return sim ? sim->cdf.trajectories() : 0;
}

int64_t asep_sim_flagged(const asep_sim* sim) {
  return sim ? sim->cdf.flagged() : 0;
}

void asep_verify_request_default(asep_verify_request* req) {
  if (req == nullptr) return;
  req->suite = ASEP_VERIFY_DET_KERNEL;
  req->kmax = 6;
  req->trials = 100;
  req->seed = 1;
  req->ic = ASEP_IC_ALTERNATING;
  req->k0 = 1;
  req->m = 1;
  req->t = 0.5;
  req->x_lo = INT64_MIN;
  req->x_hi = INT64_MIN;
  req->tol = 1e-9;
}

}  // extern "C"

namespace {

using Rows = std::vector<asep_verify_row>;

// Worst relative residual of lhs vs rhs over `trials` pole-free random
// tuples of k variables.
template <typename Lhs, typename Rhs>
double max_identity_residual(const asep::ModelParams& mp, int k, int trials,
                             std::uint64_t seed, Lhs&& lhs, Rhs&& rhs) {
  asep::Xoshiro256 rng(seed, static_cast<std::uint64_t>(k));
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::vector<asep::cx> xi = asep::sample_identity_points(rng, k, mp);
    worst = std::max(worst, rel_gap(lhs(xi), rhs(xi)));
  }
  return worst;
}

void run_det_kernel(const asep::ModelParams& mp, const asep_verify_request& rq,
                    Rows& rows) {
  const int kmax = std::clamp(rq.kmax, 1, 9);
  for (int k = 1; k <= kmax; ++k) {
    const double res = max_identity_residual(
        mp, k, rq.trials, rq.seed,
        [&](const std::vector<asep::cx>& xi) {
          return asep::det_kernel_lhs(xi, mp);
        },
        [&](const std::vector<asep::cx>& xi) {
          return asep::det_kernel_rhs(xi, mp);
        });
    rows.push_back({"det_kernel", k, res, 1e-9});
  }
}

void run_sym_sum(const asep::ModelParams& mp, const asep_verify_request& rq,
                 Rows& rows) {
  const int kmax = std::clamp(rq.kmax, 1, 8);
  for (int k = 1; k <= kmax; ++k) {
    const double res = max_identity_residual(
        mp, k, rq.trials, rq.seed,
        [&](const std::vector<asep::cx>& xi) {
          return asep::symmetrization_lhs(xi, mp);
        },
        [&](const std::vector<asep::cx>& xi) {
          return asep::symmetrization_rhs(xi, mp);
        });
    rows.push_back({"sym_sum", k, res, 1e-9});
  }
}

void run_residue(const asep::ModelParams& mp, const asep_verify_request& rq,
                 Rows& rows) {
  const int kmax = std::clamp(rq.kmax, 1, 5);
  for (int k = 1; k <= kmax; ++k) {
    const double res = max_identity_residual(
        mp, k, rq.trials, rq.seed,
        [&](const std::vector<asep::cx>& xi) {
          return asep::residue_identity_lhs(xi, mp);
        },
        [&](const std::vector<asep::cx>& xi) {
          return asep::residue_identity_rhs(xi, mp);
        });
    rows.push_back({"residue_identity", k, res, 1e-9});

    // The contour witness: integrating the rational witness function over a
    // circle enclosing every pole equals the closed-form residue sum.
    asep::Xoshiro256 rng(rq.seed, 1000 + static_cast<std::uint64_t>(k));
    double worst = 0.0;
    const int witness_trials = std::max(1, rq.trials / 10);
    for (int trial = 0; trial < witness_trials; ++trial) {
      const std::vector<asep::cx> xi =
          asep::sample_identity_points(rng, k, mp);
      worst = std::max(
          worst, rel_gap(asep::residue_witness_contour(xi, mp),
                         asep::residue_witness_residue_sum(xi, mp)));
    }
    rows.push_back({"residue_witness", k, worst, 1e-8});
  }
}

void default_x_range(const asep_verify_request& rq, std::int64_t& lo,
                     std::int64_t& hi) {
  lo = rq.x_lo;
  hi = rq.x_hi;
  if (lo == INT64_MIN || hi == INT64_MIN) {
    lo = rq.m - 3;
    hi = rq.m + 3;
  }
  if (lo > hi) std::swap(lo, hi);
}

void run_radius(const asep::ModelParams& mp, const asep_verify_request& rq,
                Rows& rows) {
  const bool large_only =
      rq.ic == ASEP_IC_STEP || rq.ic == ASEP_IC_ONE_SIDED;
  const asep::ContourPlan base = asep::plan_contours(
      mp, 1.15,
      large_only ? asep::ContourKind::LargeOnly : asep::ContourKind::TwoSided);
  const asep::ContourPlan alt = base.scaled(1.15, 0.85);
  asep::InitialCondition cond = asep::InitialCondition::alternating();
  if (rq.ic == ASEP_IC_STEP) cond = asep::InitialCondition::step();
  if (rq.ic == ASEP_IC_ONE_SIDED)
    cond = asep::InitialCondition::one_sided(rq.k0);
  if (rq.ic == ASEP_IC_FINITE)
    throw asep::DomainError(
        "radius suite covers the infinite starts; finite starts are checked "
        "by their own split invariance");
  asep::DistributionQuery q;
  q.m = rq.m;
  q.t = rq.t;
  q.tol = std::min(rq.tol, 1e-9);
  asep::EvalOptions opts;
  std::int64_t lo = 0, hi = 0;
  default_x_range(rq, lo, hi);
  for (std::int64_t x = lo; x <= hi; ++x) {
    q.x = x;
    const double a = asep::eval_cdf(cond, q, base, opts).value;
    const double b = asep::eval_cdf(cond, q, alt, opts).value;
    rows.push_back({"radius_drift", x, std::fabs(a - b), 1e-7});
  }
}

void run_symm(const asep::ModelParams& mp, const asep_verify_request& rq,
              Rows& rows) {
  if (rq.ic != ASEP_IC_ALTERNATING)
    throw asep::DomainError(
        "the symmetrized-series suite applies to the alternating start");
  const asep::ContourPlan plan = asep::plan_contours(mp);
  const int kmax = std::clamp(rq.kmax, 1, 3);
  std::int64_t lo = 0, hi = 0;
  default_x_range(rq, lo, hi);
  for (int k = 1; k <= kmax; ++k) {
    double worst = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x) {
      for (int km = 0; km <= k; ++km) {
        const asep::TermRecord sym = asep::alternating_term(
            rq.m, x, rq.t, km, k - km, plan, 1e-11);
        const asep::TermRecord plain = asep::alternating_term_unsym(
            rq.m, x, rq.t, km, k - km, plan, 1e-11);
        if (sym.coeff == 0.0 && plain.coeff == 0.0) continue;
        worst = std::max(
            worst, rel_gap(static_cast<asep::cx>(sym.coeff) * sym.integral,
                           static_cast<asep::cx>(plain.coeff) *
                               plain.integral));
      }
    }
    rows.push_back({"series_term", k, worst, 1e-9});
  }
}

}  // namespace

extern "C" asep_status asep_verify_run(const asep_model* m,
                                       const asep_verify_request* req,
                                       asep_verify_row* rows, size_t capacity,
                                       size_t* count) {
  if (m == nullptr || req == nullptr || count == nullptr)
    return fail_invalid("verify: null argument");
  *count = 0;
  return guarded([&] {
    if (req->trials < 1) throw asep::DomainError("verify: trials must be >= 1");
    Rows collected;
    switch (req->suite) {
      case ASEP_VERIFY_DET_KERNEL:
        run_det_kernel(m->params, *req, collected);
        break;
      case ASEP_VERIFY_SYM_SUM:
        run_sym_sum(m->params, *req, collected);
        break;
      case ASEP_VERIFY_RESIDUE:
        run_residue(m->params, *req, collected);
        break;
      case ASEP_VERIFY_RADIUS:
        run_radius(m->params, *req, collected);
        break;
      case ASEP_VERIFY_SYMM:
        run_symm(m->params, *req, collected);
        break;
      default:
        throw asep::DomainError("verify: unknown suite");
    }
    *count = collected.size();
    if (rows == nullptr || capacity < collected.size()) {
      g_last_error = "verify: row buffer too small";
      return ASEP_ERR_BUFFER;
    }
    std::copy(collected.begin(), collected.end(), rows);
    return ASEP_OK;
  });
}
