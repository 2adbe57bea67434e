#ifndef ASEP_ASEP_H
#define ASEP_ASEP_H

/* C interface to the tagged-particle distribution evaluator for the
 * asymmetric simple exclusion process. All objects live behind opaque
 * handles; every fallible call returns an asep_status and leaves a
 * human-readable message in asep_last_error() on failure. Handles are
 * immutable after creation, so one handle may be shared by any number of
 * threads. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ASEP_API __declspec(dllexport)
#else
#define ASEP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum asep_status {
  ASEP_OK = 0,
  ASEP_ERR_INVALID_ARG = 1,    /* bad parameter or out-of-domain request */
  ASEP_ERR_POLE = 2,           /* evaluation point on top of a pole */
  ASEP_ERR_INFEASIBLE_PLAN = 3,/* no contour radii satisfy the constraints */
  ASEP_ERR_STATE_TOO_LARGE = 4,/* master-equation state space over the cap */
  ASEP_ERR_WINDOW = 5,         /* simulation window contaminated by edges */
  ASEP_ERR_BUFFER = 6,         /* caller-provided buffer too small */
  ASEP_ERR_INTERNAL = 7        /* anything unexpected; see asep_last_error */
} asep_status;

/* Stable name for a status code, e.g. "invalid_arg". Never NULL. */
ASEP_API const char* asep_status_name(asep_status s);

/* Message from the most recent failing call on this thread. Never NULL;
 * empty string when no call has failed yet. */
ASEP_API const char* asep_last_error(void);

/* Library version ("major.minor.patch") and the source revision it was
 * built from. Both are constants for a given build. */
ASEP_API const char* asep_version(void);
ASEP_API const char* asep_build_id(void);

/* Worker threads used by evaluations. 0 means one per hardware thread.
 * Results are bit-identical for every setting; this only changes speed. */
ASEP_API void asep_set_threads(int n);
ASEP_API int asep_threads(void);

/* ---- model ---------------------------------------------------------- */

typedef struct asep_model asep_model;

/* Right-jump rate p must lie strictly inside (0, 1); the left rate is
 * q = 1 - p. The infinite-start series are tuned for leftward drift
 * (p < q); with p >= q they may honestly report non-convergence. */
ASEP_API asep_status asep_model_create(double p, asep_model** out);
ASEP_API void asep_model_destroy(asep_model* m);
ASEP_API double asep_model_p(const asep_model* m);
ASEP_API double asep_model_q(const asep_model* m);
ASEP_API double asep_model_tau(const asep_model* m);

/* ---- contour plan ---------------------------------------------------- */

typedef struct asep_plan asep_plan;

typedef enum asep_plan_kind {
  ASEP_PLAN_TWO_SIDED = 0, /* small and large circles; any start */
  ASEP_PLAN_LARGE_ONLY = 1 /* large circles only; step / one-sided starts */
} asep_plan_kind;

/* Chooses contour radii maximizing the worst pole-separation margin.
 * safety is the minimum acceptable margin (> 1); 1.15 is the default used
 * throughout. */
ASEP_API asep_status asep_plan_create(const asep_model* m, asep_plan_kind kind,
                                      double safety, asep_plan** out);

/* Copy with all large radii scaled by f_large and the small radius by
 * f_small. Fails with ASEP_ERR_INFEASIBLE_PLAN when the scaled radii
 * violate the pole-separation constraints. */
ASEP_API asep_status asep_plan_scale(const asep_plan* plan, double f_large,
                                     double f_small, asep_plan** out);
ASEP_API void asep_plan_destroy(asep_plan* plan);

ASEP_API double asep_plan_radius_small(const asep_plan* plan);
ASEP_API double asep_plan_radius_large(const asep_plan* plan);
ASEP_API double asep_plan_radius_large_pure(const asep_plan* plan);
ASEP_API double asep_plan_radius_large_tight(const asep_plan* plan);
ASEP_API int asep_plan_start_nodes(const asep_plan* plan);

/* ---- initial conditions ---------------------------------------------- */

typedef enum asep_ic_kind {
  ASEP_IC_FINITE = 0,      /* explicit site list */
  ASEP_IC_ALTERNATING = 1, /* every odd site of the full lattice */
  ASEP_IC_ONE_SIDED = 2,   /* sites {2n - k0 : n >= 1}, k0 <= 1 */
  ASEP_IC_STEP = 3         /* every positive site */
} asep_ic_kind;

typedef struct asep_ic {
  asep_ic_kind kind;
  const int64_t* sites; /* ASEP_IC_FINITE: strictly ascending, n_sites long */
  size_t n_sites;
  int64_t k0; /* ASEP_IC_ONE_SIDED only */
} asep_ic;

/* Initial position of tagged particle m, counted from the leftmost
 * occupied site (finite starts) or by the lattice labelling of the
 * infinite patterns (alternating: odd m is its own site; one-sided:
 * 2m - k0; step: m). */
ASEP_API asep_status asep_ic_start_position(const asep_ic* ic, int64_t m,
                                            int64_t* out);

/* ---- distribution evaluation ----------------------------------------- */

typedef struct asep_eval_options {
  int kmax;        /* highest series shell, 1..12 (default 12) */
  double tol;      /* absolute tolerance on the probability (default 1e-6) */
  int max_nodes;   /* per-circle quadrature cap (default 512) */
  int split_minus; /* finite starts: leading sites on the small contour;
                      -1 splits by sign (default) */
} asep_eval_options;

ASEP_API void asep_eval_options_default(asep_eval_options* opts);

typedef struct asep_point {
  double value;       /* P(X_m(t) <= x), clamped to [0, 1] */
  double raw_sum;     /* unclamped real part of the series */
  double est_error;   /* accumulated quadrature error estimates */
  double tail_bound;  /* geometric bound on the dropped shells */
  double im_residual; /* |imaginary part| left over, ~0 for a sound plan */
  int32_t terms;      /* nonzero terms evaluated */
  int32_t shells;     /* highest shell evaluated */
  int32_t converged;  /* 1 when the stop rule fired within budget */
} asep_point;

/* Evaluates P(X_m(t) <= x). The plan must come from the same model and be
 * two-sided unless the start needs large circles only. opts may be NULL
 * for defaults. Non-convergence is not an error: the point is filled and
 * converged is 0. */
ASEP_API asep_status asep_eval_cdf(const asep_plan* plan, const asep_ic* ic,
                                   int64_t m, int64_t x, double t,
                                   const asep_eval_options* opts,
                                   asep_point* out);

/* P(at least m particles sit at or left of x at time t) under the step
 * start, the cumulative-current reading of the same series. Requires the
 * left-drift regime p < q. */
ASEP_API asep_status asep_step_current_tail(const asep_plan* plan, int64_t m,
                                            int64_t x, double t,
                                            const asep_eval_options* opts,
                                            double* out);

/* ---- oracles ---------------------------------------------------------- */

/* Distribution of a single free particle (no exclusion) started at x0:
 * P(position(t) <= x) from the skellam law of right minus left jumps. */
ASEP_API asep_status asep_skellam_cdf(const asep_model* m, int64_t x,
                                      int64_t x0, double t, double* out);

typedef struct asep_master asep_master;

/* Exact finite-start distribution by integrating the master equation with
 * exclusion on a window [lo, hi]. margin <= 0 picks a width from t. */
ASEP_API asep_status asep_master_solve(const asep_model* m,
                                       const int64_t* sites, size_t n_sites,
                                       double t, int margin,
                                       asep_master** out);
ASEP_API void asep_master_destroy(asep_master* sol);
ASEP_API double asep_master_cdf(const asep_master* sol, int m, int64_t x);
ASEP_API double asep_master_boundary_mass(const asep_master* sol);
ASEP_API int asep_master_particles(const asep_master* sol);

typedef struct asep_sim asep_sim;

/* Continuous-time Monte Carlo of the exclusion dynamics. The tagged site
 * must be occupied at t = 0 (see asep_ic_start_position). Infinite starts
 * are truncated to a window sized by margin (<= 0 picks 10 + ceil(5t));
 * trajectories ending near the window edge are counted as flagged.
 * Identical seeds give identical counts for any thread count. */
ASEP_API asep_status asep_simulate(const asep_model* m, const asep_ic* ic,
                                   int64_t tagged_site, double t,
                                   int64_t n_traj, uint64_t seed, int margin,
                                   asep_sim** out);
ASEP_API void asep_sim_destroy(asep_sim* sim);
ASEP_API double asep_sim_prob(const asep_sim* sim, int64_t x);
ASEP_API double asep_sim_ci95(const asep_sim* sim, int64_t x);
ASEP_API int64_t asep_sim_cumulative_count(const asep_sim* sim, int64_t x);
ASEP_API int64_t asep_sim_trajectories(const asep_sim* sim);
ASEP_API int64_t asep_sim_flagged(const asep_sim* sim);

/* ---- verification suites ---------------------------------------------- */

typedef enum asep_verify_suite {
  /* det(1/(p + q xi_i xi_j - xi_i)) equals its product closed form. */
  ASEP_VERIFY_DET_KERNEL = 0,
  /* The k!-term permutation sum equals its pair-product closed form. */
  ASEP_VERIFY_SYM_SUM = 1,
  /* The one-variable residue identity and its contour witness. */
  ASEP_VERIFY_RESIDUE = 2,
  /* CDF values are unchanged under rescaled contour radii. */
  ASEP_VERIFY_RADIUS = 3,
  /* The determinant-form series agrees with the plain series per term. */
  ASEP_VERIFY_SYMM = 4
} asep_verify_suite;

typedef struct asep_verify_request {
  asep_verify_suite suite;
  int kmax;      /* identity suites: highest variable count */
  int trials;    /* identity suites: random tuples per k */
  uint64_t seed; /* identity suites: RNG seed */
  /* radius / symm suites: */
  asep_ic_kind ic;
  int64_t k0;
  int64_t m;
  double t;
  int64_t x_lo, x_hi; /* INT64_MIN, INT64_MIN = default m-3 .. m+3 */
  double tol;         /* evaluation tolerance */
} asep_verify_request;

ASEP_API void asep_verify_request_default(asep_verify_request* req);

typedef struct asep_verify_row {
  const char* check; /* static string naming the checked equation */
  int64_t label;     /* variable count k, or site x for the radius suite */
  double residual;   /* worst residual observed for this label */
  double threshold;  /* pass iff residual <= threshold */
} asep_verify_row;

/* Runs one suite and writes up to capacity rows. count receives the number
 * of rows produced; ASEP_ERR_BUFFER is returned when capacity is too small
 * (count then holds the required size). check strings have static
 * lifetime. */
ASEP_API asep_status asep_verify_run(const asep_model* m,
                                     const asep_verify_request* req,
                                     asep_verify_row* rows, size_t capacity,
                                     size_t* count);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ASEP_ASEP_H */
