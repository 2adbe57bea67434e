#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "asep/contour.hpp"
#include "asep/model.hpp"

namespace asep {

// Evaluators for P(X_m(t) <= x).  Everything here follows one convention
// for variable tuples ("canonical order"): the small-contour variables come
// first, ordered from the most negative label to -1, followed by the
// large-contour variables from label 1 upward.  For subset-indexed
// integrands this makes the attached sites simply the subset in ascending
// order.

struct TermIndex {
  int k_minus = 0;
  int k_plus = 0;
};

struct TermRecord {
  TermIndex idx;
  double coeff = 0.0;       // series coefficient multiplying the integral
  cx integral{0.0, 0.0};    // contour integral value (2 pi i normalized)
  double quad_error = 0.0;  // quadrature error estimate on coeff * integral
  int nodes = 0;            // nodes per circle at the accepted level
  bool converged = true;
};

struct SeriesReport {
  double value = 0.0;        // probability, clamped to [0, 1]
  double raw_sum = 0.0;      // unclamped real part of the series
  double im_residual = 0.0;  // |imaginary part| left over, should be ~0
  double est_error = 0.0;    // accumulated quadrature error estimates
  double tail_bound = 0.0;   // geometric bound on the dropped shells
  int shells_used = 0;       // highest k_minus + k_plus evaluated
  int terms = 0;             // nonzero terms evaluated
  bool converged = false;
  std::vector<TermRecord> term_log;  // filled when keep_terms is set
};

struct EvalOptions {
  int kmax = 12;        // highest shell for the infinite series
  double tol = 1e-6;    // absolute tolerance on the probability
  int max_nodes = 512;  // per-circle quadrature cap
  bool keep_terms = false;
  // prob_finite only: number of leading (smallest) sites integrated over the
  // small contour; -1 splits by sign (sites < 0 go small).  Any split gives
  // the same value, which tests exploit.
  int split_minus = -1;
};

// Building blocks, exposed for tests.

// Geometric-series closed forms attached to the plus/minus site sums.
// phi_plus takes (xi_1, ..., xi_{k+}); phi_minus takes canonical order,
// i.e. (xi_{-k-}, ..., xi_{-1}).
cxl phi_plus(std::span<const cxl> xi_plus, const ModelParams&);
cxl phi_minus(std::span<const cxl> xi_minus, const ModelParams&);

// Determinant kernels of the symmetrized form.
cxl kernel_plus(cxl xi, cxl xi_prime, std::int64_t x, double t,
                const ModelParams&);
cxl kernel_minus(cxl xi, cxl xi_prime, std::int64_t x, double t,
                 const ModelParams&);

// det(K(xi_i, xi_j)) times the extra pair product, per contour side.
cxl g_plus(std::span<const cxl> xi_plus, std::int64_t x, double t,
           const ModelParams&);
cxl g_minus(std::span<const cxl> xi_minus, std::int64_t x, double t,
            const ModelParams&);

// Series coefficients.  Sets are passed sorted ascending.
double coeff_finite(std::int64_t m, std::span<const std::int64_t> s_minus,
                    std::span<const std::int64_t> s_plus,
                    std::span<const std::int64_t> y_minus,
                    std::span<const std::int64_t> y_plus, const ModelParams&);
// Variant counting the particle as m-th to the right of the minus block
// (particle index m + |y_minus|).  Must agree with coeff_finite there.
double coeff_shifted(std::int64_t m, std::span<const std::int64_t> s_minus,
                     std::span<const std::int64_t> s_plus,
                     std::span<const std::int64_t> y_minus,
                     std::span<const std::int64_t> y_plus,
                     const ModelParams&);
// Alternating-lattice coefficients: the plain series form and the combined
// form carrying the determinant normalizers and 1/(k-! k+!).
double coeff_alternating(std::int64_t m, int k_minus, int k_plus,
                         const ModelParams&);
double coeff_alternating_combined(std::int64_t m, int k_minus, int k_plus,
                                  const ModelParams&);
// Shared coefficient of the step and one-sided alternating series.
double coeff_onesided(std::int64_t m, int k, const ModelParams&);

// Distribution evaluators.  m conventions:
//   prob_finite: m-th particle from the leftmost, 1-based.
//   prob_alternating: m is the odd initial site of the tagged particle.
//   prob_onesided: m-th particle from the leftmost (initial site 2m - k0).
//   prob_step: m-th particle from the leftmost (initial site m).
SeriesReport prob_finite(std::span<const std::int64_t> sites, std::int64_t m,
                         std::int64_t x, double t, const ContourPlan&,
                         const EvalOptions& = {});
SeriesReport prob_alternating(std::int64_t m, std::int64_t x, double t,
                              const ContourPlan&, const EvalOptions& = {});
// Reference evaluation of the same series from the unsymmetrized integrand;
// slow, used for equivalence checks at small k.
SeriesReport prob_alternating_unsym(std::int64_t m, std::int64_t x, double t,
                                    const ContourPlan&, const EvalOptions& = {});
SeriesReport prob_onesided(std::int64_t m, std::int64_t x, double t,
                           std::int64_t k0, const ContourPlan&,
                           const EvalOptions& = {});
SeriesReport prob_step(std::int64_t m, std::int64_t x, double t,
                       const ContourPlan&, const EvalOptions& = {});

// P(at least m particles sit at or left of x at time t) for the step start;
// the drift regime of interest has p < q, enforced here.
double current_tail_prob(std::int64_t m, std::int64_t x, double t,
                         const ContourPlan&, const EvalOptions& = {});

// Single series terms (coefficient and integral) for both alternating
// paths, for term-by-term equivalence tests.
TermRecord alternating_term(std::int64_t m, std::int64_t x, double t,
                            int k_minus, int k_plus, const ContourPlan&,
                            double quad_tol, int max_nodes = 512);
TermRecord alternating_term_unsym(std::int64_t m, std::int64_t x, double t,
                                  int k_minus, int k_plus, const ContourPlan&,
                                  double quad_tol, int max_nodes = 512);

// Routes a query to the evaluator for the given initial condition.  For
// FiniteSet/OneSidedAlternating/StepPositive the query's m is the particle
// index; for AlternatingZ it is the odd initial site.
SeriesReport eval_cdf(const InitialCondition&, const DistributionQuery&,
                      const ContourPlan&, const EvalOptions& = {});

}  // namespace asep
