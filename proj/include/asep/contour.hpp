#pragma once

#include <functional>
#include <span>
#include <vector>

#include "asep/model.hpp"

namespace asep {

// Quadrature contours are circles centered at the origin: a large circle
// C_R for positive-index variables and a small circle C_r for negative-index
// ones.  Validity is a pole-separation question; the rules implemented by
// plan_contours and the margin helpers are:
//
//   large variables:
//     the single-variable poles at 1, tau, and +-sqrt(tau) and the pair
//     poles of p + q*xi_i*xi_j - xi_i fed by another large variable (moduli
//     up to (R+p)/(qR) in one orientation and p/(qR-1) in the other) must
//     all lie strictly inside C_R; this forces qR^2 - R - p > 0.  Pair
//     poles fed by a small variable sit at modulus >= (p-r)/(qr) and stay
//     strictly outside C_R.
//   small variables:
//     C_r encloses only the origin (the xi^{x-s} powers and the essential
//     singularity of e^{p t / xi}).  Every pole of the pair denominators
//     stays strictly outside: same-side pairs occupy moduli >= p/(1+qr),
//     pairs fed by a large variable occupy moduli >= p/(1+qR), and the
//     single-variable poles sit at 1 and sqrt(tau).  The binding constraint
//     is r(1+qR) < p, which also yields the outside-C_R rule above.
//
// Terms that live on one circle only are cheaper to separate, so the plan
// carries dedicated radii for them: radius_large_pure for "all variables
// large" terms and radius_large_tight for the same terms when x is large
// and positive, where a small circle keeps the integrand's dynamic range
// (~R^x) from eating the working precision.
struct ContourPlan {
  ModelParams params;
  double radius_large;        // C_R for mixed terms
  double radius_small;        // C_r
  double radius_large_pure;   // C_R when no small variable participates
  double radius_large_tight;  // as radius_large_pure, biased small for x >> 0
  int nodes;                  // starting node count per circle (power of 2)

  // Scaled copy (radius-independence checks).  All large radii scale by
  // f_large, the small one by f_small.
  ContourPlan scaled(double f_large, double f_small) const;
};

enum class ContourKind { TwoSided, LargeOnly };

// Smallest pole-separation ratio (> 1 means valid) for each contour class.
double margin_two_sided(const ModelParams&, double R, double r);
double margin_large_only(const ModelParams&, double R);
double margin_small_only(const ModelParams&, double r);

// Chooses radii maximizing the worst pole-separation ratio, with a mild
// preference for small radii (they keep e^{qRt} and R^x moderate).  Requires
// the worst ratio to be at least `safety` and the scaled plan (1.15 R,
// 0.85 r) to stay valid; throws InfeasiblePlanError otherwise.
ContourPlan plan_contours(const ModelParams&, double safety = 1.15,
                          ContourKind kind = ContourKind::TwoSided);

struct QuadratureResult {
  cx value;
  double est_error;      // |last level - previous level|
  int nodes_used;        // nodes per circle at the final level
  bool converged;
};

// Integrand of a tensor-product contour integral.  prepare() is called once
// per node level with the quadrature nodes; eval() is called per tuple with
// node indices (canonical order: small-contour variables first).  The
// default eval() materializes the tuple values and calls eval_values(), so
// simple integrands only override the latter.
class TensorIntegrand {
 public:
  virtual ~TensorIntegrand() = default;
  virtual void prepare(std::span<const cxl> nodes_small,
                       std::span<const cxl> nodes_large);
  virtual cxl eval(std::span<const int> idx_small,
                   std::span<const int> idx_large) const;
  virtual cxl eval_values(std::span<const cxl> xi) const;

 protected:
  std::vector<cxl> nodes_small_, nodes_large_;
};

// (2*pi*i)^{-k} times the iterated contour integral of the integrand over
// C_r^{k_minus} x C_R^{k_plus}, by the trapezoid rule with node doubling
// until successive levels differ by less than tol (est_error reports that
// difference).  Node counts are powers of two, capped at max_nodes per
// circle and 1e8 tuples per level.  radius overrides of 0 pick the plan
// radius for the term class (pure-plus terms use radius_large_pure).
// Deterministic for any worker count.
QuadratureResult integrate_tensor(TensorIntegrand& f, int k_minus, int k_plus,
                                  const ContourPlan& plan, double tol,
                                  int max_nodes = 512,
                                  double radius_small_override = 0.0,
                                  double radius_large_override = 0.0);

// One-variable convenience used by the identity checks: (2*pi*i)^{-1} times
// the integral of fn over the circle |z| = radius.
QuadratureResult integrate_circle(const std::function<cx(cx)>& fn,
                                  double radius, double tol,
                                  int max_nodes = 4096);

}  // namespace asep
