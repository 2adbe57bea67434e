#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "asep/errors.hpp"

namespace asep {

using cx = std::complex<double>;
// Quadrature internals run in extended precision: the contour integrands
// oscillate with amplitude up to ~R^|x|, so the trapezoid sums cancel many
// digits before settling on an O(1) probability.
using cxl = std::complex<long double>;

// Hop rates of the exclusion process.  p is the right-hop rate, q = 1 - p,
// tau = p/q.  Only p is stored by value; the rest is derived once so every
// formula sees a consistent triple.
struct ModelParams {
  double p;
  double q;
  double tau;

  explicit ModelParams(double right_rate);
};

// epsilon(xi) = p/xi + q*xi - 1, the single-particle symbol.
cx epsilon(cx xi, const ModelParams& mp);

// f(xi_i, xi_j) = (xi_j - xi_i) / (p + q*xi_i*xi_j - xi_i).
// Throws PoleError if the denominator vanishes to working precision.
cx f_factor(cx xi_i, cx xi_j, const ModelParams& mp);

// I(x, xi) = prod_{a<b} f(xi_a, xi_b) * prod_a xi_a^x e^{eps(xi_a) t}/(1 - xi_a).
// The tuple is in canonical order: small-contour variables first (most
// negative index first), then large-contour variables.
cx i_weight(std::int64_t x, std::span<const cx> xi, double t,
            const ModelParams& mp);

// Integer power with exponentiation by squaring; e may be negative.
cx pow_int(cx base, std::int64_t e);
cxl pow_int(cxl base, std::int64_t e);

enum class IcKind { FiniteSet, AlternatingZ, OneSidedAlternating, StepPositive };

// Initial occupancy of the lattice.  FiniteSet carries explicit sites;
// the other three are the infinite patterns handled by the closed-form
// evaluators and the simulator.
struct InitialCondition {
  IcKind kind = IcKind::FiniteSet;
  std::vector<std::int64_t> sites;  // FiniteSet: ascending, duplicate-free
  std::int64_t k0 = 1;              // OneSidedAlternating: sites {2n - k0, n >= 1}

  static InitialCondition finite(std::vector<std::int64_t> y);
  static InitialCondition alternating();
  static InitialCondition one_sided(std::int64_t k0);
  static InitialCondition step();

  bool occupied_at_time_zero(std::int64_t site) const;

  // FiniteSet split around the origin: strictly negative sites on one side,
  // the rest on the other.
  std::vector<std::int64_t> minus_side() const;
  std::vector<std::int64_t> plus_side() const;
};

// A single CDF evaluation request: P(position of tagged/ordered particle m
// at time t  <=  x), with series truncation order kmax and target absolute
// tolerance tol.
struct DistributionQuery {
  std::int64_t m = 1;
  std::int64_t x = 0;
  double t = 1.0;
  int kmax = 12;
  double tol = 1e-6;
};

}  // namespace asep
