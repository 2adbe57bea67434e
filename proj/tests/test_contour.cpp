#include "asep/contour.hpp"

#include <cmath>
#include <complex>

#include "doctest.h"
#include "asep/errors.hpp"

using namespace asep;

namespace {

// prod_i xi_i^{e_i} for fixed per-variable exponents.
class MonomialIntegrand : public TensorIntegrand {
 public:
  explicit MonomialIntegrand(std::vector<std::int64_t> exps)
      : exps_(std::move(exps)) {}

  cxl eval_values(std::span<const cxl> xi) const override {
    cxl v{1.0L, 0.0L};
    for (std::size_t i = 0; i < xi.size(); ++i)
      v *= pow_int(xi[i], exps_[i]);
    return v;
  }

 private:
  std::vector<std::int64_t> exps_;
};

// prod_i 1 / (xi_i - a_i): residue 1 inside the circle, 0 outside.
class SimplePoleIntegrand : public TensorIntegrand {
 public:
  explicit SimplePoleIntegrand(std::vector<cxl> poles)
      : poles_(std::move(poles)) {}

  cxl eval_values(std::span<const cxl> xi) const override {
    cxl v{1.0L, 0.0L};
    for (std::size_t i = 0; i < xi.size(); ++i) v /= xi[i] - poles_[i];
    return v;
  }

 private:
  std::vector<cxl> poles_;
};

}  // namespace

TEST_CASE("single circle integrals pick out residues") {
  auto inv = [](cx z) { return 1.0 / z; };
  QuadratureResult r = integrate_circle(inv, 0.7, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value - cx(1.0, 0.0)) <= 1e-12);

  r = integrate_circle([](cx) { return cx(1.0, 0.0); }, 0.7, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value) <= 1e-12);

  r = integrate_circle([](cx z) { return 1.0 / (z * z); }, 0.7, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value) <= 1e-12);

  const cx inside(0.2, 0.1), outside(1.5, -0.4);
  r = integrate_circle([&](cx z) { return 1.0 / (z - inside); }, 0.7, 1e-12);
  CHECK(std::abs(r.value - cx(1.0, 0.0)) <= 1e-10);
  r = integrate_circle([&](cx z) { return 1.0 / (z - outside); }, 0.7, 1e-12);
  CHECK(std::abs(r.value) <= 1e-10);
}

TEST_CASE("contour plans keep every pole class separated") {
  for (double p : {0.2, 0.3, 0.4}) {
    const ModelParams mp(p);
    const ContourPlan plan = plan_contours(mp);
    CHECK(margin_two_sided(mp, plan.radius_large, plan.radius_small) >= 1.15);
    CHECK(margin_small_only(mp, plan.radius_small) >= 1.15);
    CHECK(margin_large_only(mp, plan.radius_large_pure) >= 1.15);
    CHECK(margin_large_only(mp, plan.radius_large_tight) > 1.0);
    // Every pair pole stays outside the small contour, including the ones
    // fed by a large variable: r (1 + qR) < p.
    CHECK(plan.radius_small * (1.0 + mp.q * plan.radius_large) < mp.p);
    // Radius-independence rescale stays valid; gross rescales in any
    // direction cross a pole class and are rejected.
    CHECK_NOTHROW(plan.scaled(1.15, 0.85));
    CHECK_THROWS_AS(plan.scaled(1.0, 50.0), InfeasiblePlanError);
    CHECK_THROWS_AS(plan.scaled(0.02, 1.0), InfeasiblePlanError);
    CHECK_THROWS_AS(plan.scaled(100.0, 1.0), InfeasiblePlanError);

    const ContourPlan lo = plan_contours(mp, 1.15, ContourKind::LargeOnly);
    CHECK(lo.radius_small == 0.0);
    CHECK(margin_large_only(mp, lo.radius_large_pure) >= 1.15);
  }
}

TEST_CASE("tensor quadrature integrates monomials exactly") {
  const ModelParams mp(0.3);
  const ContourPlan plan = plan_contours(mp);

  MonomialIntegrand unit({-1, -1});
  QuadratureResult r = integrate_tensor(unit, 1, 1, plan, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value - cx(1.0, 0.0)) <= 1e-12);

  MonomialIntegrand zero({2, -3});
  r = integrate_tensor(zero, 1, 1, plan, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value) <= 1e-12);

  MonomialIntegrand plus3({-1, -1, -1});
  r = integrate_tensor(plus3, 0, 3, plan, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value - cx(1.0, 0.0)) <= 1e-11);

  MonomialIntegrand none({});
  r = integrate_tensor(none, 0, 0, plan, 1e-12);
  CHECK(r.converged);
  CHECK(r.value == cx(1.0, 0.0));
}

TEST_CASE("tensor quadrature sees poles on the correct side per contour") {
  const ModelParams mp(0.3);
  const ContourPlan plan = plan_contours(mp);
  // Pole inside the small circle and inside the large circle: residue 1 each.
  SimplePoleIntegrand both({cxl{0.01L, 0.0L}, cxl{0.3L, 0.2L}});
  QuadratureResult r = integrate_tensor(both, 1, 1, plan, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value - cx(1.0, 0.0)) <= 1e-10);

  // Pole outside the small circle: that variable integrates to zero.
  SimplePoleIntegrand off({cxl{2.0L, 0.0L}, cxl{0.3L, 0.2L}});
  r = integrate_tensor(off, 1, 1, plan, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value) <= 1e-10);
}

TEST_CASE("quadrature reports its own convergence honestly") {
  const ModelParams mp(0.3);
  const ContourPlan plan = plan_contours(mp);
  // A pole hugging the small contour needs many nodes; with the node budget
  // clamped the result must come back not converged.
  SimplePoleIntegrand tight({cxl{plan.radius_small * 0.98L, 0.0L}});
  const QuadratureResult r = integrate_tensor(tight, 1, 0, plan, 1e-13, 32);
  CHECK(!r.converged);
}
