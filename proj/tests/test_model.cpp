#include "asep/model.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"

using namespace asep;

TEST_CASE("rate triple is consistent") {
  const ModelParams mp(0.3);
  CHECK(mp.p == doctest::Approx(0.3));
  CHECK(mp.q == doctest::Approx(0.7));
  CHECK(mp.tau == doctest::Approx(0.3 / 0.7));
  CHECK_THROWS_AS(ModelParams(0.0), DomainError);
  CHECK_THROWS_AS(ModelParams(1.0), DomainError);
  CHECK_THROWS_AS(ModelParams(-0.2), DomainError);
}

TEST_CASE("epsilon vanishes at xi = 1 and matches the definition") {
  const ModelParams mp(0.3);
  CHECK(std::abs(epsilon(cx(1.0, 0.0), mp)) == doctest::Approx(0.0));
  const cx xi(0.4, 0.3);
  const cx want = mp.p / xi + mp.q * xi - 1.0;
  CHECK(std::abs(epsilon(xi, mp) - want) == doctest::Approx(0.0));
  CHECK_THROWS_AS(epsilon(cx(0.0, 0.0), mp), DomainError);
}

TEST_CASE("pair factor f matches its definition and flags poles") {
  const ModelParams mp(0.4);
  const cx a(1.2, 0.5), b(-0.3, 0.8);
  const cx want = (b - a) / (mp.p + mp.q * a * b - a);
  CHECK(std::abs(f_factor(a, b, mp) - want) == doctest::Approx(0.0));
  CHECK(std::abs(f_factor(a, a, mp)) == doctest::Approx(0.0));
  // Solve p + q a b - a = 0 for b to land exactly on the pole.
  const cx b_pole = (a - mp.p) / (mp.q * a);
  CHECK_THROWS_AS(f_factor(a, b_pole, mp), PoleError);
}

TEST_CASE("one and two variable integrand weights multiply out") {
  const ModelParams mp(0.3);
  const double t = 0.8;
  const cx xi1(1.7, 0.4), xi2(0.2, -0.1);
  const std::vector<cx> one{xi1};
  const cx w1 = pow_int(xi1, 3) * std::exp(epsilon(xi1, mp) * t) / (1.0 - xi1);
  CHECK(std::abs(i_weight(3, one, t, mp) - w1) == doctest::Approx(0.0));

  const std::vector<cx> two{xi1, xi2};
  const cx w2 = f_factor(xi1, xi2, mp) * w1 * pow_int(xi2, 3) *
                std::exp(epsilon(xi2, mp) * t) / (1.0 - xi2);
  CHECK(std::abs(i_weight(3, two, t, mp) - w2) <= 1e-14 * std::abs(w2));
  CHECK_THROWS_AS(i_weight(0, std::vector<cx>{cx(1.0, 0.0)}, t, mp),
                  PoleError);
}

TEST_CASE("integer powers handle negative exponents") {
  const cx z(0.3, -1.1);
  CHECK(std::abs(pow_int(z, 0) - cx(1.0, 0.0)) == doctest::Approx(0.0));
  CHECK(std::abs(pow_int(z, 5) - z * z * z * z * z) <=
        1e-15 * std::abs(pow_int(z, 5)));
  const cx inv = pow_int(z, -3);
  CHECK(std::abs(inv * pow_int(z, 3) - cx(1.0, 0.0)) <= 1e-14);
  CHECK_THROWS_AS(pow_int(cx(0.0, 0.0), -1), DomainError);
}

TEST_CASE("initial conditions report occupation and split by sign") {
  const InitialCondition fin = InitialCondition::finite({3, -1, 1});
  CHECK(fin.sites == std::vector<std::int64_t>{-1, 1, 3});
  CHECK(fin.occupied_at_time_zero(-1));
  CHECK(!fin.occupied_at_time_zero(0));
  CHECK(fin.minus_side() == std::vector<std::int64_t>{-1});
  CHECK(fin.plus_side() == std::vector<std::int64_t>{1, 3});
  CHECK_THROWS_AS(InitialCondition::finite({1, 1}), DomainError);
  CHECK_THROWS_AS(InitialCondition::finite({}), DomainError);

  const InitialCondition alt = InitialCondition::alternating();
  CHECK(alt.occupied_at_time_zero(-3));
  CHECK(alt.occupied_at_time_zero(5));
  CHECK(!alt.occupied_at_time_zero(0));
  CHECK(!alt.occupied_at_time_zero(-4));

  const InitialCondition one = InitialCondition::one_sided(1);
  CHECK(one.occupied_at_time_zero(1));
  CHECK(one.occupied_at_time_zero(3));
  CHECK(!one.occupied_at_time_zero(2));
  CHECK(!one.occupied_at_time_zero(-1));

  const InitialCondition two = InitialCondition::one_sided(0);
  CHECK(two.occupied_at_time_zero(2));
  CHECK(two.occupied_at_time_zero(4));
  CHECK(!two.occupied_at_time_zero(1));

  const InitialCondition stp = InitialCondition::step();
  CHECK(stp.occupied_at_time_zero(1));
  CHECK(stp.occupied_at_time_zero(100));
  CHECK(!stp.occupied_at_time_zero(0));
}
