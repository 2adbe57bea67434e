#include "asep/oracles.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "asep/parallel.hpp"

using namespace asep;

TEST_CASE("free particle at t = 0 is a unit step") {
  const ModelParams mp(0.3);
  CHECK(free_particle_cdf(-1, 0, 0.0, mp) == 0.0);
  CHECK(free_particle_cdf(0, 0, 0.0, mp) == 1.0);
  CHECK(free_particle_cdf(4, 5, 0.0, mp) == 0.0);
  CHECK(free_particle_cdf(5, 5, 0.0, mp) == 1.0);
}

TEST_CASE("free particle cdf is monotone with the right limits") {
  const ModelParams mp(0.35);
  double prev = 0.0;
  for (std::int64_t x = -30; x <= 30; ++x) {
    const double v = free_particle_cdf(x, 0, 2.0, mp);
    CHECK(v >= prev - 1e-15);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
  CHECK(free_particle_cdf(-60, 0, 2.0, mp) <= 1e-12);
  CHECK(free_particle_cdf(60, 0, 2.0, mp) >= 1.0 - 1e-12);
}

TEST_CASE("free particle mirror symmetry swaps the rates") {
  const ModelParams mp(0.3), mirror(0.7);
  const double t = 1.7;
  for (std::int64_t d = -6; d <= 6; ++d) {
    const double lhs = free_particle_cdf(d, 0, t, mp);
    const double rhs = 1.0 - free_particle_cdf(-d - 1, 0, t, mirror);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("master equation with one particle matches the free closed form") {
  const ModelParams mp(0.3);
  const MasterSolution sol = master_equation({0}, 1.0, mp);
  CHECK(sol.particles() == 1);
  CHECK(sol.boundary_mass() <= 1e-9);
  for (std::int64_t x = -6; x <= 6; ++x) {
    const double want = free_particle_cdf(x, 0, 1.0, mp);
    CHECK(std::fabs(sol.cdf(1, x) - want) <= 1e-8 + sol.boundary_mass());
  }
}

TEST_CASE("master equation keeps probability and particle order") {
  const ModelParams mp(0.4);
  const MasterSolution sol = master_equation({-1, 1, 2}, 0.9, mp);
  CHECK(sol.particles() == 3);
  CHECK(sol.boundary_mass() <= 1e-8);
  CHECK(sol.cdf(1, sol.window_hi()) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.cdf(3, sol.window_hi()) == doctest::Approx(1.0).epsilon(1e-10));
  for (std::int64_t x = sol.window_lo(); x <= sol.window_hi(); ++x) {
    CHECK(sol.cdf(1, x) >= sol.cdf(2, x) - 1e-12);
    CHECK(sol.cdf(2, x) >= sol.cdf(3, x) - 1e-12);
  }
  double prev = -1.0;
  for (std::int64_t x = sol.window_lo(); x <= sol.window_hi(); ++x) {
    CHECK(sol.cdf(2, x) >= prev - 1e-12);
    prev = sol.cdf(2, x);
  }
}

TEST_CASE("master equation mirror: swapping rates reflects the lattice") {
  const ModelParams mp(0.3), mirror(0.7);
  const double t = 0.8;
  const MasterSolution a = master_equation({-1, 2}, t, mp);
  const MasterSolution b = master_equation({-2, 1}, t, mirror);
  CHECK(a.boundary_mass() <= 1e-9);
  CHECK(b.boundary_mass() <= 1e-9);
  for (std::int64_t x = -8; x <= 8; ++x) {
    // particle m from the left maps to particle N+1-m from the right
    const double lhs = a.cdf(1, x);
    const double rhs = 1.0 - b.cdf(2, -x - 1);
    CHECK(std::fabs(lhs - rhs) <= 1e-8);
    const double lhs2 = a.cdf(2, x);
    const double rhs2 = 1.0 - b.cdf(1, -x - 1);
    CHECK(std::fabs(lhs2 - rhs2) <= 1e-8);
  }
}

TEST_CASE("simulator matches the free particle for a lone walker") {
  SimConfig cfg;
  cfg.params = ModelParams(0.3);
  cfg.ic = InitialCondition::finite({1});
  cfg.tagged_site = 1;
  cfg.t = 1.0;
  cfg.n_traj = 200000;
  cfg.seed = 5;
  const EmpiricalCdf emp = mc_simulate(cfg);
  CHECK(emp.trajectories() == 200000);
  CHECK(emp.flagged() == 0);
  for (std::int64_t x = -3; x <= 5; ++x) {
    const double want = free_particle_cdf(x, 1, 1.0, cfg.params);
    const double slack = 4.0 * std::max(emp.ci95(x), 1e-4);
    CHECK(std::fabs(emp.prob(x) - want) <= slack);
  }
}

TEST_CASE("simulator agrees with the master equation under exclusion") {
  SimConfig cfg;
  cfg.params = ModelParams(0.35);
  cfg.ic = InitialCondition::finite({0, 1});
  cfg.tagged_site = 0;
  cfg.t = 0.6;
  cfg.n_traj = 100000;
  cfg.seed = 11;
  const EmpiricalCdf emp = mc_simulate(cfg);
  const MasterSolution sol = master_equation({0, 1}, 0.6, cfg.params);
  for (std::int64_t x = -4; x <= 4; ++x) {
    const double want = sol.cdf(1, x);
    const double slack = 4.0 * std::max(emp.ci95(x), 1e-4) +
                         sol.boundary_mass();
    CHECK(std::fabs(emp.prob(x) - want) <= slack);
  }
}

TEST_CASE("simulator output is identical for any worker count and rerun") {
  SimConfig cfg;
  cfg.params = ModelParams(0.25);
  cfg.ic = InitialCondition::alternating();
  cfg.tagged_site = 1;
  cfg.t = 0.5;
  cfg.n_traj = 20000;
  cfg.seed = 42;

  set_worker_count(1);
  const EmpiricalCdf a = mc_simulate(cfg);
  set_worker_count(3);
  const EmpiricalCdf b = mc_simulate(cfg);
  set_worker_count(0);
  const EmpiricalCdf c = mc_simulate(cfg);
  for (std::int64_t x = a.bin_lo(); x <= a.bin_hi(); ++x) {
    CHECK(a.cumulative_count(x) == b.cumulative_count(x));
    CHECK(a.cumulative_count(x) == c.cumulative_count(x));
  }
  CHECK(a.flagged() == b.flagged());
}

TEST_CASE("empirical cdf bookkeeping is sane") {
  SimConfig cfg;
  cfg.params = ModelParams(0.3);
  cfg.ic = InitialCondition::step();
  cfg.tagged_site = 2;
  cfg.t = 0.4;
  cfg.n_traj = 5000;
  cfg.seed = 9;
  const EmpiricalCdf emp = mc_simulate(cfg);
  CHECK(emp.prob(emp.bin_lo() - 1) == 0.0);
  CHECK(emp.prob(emp.bin_hi()) == doctest::Approx(1.0));
  std::int64_t prev = 0;
  for (std::int64_t x = emp.bin_lo(); x <= emp.bin_hi(); ++x) {
    CHECK(emp.cumulative_count(x) >= prev);
    prev = emp.cumulative_count(x);
    CHECK(emp.ci95(x) >= 0.0);
  }
  CHECK(prev == emp.trajectories());
}
