#pragma once

#include <cstdint>
#include <vector>

#include "asep/model.hpp"

namespace asep {

// Reference computations that are independent of the contour-integral
// evaluator: a closed form for one free particle, the exact master equation
// for small systems, and a direct Monte Carlo simulator.  Tests compare the
// evaluator against these.

// P(X(t) <= x) for a single particle started at x0 with no other particles
// present: X(t) = x0 + N_right(p t) - N_left(q t) with independent Poisson
// counts.  The double series is summed until the tail is below 1e-14.
double free_particle_cdf(std::int64_t x, std::int64_t x0, double t,
                         const ModelParams&);

// Exact finite-system distribution by integrating the master equation over
// all particle configurations in a window.  The window is the initial span
// widened by `margin` on both sides (margin <= 0 picks 10 + ceil(5t));
// configurations whose outermost particle touches the window edge carry the
// truncation error, reported as boundary_mass.
class MasterSolution {
 public:
  // P(x_m(t) <= x) with particles numbered from the leftmost, m in [1, N].
  double cdf(int m, std::int64_t x) const;

  int particles() const { return n_particles_; }
  std::int64_t window_lo() const { return lo_; }
  std::int64_t window_hi() const { return hi_; }
  double boundary_mass() const { return boundary_mass_; }

 private:
  friend MasterSolution master_equation(const std::vector<std::int64_t>&,
                                        double, const ModelParams&, int);
  int n_particles_ = 0;
  std::int64_t lo_ = 0, hi_ = 0;
  int width_ = 0;
  std::vector<double> prob_;           // by configuration rank
  std::vector<double> choose_;         // binomial table for ranking
  double boundary_mass_ = 0.0;
};

MasterSolution master_equation(const std::vector<std::int64_t>& sites,
                               double t, const ModelParams&, int margin = 0);

// Direct continuous-time simulation.  Infinite initial conditions are
// truncated to the occupied sites within `margin` of the tagged site; the
// truncation is harmless until influence crosses the gap, so trajectories
// whose tagged particle ends within 5 sites of the truncation edge are
// counted in `flagged`.
struct SimConfig {
  ModelParams params = ModelParams(0.5);
  InitialCondition ic = InitialCondition::step();
  std::int64_t tagged_site = 1;  // must be occupied at t = 0
  double t = 1.0;
  std::int64_t n_traj = 100000;
  std::uint64_t seed = 1;
  int margin = 0;                // <= 0 picks 10 + ceil(5t)
};

class EmpiricalCdf {
 public:
  // Empirical P(X_tagged(t) <= x) and a 95% confidence half-width.
  double prob(std::int64_t x) const;
  double ci95(std::int64_t x) const;

  std::int64_t trajectories() const { return n_; }
  std::int64_t flagged() const { return flagged_; }
  std::int64_t bin_lo() const { return lo_; }
  std::int64_t bin_hi() const { return hi_; }
  // Raw count of trajectories ending at position <= x; integer, so results
  // are byte-identical however the work was distributed.
  std::int64_t cumulative_count(std::int64_t x) const;

 private:
  friend EmpiricalCdf mc_simulate(const SimConfig&);
  std::int64_t lo_ = 0, hi_ = 0;
  std::vector<std::int64_t> counts_;  // histogram of final positions
  std::int64_t n_ = 0;
  std::int64_t flagged_ = 0;
};

EmpiricalCdf mc_simulate(const SimConfig&);

}  // namespace asep
