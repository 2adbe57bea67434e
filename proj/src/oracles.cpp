#include "asep/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asep/errors.hpp"
#include "asep/parallel.hpp"
#include "asep/rng.hpp"
#include "asep/tau_comb.hpp"

namespace asep {

namespace {

constexpr double kMaxMasterStates = 2.0e6;

int auto_margin(double t) { return 10 + static_cast<int>(std::ceil(5.0 * t)); }

// Rank of an ascending combination c_1 < ... < c_N over {0..W-1}:
// sum_i C(c_i, i) with 1-based i.  Bijective onto [0, C(W, N)).
double rank_config(std::span<const std::int64_t> comb,
                   const std::vector<double>& choose, int n_particles) {
  double r = 0.0;
  for (std::size_t i = 0; i < comb.size(); ++i) {
    r += choose[static_cast<std::size_t>(comb[i]) * (n_particles + 1) + i + 1];
  }
  return r;
}

struct Transitions {
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> target;
  std::vector<double> rate;
  std::vector<double> outflow;
};

void derivative(const Transitions& tr, const std::vector<double>& y,
                std::vector<double>& dy) {
  std::fill(dy.begin(), dy.end(), 0.0);
  const std::size_t n = y.size();
  for (std::size_t s = 0; s < n; ++s) {
    const double ps = y[s];
    if (ps == 0.0) continue;
    dy[s] -= tr.outflow[s] * ps;
    for (std::int64_t e = tr.row_ptr[s]; e < tr.row_ptr[s + 1]; ++e) {
      dy[static_cast<std::size_t>(tr.target[static_cast<std::size_t>(e)])] +=
          tr.rate[static_cast<std::size_t>(e)] * ps;
    }
  }
}

}  // namespace

double free_particle_cdf(std::int64_t x, std::int64_t x0, double t,
                         const ModelParams& mp) {
  if (t < 0.0) throw DomainError("free_particle_cdf: negative time");
  if (t == 0.0) return x >= x0 ? 1.0 : 0.0;
  // Displacement pmf: P(D = d) = e^{-t} sum_j (pt)^j (qt)^{j-d} / (j!(j-d)!).
  const std::int64_t span =
      static_cast<std::int64_t>(std::ceil(25.0 + 3.0 * t + 10.0 * std::sqrt(t)));
  const std::int64_t d_hi = std::min(x - x0, span);
  double acc = 0.0;
  for (std::int64_t d = -span; d <= d_hi; ++d) {
    const std::int64_t j0 = std::max<std::int64_t>(0, d);
    double term = std::exp(-t + static_cast<double>(j0) * std::log(mp.p * t) +
                           static_cast<double>(j0 - d) * std::log(mp.q * t) -
                           std::lgamma(static_cast<double>(j0) + 1.0) -
                           std::lgamma(static_cast<double>(j0 - d) + 1.0));
    double pmf = 0.0;
    for (std::int64_t j = j0; j < j0 + 600; ++j) {
      pmf += term;
      term *= (mp.p * t) * (mp.q * t) /
              (static_cast<double>(j + 1) * static_cast<double>(j + 1 - d));
      if (term < 1e-22 * (pmf + 1e-300)) break;
    }
    acc += pmf;
  }
  return std::min(1.0, acc);
}

double MasterSolution::cdf(int m, std::int64_t x) const {
  if (m < 1 || m > n_particles_)
    throw DomainError("MasterSolution::cdf: particle index out of range");
  if (x < lo_) return 0.0;
  if (x >= hi_) return 1.0;
  const std::int64_t cutoff = x - lo_;
  std::vector<std::int64_t> pool(static_cast<std::size_t>(width_));
  for (int i = 0; i < width_; ++i) pool[static_cast<std::size_t>(i)] = i;
  double acc = 0.0;
  for_each_subset(pool, n_particles_, [&](std::span<const std::int64_t> comb) {
    if (comb[static_cast<std::size_t>(m - 1)] <= cutoff) {
      const double r = rank_config(comb, choose_, n_particles_);
      acc += prob_[static_cast<std::size_t>(r)];
    }
  });
  return std::min(1.0, acc);
}

MasterSolution master_equation(const std::vector<std::int64_t>& sites,
                               double t, const ModelParams& mp, int margin) {
  if (sites.empty()) throw DomainError("master_equation: no particles");
  if (!std::is_sorted(sites.begin(), sites.end()))
    throw DomainError("master_equation: sites must be sorted");
  if (t < 0.0) throw DomainError("master_equation: negative time");
  const int N = static_cast<int>(sites.size());
  if (margin <= 0) margin = auto_margin(t);

  MasterSolution out;
  out.n_particles_ = N;
  out.lo_ = sites.front() - margin;
  out.hi_ = sites.back() + margin;
  out.width_ = static_cast<int>(out.hi_ - out.lo_ + 1);
  const int W = out.width_;

  const double n_states_d = binomial(W, N);
  if (n_states_d > kMaxMasterStates)
    throw StateTooLargeError("master_equation: configuration space too large");
  const std::size_t n_states = static_cast<std::size_t>(n_states_d);

  out.choose_.assign(static_cast<std::size_t>(W + 1) * (N + 1), 0.0);
  for (int c = 0; c <= W; ++c)
    for (int i = 0; i <= N; ++i)
      out.choose_[static_cast<std::size_t>(c) * (N + 1) + i] = binomial(c, i);

  std::vector<std::int64_t> pool(static_cast<std::size_t>(W));
  for (int i = 0; i < W; ++i) pool[static_cast<std::size_t>(i)] = i;

  // Hop transitions: a particle moves one site right (rate p) or left
  // (rate q) when the neighbor site is free and inside the window.  First
  // count per-state degrees, then fill CSR slots with cursors.
  Transitions tr;
  tr.row_ptr.assign(n_states + 1, 0);
  {
    std::vector<std::int64_t> degree(n_states, 0);
    for_each_subset(pool, N, [&](std::span<const std::int64_t> comb) {
      const std::size_t s =
          static_cast<std::size_t>(rank_config(comb, out.choose_, N));
      std::int64_t deg = 0;
      for (int i = 0; i < N; ++i) {
        const std::int64_t c = comb[static_cast<std::size_t>(i)];
        if (c + 1 < W &&
            (i == N - 1 || comb[static_cast<std::size_t>(i + 1)] != c + 1))
          ++deg;
        if (c - 1 >= 0 &&
            (i == 0 || comb[static_cast<std::size_t>(i - 1)] != c - 1))
          ++deg;
      }
      degree[s] = deg;
    });
    for (std::size_t s = 0; s < n_states; ++s)
      tr.row_ptr[s + 1] = tr.row_ptr[s] + degree[s];
  }
  tr.target.assign(static_cast<std::size_t>(tr.row_ptr[n_states]), 0);
  tr.rate.assign(static_cast<std::size_t>(tr.row_ptr[n_states]), 0.0);
  tr.outflow.assign(n_states, 0.0);
  {
    std::vector<std::int64_t> cursor(tr.row_ptr.begin(), tr.row_ptr.end() - 1);
    std::vector<std::int64_t> work;
    for_each_subset(pool, N, [&](std::span<const std::int64_t> comb) {
      const std::size_t s =
          static_cast<std::size_t>(rank_config(comb, out.choose_, N));
      for (int i = 0; i < N; ++i) {
        const std::int64_t c = comb[static_cast<std::size_t>(i)];
        const bool right_free =
            c + 1 < W &&
            (i == N - 1 || comb[static_cast<std::size_t>(i + 1)] != c + 1);
        const bool left_free =
            c - 1 >= 0 &&
            (i == 0 || comb[static_cast<std::size_t>(i - 1)] != c - 1);
        if (right_free) {
          work.assign(comb.begin(), comb.end());
          work[static_cast<std::size_t>(i)] = c + 1;
          const std::int64_t e = cursor[s]++;
          tr.target[static_cast<std::size_t>(e)] = static_cast<std::int32_t>(
              rank_config(work, out.choose_, N));
          tr.rate[static_cast<std::size_t>(e)] = mp.p;
          tr.outflow[s] += mp.p;
        }
        if (left_free) {
          work.assign(comb.begin(), comb.end());
          work[static_cast<std::size_t>(i)] = c - 1;
          const std::int64_t e = cursor[s]++;
          tr.target[static_cast<std::size_t>(e)] = static_cast<std::int32_t>(
              rank_config(work, out.choose_, N));
          tr.rate[static_cast<std::size_t>(e)] = mp.q;
          tr.outflow[s] += mp.q;
        }
      }
    });
  }

  std::vector<double> y(n_states, 0.0);
  {
    std::vector<std::int64_t> init(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) init[i] = sites[i] - out.lo_;
    y[static_cast<std::size_t>(rank_config(init, out.choose_, N))] = 1.0;
  }

  // Dormand-Prince 5(4) with adaptive step and FSAL reuse.
  if (t > 0.0) {
    const double rtol = 1e-10, atol = 1e-14;
    std::vector<double> k1(n_states), k2(n_states), k3(n_states),
        k4(n_states), k5(n_states), k6(n_states), k7(n_states),
        ytmp(n_states), y5(n_states);
    double time = 0.0;
    double h = std::min(t, 0.05);
    derivative(tr, y, k1);
    int guard = 0;
    while (time < t) {
      if (++guard > 2000000)
        throw DomainError("master_equation: step count exceeded");
      h = std::min(h, t - time);
      const auto stage = [&](std::vector<double>& dst, double c1, double c2,
                             double c3, double c4, double c5, double c6) {
        for (std::size_t i = 0; i < n_states; ++i)
          dst[i] = y[i] + h * (c1 * k1[i] + c2 * k2[i] + c3 * k3[i] +
                               c4 * k4[i] + c5 * k5[i] + c6 * k6[i]);
      };
      stage(ytmp, 1.0 / 5, 0, 0, 0, 0, 0);
      derivative(tr, ytmp, k2);
      stage(ytmp, 3.0 / 40, 9.0 / 40, 0, 0, 0, 0);
      derivative(tr, ytmp, k3);
      stage(ytmp, 44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0);
      derivative(tr, ytmp, k4);
      stage(ytmp, 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
            -212.0 / 729, 0, 0);
      derivative(tr, ytmp, k5);
      stage(ytmp, 9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
            -5103.0 / 18656, 0);
      derivative(tr, ytmp, k6);
      stage(y5, 35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
            11.0 / 84);
      derivative(tr, y5, k7);
      double err = 0.0;
      for (std::size_t i = 0; i < n_states; ++i) {
        const double y4 =
            y[i] + h * (5179.0 / 57600 * k1[i] + 7571.0 / 16695 * k3[i] +
                        393.0 / 640 * k4[i] - 92097.0 / 339200 * k5[i] +
                        187.0 / 2100 * k6[i] + 1.0 / 40 * k7[i]);
        const double scale =
            atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
        const double e = (y5[i] - y4) / scale;
        err += e * e;
      }
      err = std::sqrt(err / static_cast<double>(n_states));
      if (err <= 1.0) {
        time += h;
        y.swap(y5);
        k1.swap(k7);
      } else {
        derivative(tr, y, k1);  // restore FSAL slope for the retried step
      }
      const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(factor, 0.2, 5.0);
      if (h < 1e-12) throw DomainError("master_equation: step underflow");
    }
  }

  out.prob_ = std::move(y);

  double edge_mass = 0.0;
  for_each_subset(pool, N, [&](std::span<const std::int64_t> comb) {
    if (comb.front() <= 1 || comb.back() >= W - 2) {
      const double r = rank_config(comb, out.choose_, N);
      edge_mass += out.prob_[static_cast<std::size_t>(r)];
    }
  });
  out.boundary_mass_ = edge_mass;
  return out;
}

double EmpiricalCdf::prob(std::int64_t x) const {
  return static_cast<double>(cumulative_count(x)) / static_cast<double>(n_);
}

double EmpiricalCdf::ci95(std::int64_t x) const {
  const double ph = prob(x);
  return 1.96 * std::sqrt(ph * (1.0 - ph) / static_cast<double>(n_));
}

std::int64_t EmpiricalCdf::cumulative_count(std::int64_t x) const {
  if (x < lo_) return 0;
  std::int64_t acc = 0;
  const std::int64_t top = std::min(x, hi_);
  for (std::int64_t i = lo_; i <= top; ++i)
    acc += counts_[static_cast<std::size_t>(i - lo_)];
  return acc;
}

EmpiricalCdf mc_simulate(const SimConfig& cfg) {
  if (cfg.t < 0.0) throw DomainError("mc_simulate: negative time");
  if (cfg.n_traj <= 0) throw DomainError("mc_simulate: no trajectories");
  if (!cfg.ic.occupied_at_time_zero(cfg.tagged_site))
    throw DomainError("mc_simulate: tagged site not occupied at t = 0");
  const int B = cfg.margin > 0 ? cfg.margin : auto_margin(cfg.t);

  std::vector<std::int64_t> sites;
  if (cfg.ic.kind == IcKind::FiniteSet) {
    sites = cfg.ic.sites;
  } else {
    for (std::int64_t s = cfg.tagged_site - B; s <= cfg.tagged_site + B; ++s)
      if (cfg.ic.occupied_at_time_zero(s)) sites.push_back(s);
  }
  const int N = static_cast<int>(sites.size());
  const std::size_t tagged_idx = static_cast<std::size_t>(
      std::lower_bound(sites.begin(), sites.end(), cfg.tagged_site) -
      sites.begin());

  EmpiricalCdf out;
  out.lo_ = cfg.tagged_site - B - 5;
  out.hi_ = cfg.tagged_site + B + 5;
  out.n_ = cfg.n_traj;
  const std::size_t n_bins = static_cast<std::size_t>(out.hi_ - out.lo_ + 1);

  const std::int64_t chunk = 4096;
  const std::int64_t n_chunks = (cfg.n_traj + chunk - 1) / chunk;
  std::vector<std::vector<std::int64_t>> hist(
      static_cast<std::size_t>(n_chunks));
  std::vector<std::int64_t> flags(static_cast<std::size_t>(n_chunks), 0);

  parallel_chunks(n_chunks, [&](std::int64_t c) {
    std::vector<std::int64_t> local(n_bins, 0);
    std::int64_t local_flags = 0;
    std::vector<std::int64_t> pos(sites.size());
    const std::int64_t begin = c * chunk;
    const std::int64_t end = std::min(cfg.n_traj, begin + chunk);
    for (std::int64_t traj = begin; traj < end; ++traj) {
      Xoshiro256 rng(cfg.seed, static_cast<std::uint64_t>(traj));
      std::copy(sites.begin(), sites.end(), pos.begin());
      double time = 0.0;
      while (true) {
        time += -std::log1p(-rng.next_double()) / static_cast<double>(N);
        if (time > cfg.t) break;
        const std::size_t i = static_cast<std::size_t>(
            rng.next_below(static_cast<std::uint64_t>(N)));
        if (rng.next_double() < cfg.params.p) {
          if (i + 1 == pos.size() || pos[i + 1] > pos[i] + 1) ++pos[i];
        } else {
          if (i == 0 || pos[i - 1] < pos[i] - 1) --pos[i];
        }
      }
      const std::int64_t X = pos[tagged_idx];
      const std::int64_t drift = X - cfg.tagged_site;
      if (drift > B - 5 || drift < -(B - 5)) ++local_flags;
      const std::int64_t bin = std::clamp(X, out.lo_, out.hi_) - out.lo_;
      ++local[static_cast<std::size_t>(bin)];
    }
    hist[static_cast<std::size_t>(c)] = std::move(local);
    flags[static_cast<std::size_t>(c)] = local_flags;
  });

  out.counts_.assign(n_bins, 0);
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    for (std::size_t b = 0; b < n_bins; ++b)
      out.counts_[b] += hist[static_cast<std::size_t>(c)][b];
    out.flagged_ += flags[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace asep
