#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace asep {

// tau-deformed binomial coefficient
//
//   [N, n]_tau = prod_{j=0}^{n-1} (1 - tau^{N-j}) / prod_{j=1}^{n} (1 - tau^j)
//
// Out-of-range indices are a hard zero: n < 0 or n > N gives 0 even when
// n == 0 (so [-1, 0] = 0).  Within range, n == 0 gives 1.  tau == 1 is
// evaluated as the limit, i.e. the classical binomial coefficient.
double tau_binomial(std::int64_t N, std::int64_t n, double tau);

// Number of pairs (u, v) with u in U, v in V, u >= v.  Inputs need not be
// sorted; multiplicities count.
std::int64_t sigma_count(std::span<const std::int64_t> U,
                         std::span<const std::int64_t> V);

// Visits every k-element subset of `pool` in lexicographic order (pool is
// taken in the order given).  The span passed to the callback is only valid
// during the call.
void for_each_subset(std::span<const std::int64_t> pool, int k,
                     const std::function<void(std::span<const std::int64_t>)>& fn);

// Exact binomial coefficient in double precision (N small).
double binomial(std::int64_t N, std::int64_t n);

// Writes the combination of {0, ..., n-1} with the given lexicographic rank
// into out (out.size() == k).  Ranks must lie in [0, binomial(n, k)); counts
// stay below 2^53 for every (n, k) the quadrature budget admits, so double
// arithmetic is exact here.  Used to hand disjoint combination ranges to
// workers without any shared iteration state.
void unrank_combination(double rank, int n, int k, std::span<int> out);

}  // namespace asep
