#include "asep/tau_comb.hpp"

#include <algorithm>
#include <cmath>

#include "asep/errors.hpp"

namespace asep {

double binomial(std::int64_t N, std::int64_t n) {
  if (n < 0 || n > N) return 0.0;
  n = std::min(n, N - n);
  double acc = 1.0;
  for (std::int64_t j = 1; j <= n; ++j) {
    acc *= static_cast<double>(N - n + j) / static_cast<double>(j);
  }
  return acc;
}

double tau_binomial(std::int64_t N, std::int64_t n, double tau) {
  // Row N = -1 extends the triangle one step above the standard rows. The
  // empty-subset term of the distribution series evaluates [-1, n] there, and
  // the constant it contributes must be exactly 1 whenever the tagged
  // particle starts at or left of the small-contour block. The unique
  // extension compatible with the Pascal rule
  //   [N, n] = [N-1, n-1] + tau^n [N-1, n]
  // and with the zeros of row 0 is: zero for n >= 0, and an alternating tail
  // [-1, -1-j] = (-1)^j tau^(-j(j+1)/2) for j >= 0. Rows N >= 0 keep their
  // standard zeros outside 0 <= n <= N.
  if (N == -1) {
    if (n >= 0) return 0.0;
    const std::int64_t j = -1 - n;
    const double mag = std::pow(tau, -0.5 * static_cast<double>(j * (j + 1)));
    return (j % 2 == 0) ? mag : -mag;
  }
  if (n < 0 || n > N) return 0.0;
  if (n == 0) return 1.0;
  if (tau == 1.0) return binomial(N, n);
  double acc = 1.0;
  for (std::int64_t j = 0; j < n; ++j) {
    const double num = 1.0 - std::pow(tau, static_cast<double>(N - j));
    const double den = 1.0 - std::pow(tau, static_cast<double>(j + 1));
    acc *= num / den;
  }
  return acc;
}

std::int64_t sigma_count(std::span<const std::int64_t> U,
                         std::span<const std::int64_t> V) {
  std::vector<std::int64_t> v(V.begin(), V.end());
  std::sort(v.begin(), v.end());
  std::int64_t count = 0;
  for (auto u : U) {
    count += std::upper_bound(v.begin(), v.end(), u) - v.begin();
  }
  return count;
}

void for_each_subset(std::span<const std::int64_t> pool, int k,
                     const std::function<void(std::span<const std::int64_t>)>& fn) {
  const int n = static_cast<int>(pool.size());
  if (k < 0) throw DomainError("for_each_subset: k < 0");
  if (k > n) return;
  if (k == 0) {
    fn(std::span<const std::int64_t>{});
    return;
  }
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::vector<std::int64_t> subset(static_cast<std::size_t>(k));
  while (true) {
    for (int i = 0; i < k; ++i)
      subset[static_cast<std::size_t>(i)] =
          pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    fn(subset);
    // advance to the lexicographically next index combination
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

void unrank_combination(double rank, int n, int k, std::span<int> out) {
  int c = 0;
  for (int i = 0; i < k; ++i) {
    while (true) {
      const double below = binomial(n - 1 - c, k - 1 - i);
      if (rank < below) break;
      rank -= below;
      ++c;
    }
    out[static_cast<std::size_t>(i)] = c;
    ++c;
  }
}

}  // namespace asep
