#include "asep/tau_comb.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

using namespace asep;

TEST_CASE("tau binomial closed forms at small orders") {
  const double tau = 3.0 / 7.0;
  CHECK(tau_binomial(0, 0, tau) == doctest::Approx(1.0));
  CHECK(tau_binomial(5, 0, tau) == doctest::Approx(1.0));
  CHECK(tau_binomial(3, 1, tau) == doctest::Approx(1.0 + tau + tau * tau));
  const double want42 = (1.0 - std::pow(tau, 4)) * (1.0 - std::pow(tau, 3)) /
                        ((1.0 - tau) * (1.0 - tau * tau));
  CHECK(tau_binomial(4, 2, tau) == doctest::Approx(want42));
}

TEST_CASE("tau binomial is a hard zero out of range") {
  const double tau = 0.4;
  CHECK(tau_binomial(-1, 0, tau) == 0.0);
  CHECK(tau_binomial(-1, 2, tau) == 0.0);
  CHECK(tau_binomial(3, -1, tau) == 0.0);
  CHECK(tau_binomial(3, 4, tau) == 0.0);
}

TEST_CASE("tau binomial row N = -1 carries the alternating tail") {
  // The empty-subset term of the distribution series evaluates [-1, n]; the
  // values below are the unique extension for which the Pascal recurrence
  // reproduces the zeros of row 0 on both sides.
  const double tau = 0.4;
  CHECK(tau_binomial(-1, -1, tau) == 1.0);
  CHECK(tau_binomial(-1, -2, tau) == doctest::Approx(-1.0 / tau));
  CHECK(tau_binomial(-1, -3, tau) == doctest::Approx(std::pow(tau, -3.0)));
  CHECK(tau_binomial(-1, -4, tau) == doctest::Approx(-std::pow(tau, -6.0)));
  for (int n = 0; n >= -5; --n) {
    const double pascal = tau_binomial(-1, n - 1, tau) +
                          std::pow(tau, n) * tau_binomial(-1, n, tau);
    CHECK(tau_binomial(0, n, tau) == doctest::Approx(pascal).epsilon(1e-12));
  }
}

TEST_CASE("tau binomial satisfies symmetry and the Pascal recurrence") {
  const double tau = 0.55;
  for (int N = 0; N <= 10; ++N) {
    for (int n = 0; n <= N; ++n) {
      CHECK(tau_binomial(N, n, tau) ==
            doctest::Approx(tau_binomial(N, N - n, tau)).epsilon(1e-12));
      if (N >= 1 && n >= 1) {
        const double want = tau_binomial(N - 1, n - 1, tau) +
                            std::pow(tau, n) * tau_binomial(N - 1, n, tau);
        CHECK(tau_binomial(N, n, tau) ==
              doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("tau binomial at tau = 1 reduces to the classical binomial") {
  CHECK(tau_binomial(6, 2, 1.0) == doctest::Approx(15.0));
  CHECK(tau_binomial(9, 4, 1.0) == doctest::Approx(126.0));
}

TEST_CASE("sigma_count counts ordered pairs u >= v") {
  const std::vector<std::int64_t> u{1, 5};
  const std::vector<std::int64_t> v{0, 1, 6};
  // pairs: (1,0), (1,1), (5,0), (5,1)
  CHECK(sigma_count(u, v) == 4);
  CHECK(sigma_count(v, u) == 3);  // (1,1), (6,1), (6,5)
  CHECK(sigma_count({}, v) == 0);
  CHECK(sigma_count(u, {}) == 0);
}

TEST_CASE("binomial is exact for small arguments") {
  CHECK(binomial(0, 0) == 1.0);
  CHECK(binomial(10, 0) == 1.0);
  CHECK(binomial(10, 3) == 120.0);
  CHECK(binomial(52, 5) == 2598960.0);
  CHECK(binomial(4, 5) == 0.0);
  CHECK(binomial(4, -1) == 0.0);
}

TEST_CASE("for_each_subset visits every subset once in lexicographic order") {
  const std::vector<std::int64_t> pool{2, 4, 7, 9};
  std::vector<std::vector<std::int64_t>> seen;
  for_each_subset(pool, 2, [&](std::span<const std::int64_t> s) {
    seen.emplace_back(s.begin(), s.end());
  });
  REQUIRE(seen.size() == 6);
  CHECK(seen.front() == std::vector<std::int64_t>{2, 4});
  CHECK(seen.back() == std::vector<std::int64_t>{7, 9});
  for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i - 1] < seen[i]);

  int total = 0;
  for (int k = 0; k <= 4; ++k)
    for_each_subset(pool, k, [&](std::span<const std::int64_t>) { ++total; });
  CHECK(total == 16);
}

TEST_CASE("unrank_combination agrees with sequential enumeration") {
  const int n = 10, k = 4;
  std::vector<std::vector<std::int64_t>> ordered;
  std::vector<std::int64_t> pool(n);
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for_each_subset(pool, k, [&](std::span<const std::int64_t> s) {
    ordered.emplace_back(s.begin(), s.end());
  });
  REQUIRE(ordered.size() == static_cast<std::size_t>(binomial(n, k)));
  std::vector<int> combo(k);
  for (std::size_t rank = 0; rank < ordered.size(); ++rank) {
    unrank_combination(static_cast<double>(rank), n, k, combo);
    for (int i = 0; i < k; ++i)
      CHECK(combo[static_cast<std::size_t>(i)] ==
            ordered[rank][static_cast<std::size_t>(i)]);
  }
}
