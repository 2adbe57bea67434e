#include "asep/identities.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "asep/detail/linalg.hpp"
#include "asep/errors.hpp"

namespace asep {

namespace {

constexpr int kMaxPermutationSize = 9;

// prod over ordered pairs (a earlier than b in `order`) of
// (p + q xi_b xi_a - xi_b) / (xi_a - xi_b), where a, b run over permuted
// positions, times the tail-product denominators.
cx permutation_term(std::span<const cx> xi, std::span<const int> order,
                    const ModelParams& mp) {
  const int k = static_cast<int>(order.size());
  cx acc(1.0, 0.0);
  for (int b = 1; b < k; ++b) {
    for (int a = 0; a < b; ++a) {
      const cx xa = xi[static_cast<std::size_t>(order[static_cast<std::size_t>(a)])];
      const cx xb = xi[static_cast<std::size_t>(order[static_cast<std::size_t>(b)])];
      acc *= (mp.p + mp.q * xb * xa - xb) / (xa - xb);
    }
  }
  // Suffix products xi_{s(l)} ... xi_{s(k)} against tau^{k-l+1}.
  cx suffix(1.0, 0.0);
  std::vector<cx> tails(static_cast<std::size_t>(k));
  for (int l = k - 1; l >= 0; --l) {
    suffix *= xi[static_cast<std::size_t>(order[static_cast<std::size_t>(l)])];
    tails[static_cast<std::size_t>(l)] = suffix;
  }
  double tau_pow = 1.0;
  for (int l = k - 1; l >= 0; --l) {
    tau_pow *= mp.tau;  // tau^{k-l} for 0-based l
    acc /= tails[static_cast<std::size_t>(l)] * tails[static_cast<std::size_t>(l)] - tau_pow;
  }
  return acc;
}

}  // namespace

cx symmetrization_lhs(std::span<const cx> xi, const ModelParams& mp) {
  const int k = static_cast<int>(xi.size());
  if (k < 1 || k > kMaxPermutationSize)
    throw DomainError("symmetrization_lhs: k out of range (permutation sum)");
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  cx acc(0.0, 0.0);
  do {
    acc += permutation_term(xi, order, mp);
  } while (std::next_permutation(order.begin(), order.end()));
  return acc;
}

cx symmetrization_rhs(std::span<const cx> xi, const ModelParams& mp) {
  const int k = static_cast<int>(xi.size());
  cx acc = std::pow(cx(1.0 + mp.tau, 0.0), -0.5 * k * (k - 1));
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const cx a = xi[static_cast<std::size_t>(i)];
      const cx b = xi[static_cast<std::size_t>(j)];
      acc *= (1.0 + mp.tau - a - b) / (mp.tau - a * b);
    }
  }
  for (int i = 0; i < k; ++i) {
    const cx a = xi[static_cast<std::size_t>(i)];
    acc /= a * a - mp.tau;
  }
  return acc;
}

cx det_kernel_lhs(std::span<const cx> xi, const ModelParams& mp) {
  const int k = static_cast<int>(xi.size());
  std::vector<cx> mat(static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const cx a = xi[static_cast<std::size_t>(i)];
      const cx b = xi[static_cast<std::size_t>(j)];
      mat[static_cast<std::size_t>(i) * k + j] = 1.0 / (mp.p + mp.q * a * b - a);
    }
  }
  return detail::det_in_place(mat, k);
}

cx det_kernel_rhs(std::span<const cx> xi, const ModelParams& mp) {
  const int k = static_cast<int>(xi.size());
  cx acc = (k % 2 == 0 ? 1.0 : -1.0) *
           std::pow(mp.p * mp.q, 0.5 * k * (k - 1)) * std::pow(mp.q, -k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      acc *= f_factor(xi[static_cast<std::size_t>(i)],
                      xi[static_cast<std::size_t>(j)], mp);
    }
  }
  for (int i = 0; i < k; ++i) {
    const cx a = xi[static_cast<std::size_t>(i)];
    acc /= (1.0 - a) * (a - mp.tau);
  }
  return acc;
}

cx residue_identity_lhs(std::span<const cx> xi, const ModelParams& mp) {
  const int k = static_cast<int>(xi.size());
  cx prod(1.0, 0.0);
  for (const cx& a : xi) prod *= a * a;
  return (prod - std::pow(mp.tau, k)) /
         std::pow(cx(1.0 + mp.tau, 0.0), k - 1);
}

cx residue_identity_rhs(std::span<const cx> xi, const ModelParams& mp) {
  const int k = static_cast<int>(xi.size());
  cx acc(0.0, 0.0);
  for (int l = 0; l < k; ++l) {
    const cx xl = xi[static_cast<std::size_t>(l)];
    cx term = xl * xl - mp.tau;
    for (int i = 0; i < k; ++i) {
      if (i == l) continue;
      const cx a = xi[static_cast<std::size_t>(i)];
      term *= (mp.p + mp.q * a * xl - a) / (xl - a);
      term *= (mp.tau - xl * a) / (1.0 + mp.tau - xl - a);
    }
    acc += term;
  }
  return acc;
}

cx residue_witness(cx z, std::span<const cx> xi, const ModelParams& mp) {
  cx acc = (2.0 * z - 1.0 - mp.tau) / ((z - 1.0) * (mp.q * z - mp.p));
  for (const cx& a : xi) {
    acc *= (mp.p + mp.q * a * z - a) / (z - a);
    acc *= (mp.tau - z * a) / (1.0 + mp.tau - z - a);
  }
  return acc;
}

cx residue_witness_residue_sum(std::span<const cx> xi, const ModelParams& mp) {
  const int k = static_cast<int>(xi.size());
  // z = 1 and z = tau each contribute p^k / q.
  cx acc = 2.0 * std::pow(mp.p, k) / mp.q;
  // z = xi_l and its mirror z = 1 + tau - xi_l contribute equally.
  for (int l = 0; l < k; ++l) {
    const cx xl = xi[static_cast<std::size_t>(l)];
    cx res = xl * xl - mp.tau;
    for (int i = 0; i < k; ++i) {
      if (i == l) continue;
      const cx a = xi[static_cast<std::size_t>(i)];
      res *= (mp.p + mp.q * a * xl - a) / (xl - a);
      res *= (mp.tau - xl * a) / (1.0 + mp.tau - xl - a);
    }
    acc += 2.0 * res;
  }
  return acc;
}

cx residue_witness_contour(std::span<const cx> xi, const ModelParams& mp,
                           double tol) {
  double far = std::max(1.0, mp.tau);
  for (const cx& a : xi) {
    far = std::max(far, std::abs(a));
    far = std::max(far, std::abs(1.0 + mp.tau - a));
  }
  const double radius = 2.0 * far + 2.0;
  const auto fn = [&](cx z) { return residue_witness(z, xi, mp); };
  return integrate_circle(fn, radius, tol).value;
}

std::vector<cx> sample_identity_points(Xoshiro256& rng, int k,
                                       const ModelParams& mp,
                                       double clearance) {
  std::vector<cx> pts;
  pts.reserve(static_cast<std::size_t>(k));
  const double two_pi = 8.0 * std::atan(1.0);
  int attempts = 0;
  while (static_cast<int>(pts.size()) < k) {
    if (++attempts > 20000)
      throw DomainError("sample_identity_points: cannot satisfy clearance");
    const double mod = 0.35 + 1.55 * rng.next_double();
    const double ang = two_pi * rng.next_double();
    const cx cand(mod * std::cos(ang), mod * std::sin(ang));
    bool ok = std::abs(cand - 1.0) >= clearance &&
              std::abs(cand - mp.tau) >= clearance &&
              std::abs(cand * cand - mp.tau) >= clearance &&
              std::abs(1.0 + mp.tau - 2.0 * cand) >= clearance;
    for (const cx& a : pts) {
      if (!ok) break;
      ok = ok && std::abs(cand - a) >= clearance;
      ok = ok && std::abs(mp.p + mp.q * cand * a - cand) >= clearance;
      ok = ok && std::abs(mp.p + mp.q * a * cand - a) >= clearance;
      ok = ok && std::abs(mp.tau - cand * a) >= clearance;
      ok = ok && std::abs(1.0 + mp.tau - cand - a) >= clearance;
    }
    if (ok) pts.push_back(cand);
  }
  return pts;
}

}  // namespace asep
