#include "asep/identities.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "asep/rng.hpp"

using namespace asep;

namespace {

double rel_gap(cx a, cx b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("permutation sum collapses to the closed pair-product form") {
  for (double p : {0.25, 0.4}) {
    const ModelParams mp(p);
    Xoshiro256 rng(7, 0);
    for (int k = 1; k <= 6; ++k) {
      for (int rep = 0; rep < 10; ++rep) {
        const std::vector<cx> xi = sample_identity_points(rng, k, mp);
        CHECK(rel_gap(symmetrization_lhs(xi, mp),
                      symmetrization_rhs(xi, mp)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("pair-denominator determinant factorizes") {
  for (double p : {0.25, 0.4}) {
    const ModelParams mp(p);
    Xoshiro256 rng(11, 0);
    for (int k = 1; k <= 5; ++k) {
      for (int rep = 0; rep < 10; ++rep) {
        const std::vector<cx> xi = sample_identity_points(rng, k, mp);
        CHECK(rel_gap(det_kernel_lhs(xi, mp), det_kernel_rhs(xi, mp)) <=
              1e-9);
      }
    }
  }
}

TEST_CASE("single-variable residue expansion holds") {
  for (double p : {0.25, 0.4}) {
    const ModelParams mp(p);
    Xoshiro256 rng(23, 0);
    for (int k = 1; k <= 5; ++k) {
      for (int rep = 0; rep < 10; ++rep) {
        const std::vector<cx> xi = sample_identity_points(rng, k, mp);
        CHECK(rel_gap(residue_identity_lhs(xi, mp),
                      residue_identity_rhs(xi, mp)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("witness function: contour integral, residue sum, closed form") {
  const ModelParams mp(0.3);
  Xoshiro256 rng(37, 0);
  for (int k = 1; k <= 4; ++k) {
    for (int rep = 0; rep < 4; ++rep) {
      const std::vector<cx> xi = sample_identity_points(rng, k, mp);
      cx closed{2.0 * std::pow(mp.q, k - 1), 0.0};
      for (const cx& v : xi) closed *= v * v;
      const cx from_contour = residue_witness_contour(xi, mp);
      const cx from_residues = residue_witness_residue_sum(xi, mp);
      CHECK(rel_gap(from_contour, closed) <= 1e-8);
      CHECK(rel_gap(from_residues, closed) <= 1e-8);
    }
  }
}
