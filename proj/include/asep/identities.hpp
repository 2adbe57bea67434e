#pragma once

#include <span>
#include <vector>

#include "asep/contour.hpp"
#include "asep/model.hpp"
#include "asep/rng.hpp"

namespace asep {

// Algebraic identities behind the distribution formulas, exposed so tests
// can check them at concrete points.  All functions take explicit variable
// tuples; callers are responsible for avoiding the pole sets (the sampler
// below does that).

// Symmetrization sum: sum over all permutations sigma of
//   prod_{i>j} (p + q xi_{s(i)} xi_{s(j)} - xi_{s(i)}) / (xi_{s(j)} - xi_{s(i)})
//   / prod_{l} ((xi_{s(l)} ... xi_{s(k)})^2 - tau^{k-l+1}).
// Cost is k! so k is capped at 9.
cx symmetrization_lhs(std::span<const cx> xi, const ModelParams&);

// Closed form of the same sum:
//   (1+tau)^{-k(k-1)/2} prod_{i<j} (1 + tau - xi_i - xi_j) / (tau - xi_i xi_j)
//   prod_i 1 / (xi_i^2 - tau).
cx symmetrization_rhs(std::span<const cx> xi, const ModelParams&);

// Determinant reduction: det(1 / (p + q xi_i xi_j - xi_i)) equals
//   (-1)^k (pq)^{k(k-1)/2} q^{-k} prod_{i != j} f(xi_i, xi_j)
//   prod_i 1 / ((1 - xi_i)(xi_i - tau)).
// Both sides, for tests to compare.
cx det_kernel_lhs(std::span<const cx> xi, const ModelParams&);
cx det_kernel_rhs(std::span<const cx> xi, const ModelParams&);

// One-variable residue identity underlying the symmetrization lemma:
//   (xi_1^2 ... xi_k^2 - tau^k) / (1+tau)^{k-1}
//   = sum_l (xi_l^2 - tau) prod_{i != l} [ (p + q xi_i xi_l - xi_i) /
//     (xi_l - xi_i) ] [ (tau - xi_l xi_i) / (1 + tau - xi_l - xi_i) ].
cx residue_identity_lhs(std::span<const cx> xi, const ModelParams&);
cx residue_identity_rhs(std::span<const cx> xi, const ModelParams&);

// The rational function whose residue bookkeeping proves the identity above.
cx residue_witness(cx z, std::span<const cx> xi, const ModelParams&);

// Sum of all residues of residue_witness inside a large circle, computed
// from the closed forms: p^k/q at z = 1 and at z = tau, plus the residues at
// z = xi_l and their mirrors z = 1 + tau - xi_l.
cx residue_witness_residue_sum(std::span<const cx> xi, const ModelParams&);

// (2 pi i)^{-1} times the contour integral of residue_witness over a circle
// enclosing all of its poles, which also equals 2 q^{k-1} prod xi_l^2.
cx residue_witness_contour(std::span<const cx> xi, const ModelParams&,
                           double tol = 1e-12);

// Random complex points usable with the identities: rejects any tuple that
// comes within `clearance` of a pole of the expressions above (pairwise
// collisions, xi_i^2 = tau, xi = 1, pair denominators, mirror collisions).
std::vector<cx> sample_identity_points(Xoshiro256& rng, int k,
                                       const ModelParams&,
                                       double clearance = 1e-3);

}  // namespace asep
