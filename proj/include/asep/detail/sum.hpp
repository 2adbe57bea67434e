#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "asep/model.hpp"

namespace asep::detail {

// Neumaier compensated accumulator.  The quadrature sums mix terms whose
// magnitudes span many orders, so plain summation would lose the small ones.
struct NeumaierSum {
  long double sum = 0.0L;
  long double comp = 0.0L;

  void add(long double v) {
    const long double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }

  long double total() const { return sum + comp; }
};

struct NeumaierComplex {
  NeumaierSum re, im;

  void add(const cxl& v) {
    re.add(v.real());
    im.add(v.imag());
  }

  cxl total() const { return {re.total(), im.total()}; }
};

// Fixed-shape binary-tree reduction.  Summing chunk partials this way keeps
// results byte-identical no matter how many workers produced them.
inline cxl reduce_pairwise(std::vector<cxl> v) {
  if (v.empty()) return {0.0L, 0.0L};
  std::size_t n = v.size();
  while (n > 1) {
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) v[i] = v[2 * i] + v[2 * i + 1];
    if (n % 2 == 1) {
      v[half] = v[n - 1];
      n = half + 1;
    } else {
      n = half;
    }
  }
  return v[0];
}

}  // namespace asep::detail
