#pragma once

#include <cmath>
#include <vector>

namespace asep::detail {

// Determinant by in-place LU with partial pivoting.  `a` is row-major n x n
// and is destroyed.  The matrices here are tiny (k <= 12), so no blocking.
template <typename T>
T det_in_place(std::vector<T>& a, int n) {
  using std::abs;
  T det = T(1);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    auto best = abs(a[static_cast<std::size_t>(col) * n + col]);
    for (int row = col + 1; row < n; ++row) {
      const auto mag = abs(a[static_cast<std::size_t>(row) * n + col]);
      if (mag > best) {
        best = mag;
        pivot = row;
      }
    }
    if (!(best > 0)) return T(0);
    if (pivot != col) {
      for (int j = col; j < n; ++j)
        std::swap(a[static_cast<std::size_t>(pivot) * n + j],
                  a[static_cast<std::size_t>(col) * n + j]);
      det = -det;
    }
    const T d = a[static_cast<std::size_t>(col) * n + col];
    det *= d;
    for (int row = col + 1; row < n; ++row) {
      const T factor = a[static_cast<std::size_t>(row) * n + col] / d;
      for (int j = col + 1; j < n; ++j)
        a[static_cast<std::size_t>(row) * n + j] -=
            factor * a[static_cast<std::size_t>(col) * n + j];
    }
  }
  return det;
}

}  // namespace asep::detail
