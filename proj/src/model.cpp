#include "asep/model.hpp"

#include <algorithm>
#include <cmath>

namespace asep {

ModelParams::ModelParams(double right_rate) {
  if (!(right_rate > 0.0) || !(right_rate < 1.0)) {
    throw DomainError("ModelParams: p must lie strictly inside (0,1)");
  }
  p = right_rate;
  q = 1.0 - right_rate;
  tau = p / q;
}

cx epsilon(cx xi, const ModelParams& mp) {
  if (std::abs(xi) == 0.0) {
    throw DomainError("epsilon: xi = 0");
  }
  return mp.p / xi + mp.q * xi - 1.0;
}

cx f_factor(cx xi_i, cx xi_j, const ModelParams& mp) {
  const cx den = mp.p + mp.q * xi_i * xi_j - xi_i;
  const double scale =
      mp.p + std::abs(mp.q * xi_i * xi_j) + std::abs(xi_i);
  if (std::abs(den) < 1e-13 * scale) {
    throw PoleError("f_factor: denominator p + q*xi_i*xi_j - xi_i vanishes");
  }
  return (xi_j - xi_i) / den;
}

cx i_weight(std::int64_t x, std::span<const cx> xi, double t,
            const ModelParams& mp) {
  cx out{1.0, 0.0};
  const std::size_t k = xi.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      out *= f_factor(xi[a], xi[b], mp);
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    const cx one_minus = 1.0 - xi[a];
    if (std::abs(one_minus) < 1e-13 * (1.0 + std::abs(xi[a]))) {
      throw PoleError("i_weight: xi = 1");
    }
    out *= pow_int(xi[a], x) * std::exp(epsilon(xi[a], mp) * t) / one_minus;
  }
  return out;
}

namespace {

template <typename C>
C pow_int_impl(C base, std::int64_t e) {
  if (e < 0) {
    if (std::abs(base) == 0) {
      throw DomainError("pow_int: 0 raised to a negative power");
    }
    return C{1} / pow_int_impl(base, -e);
  }
  C acc{1};
  C b = base;
  std::uint64_t n = static_cast<std::uint64_t>(e);
  while (n != 0) {
    if (n & 1u) acc *= b;
    b *= b;
    n >>= 1;
  }
  return acc;
}

}  // namespace

cx pow_int(cx base, std::int64_t e) { return pow_int_impl(base, e); }
cxl pow_int(cxl base, std::int64_t e) { return pow_int_impl(base, e); }

InitialCondition InitialCondition::finite(std::vector<std::int64_t> y) {
  std::sort(y.begin(), y.end());
  if (std::adjacent_find(y.begin(), y.end()) != y.end()) {
    throw DomainError("InitialCondition::finite: duplicate site");
  }
  if (y.empty()) {
    throw DomainError("InitialCondition::finite: empty site list");
  }
  InitialCondition ic;
  ic.kind = IcKind::FiniteSet;
  ic.sites = std::move(y);
  return ic;
}

InitialCondition InitialCondition::alternating() {
  InitialCondition ic;
  ic.kind = IcKind::AlternatingZ;
  return ic;
}

InitialCondition InitialCondition::one_sided(std::int64_t k0) {
  InitialCondition ic;
  ic.kind = IcKind::OneSidedAlternating;
  ic.k0 = k0;
  return ic;
}

InitialCondition InitialCondition::step() {
  InitialCondition ic;
  ic.kind = IcKind::StepPositive;
  return ic;
}

bool InitialCondition::occupied_at_time_zero(std::int64_t site) const {
  switch (kind) {
    case IcKind::FiniteSet:
      return std::binary_search(sites.begin(), sites.end(), site);
    case IcKind::AlternatingZ: {
      // occupied on odd sites 2Z - 1
      const std::int64_t r = ((site % 2) + 2) % 2;
      return r == 1;
    }
    case IcKind::OneSidedAlternating: {
      if (site < 2 - k0) return false;
      const std::int64_t s = site + k0;
      return ((s % 2) + 2) % 2 == 0;
    }
    case IcKind::StepPositive:
      return site >= 1;
  }
  return false;
}

std::vector<std::int64_t> InitialCondition::minus_side() const {
  std::vector<std::int64_t> out;
  for (auto s : sites)
    if (s < 0) out.push_back(s);
  return out;
}

std::vector<std::int64_t> InitialCondition::plus_side() const {
  std::vector<std::int64_t> out;
  for (auto s : sites)
    if (s >= 0) out.push_back(s);
  return out;
}

}  // namespace asep
