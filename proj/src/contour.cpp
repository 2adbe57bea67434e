#include "asep/contour.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "asep/detail/nodes.hpp"
#include "asep/detail/sum.hpp"
#include "asep/errors.hpp"
#include "asep/parallel.hpp"

namespace asep {

namespace detail {

std::vector<cxl> circle_nodes(double radius, int M) {
  std::vector<cxl> nodes(static_cast<std::size_t>(M));
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  const long double rl = radius;
  for (int j = 0; j < M; ++j) {
    const long double a = two_pi * j / M;
    nodes[static_cast<std::size_t>(j)] = cxl{rl * std::cos(a), rl * std::sin(a)};
  }
  return nodes;
}

}  // namespace detail

namespace {

using detail::circle_nodes;

constexpr double kTupleCap = 1e8;
constexpr int kMaxVariables = 12;

std::int64_t ipow64(std::int64_t base, int exp) {
  std::int64_t acc = 1;
  for (int i = 0; i < exp; ++i) acc *= base;
  return acc;
}

// Largest r with the same-side pair poles outside C_r: r (1 + q r) < p.
double small_radius_limit(const ModelParams& mp) {
  return (std::sqrt(1.0 + 4.0 * mp.p * mp.q) - 1.0) / (2.0 * mp.q);
}

}  // namespace

double margin_two_sided(const ModelParams& mp, double R, double r) {
  if (!(R > 0.0) || !(r > 0.0)) return 0.0;
  if (mp.q * R <= 1.0) return 0.0;  // p/(qR-1) poles must close inside C_R
  if (r >= mp.p) return 0.0;        // small-fed large poles degenerate
  const double rt = std::sqrt(mp.tau);
  const double out_small =
      std::min({1.0, rt, mp.p / (1.0 + mp.q * r), mp.p / (1.0 + mp.q * R)}) /
      r;
  const double out_large = ((mp.p - r) / (mp.q * r)) / R;
  const double in_large = R / std::max({1.0, rt, (R + mp.p) / (mp.q * R),
                                        mp.p / (mp.q * R - 1.0)});
  return std::min({out_small, out_large, in_large});
}

double margin_large_only(const ModelParams& mp, double R) {
  if (!(R > 0.0)) return 0.0;
  const double rt = std::sqrt(mp.tau);
  double nearest = std::max({1.0, rt, (R + mp.p) / (mp.q * R)});
  if (mp.q * R != 1.0)
    nearest = std::max(nearest, mp.p / std::abs(mp.q * R - 1.0));
  return R / nearest;
}

double margin_small_only(const ModelParams& mp, double r) {
  if (!(r > 0.0)) return 0.0;
  const double rt = std::sqrt(mp.tau);
  return std::min({1.0, rt, mp.p / (1.0 + mp.q * r)}) / r;
}

ContourPlan ContourPlan::scaled(double f_large, double f_small) const {
  ContourPlan out = *this;
  out.radius_large *= f_large;
  out.radius_large_pure *= f_large;
  out.radius_large_tight *= f_large;
  out.radius_small *= f_small;
  bool ok = margin_large_only(params, out.radius_large_pure) > 1.0 &&
            margin_large_only(params, out.radius_large_tight) > 1.0;
  if (out.radius_small > 0.0) {
    ok = ok && margin_two_sided(params, out.radius_large, out.radius_small) > 1.0 &&
         margin_small_only(params, out.radius_small) > 1.0;
  }
  if (!ok)
    throw InfeasiblePlanError("ContourPlan::scaled: scaled radii cross a pole");
  return out;
}

ContourPlan plan_contours(const ModelParams& mp, double safety,
                          ContourKind kind) {
  if (!(safety >= 1.0))
    throw DomainError("plan_contours: safety must be at least 1");
  ContourPlan plan{mp, 0.0, 0.0, 0.0, 0.0, 16};

  // Pure-large radius: maximize separation, with a pull toward small radii
  // since the integrand's dynamic range grows like R^x e^{qRt}.
  const double lo = 1.0001 * std::max(1.0, std::sqrt(mp.tau));
  {
    double best_score = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 4000; ++i) {
      const double R = lo + (14.0 - lo) * i / 4000.0;
      const double m = margin_large_only(mp, R);
      if (m <= 1.0) continue;
      const double score = std::min(m, 1.9) - 0.12 * std::max(0.0, R - 2.2);
      if (score > best_score) {
        best_score = score;
        plan.radius_large_pure = R;
      }
      if (plan.radius_large_tight == 0.0 && m >= 1.07)
        plan.radius_large_tight = R;
    }
    if (plan.radius_large_tight == 0.0)
      plan.radius_large_tight = plan.radius_large_pure;
    if (plan.radius_large_pure == 0.0 ||
        margin_large_only(mp, plan.radius_large_pure) < safety) {
      throw InfeasiblePlanError(
          "plan_contours: no valid large contour with requested safety");
    }
  }

  if (kind == ContourKind::LargeOnly) {
    plan.radius_large = plan.radius_large_pure;
    plan.radius_small = 0.0;
    return plan;
  }

  // Joint small/large search for mixed terms.  R is squeezed between the
  // large-pair poles closing inside (qR^2 - R - p > 0) and the mixed-pair
  // poles staying outside C_r (r(1+qR) < p), so the grid walks r below its
  // cap and R inside that window.  The score prefers a fat small circle and
  // a moderate large one: both keep the integrand's dynamic range in check.
  const double R_floor =
      (1.0 + std::sqrt(1.0 + 4.0 * mp.p * mp.q)) / (2.0 * mp.q);
  const double r_cap = std::min(
      {1.0, std::sqrt(mp.tau), small_radius_limit(mp),
       mp.p / (1.0 + mp.q * R_floor)});
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 150; ++i) {
    const double r = r_cap * (0.10 + 0.85 * i / 150.0);
    const double R_ceil = std::min(14.0, 0.98 * (mp.p - r) / (mp.q * r));
    if (R_ceil <= 1.02 * R_floor) continue;
    for (int j = 0; j <= 130; ++j) {
      const double R = 1.02 * R_floor + (R_ceil - 1.02 * R_floor) * j / 130.0;
      const double m =
          std::min(margin_two_sided(mp, R, r), margin_small_only(mp, r));
      if (m < safety) continue;
      // The scaled plan used by the radius-independence checks must stay
      // valid as well.
      if (margin_two_sided(mp, 1.15 * R, 0.85 * r) <= 1.01) continue;
      if (margin_small_only(mp, 0.85 * r) <= 1.01) continue;
      const double score = std::min(m, 1.35) -
                           0.10 * std::max(0.0, R - 3.0) +
                           0.5 * std::min(r, 0.08);
      if (score > best_score) {
        best_score = score;
        plan.radius_large = R;
        plan.radius_small = r;
      }
    }
  }
  if (plan.radius_small == 0.0) {
    throw InfeasiblePlanError(
        "plan_contours: no valid contour pair with requested safety");
  }
  return plan;
}

void TensorIntegrand::prepare(std::span<const cxl> nodes_small,
                              std::span<const cxl> nodes_large) {
  nodes_small_.assign(nodes_small.begin(), nodes_small.end());
  nodes_large_.assign(nodes_large.begin(), nodes_large.end());
}

cxl TensorIntegrand::eval(std::span<const int> idx_small,
                          std::span<const int> idx_large) const {
  std::array<cxl, kMaxVariables> buf;
  std::size_t n = 0;
  for (int i : idx_small) buf[n++] = nodes_small_[static_cast<std::size_t>(i)];
  for (int i : idx_large) buf[n++] = nodes_large_[static_cast<std::size_t>(i)];
  return eval_values(std::span<const cxl>(buf.data(), n));
}

cxl TensorIntegrand::eval_values(std::span<const cxl>) const {
  throw DomainError("TensorIntegrand: eval_values not overridden");
}

QuadratureResult integrate_tensor(TensorIntegrand& f, int k_minus, int k_plus,
                                  const ContourPlan& plan, double tol,
                                  int max_nodes, double radius_small_override,
                                  double radius_large_override) {
  if (k_minus < 0 || k_plus < 0 || k_minus + k_plus > kMaxVariables)
    throw DomainError("integrate_tensor: variable count out of range");
  const int k = k_minus + k_plus;
  QuadratureResult out{cx(0.0, 0.0), std::numeric_limits<double>::infinity(),
                       0, false};
  if (k == 0) {
    out.value = cx(1.0, 0.0);
    out.est_error = 0.0;
    out.converged = true;
    return out;
  }
  const double r =
      radius_small_override > 0.0 ? radius_small_override : plan.radius_small;
  const double R = radius_large_override > 0.0
                       ? radius_large_override
                       : (k_minus == 0 ? plan.radius_large_pure
                                       : plan.radius_large);
  if (k_minus > 0 && !(r > 0.0))
    throw DomainError("integrate_tensor: plan has no small contour");

  cxl prev{};
  bool have_prev = false;
  for (int M = plan.nodes; M <= max_nodes; M *= 2) {
    if (std::pow(static_cast<double>(M), k) > kTupleCap) break;
    const std::vector<cxl> ns = circle_nodes(r, k_minus > 0 ? M : 0);
    const std::vector<cxl> nl = circle_nodes(R, M);
    std::vector<cxl> ws(ns.size()), wl(nl.size());
    for (std::size_t j = 0; j < ns.size(); ++j) ws[j] = ns[j] / static_cast<long double>(M);
    for (std::size_t j = 0; j < nl.size(); ++j) wl[j] = nl[j] / static_cast<long double>(M);
    f.prepare(ns, nl);

    const std::int64_t total = ipow64(M, k);
    const std::int64_t chunk = 16384;
    const std::int64_t n_chunks = (total + chunk - 1) / chunk;
    std::vector<cxl> partial(static_cast<std::size_t>(n_chunks));
    parallel_chunks(n_chunks, [&](std::int64_t c) {
      detail::NeumaierComplex acc;
      std::array<int, kMaxVariables> digits{};
      const std::int64_t begin = c * chunk;
      const std::int64_t end = std::min(total, begin + chunk);
      std::int64_t rem = begin;
      for (int pos = k - 1; pos >= 0; --pos) {
        digits[static_cast<std::size_t>(pos)] = static_cast<int>(rem % M);
        rem /= M;
      }
      for (std::int64_t linear = begin; linear < end; ++linear) {
        cxl w{1.0L, 0.0L};
        for (int pos = 0; pos < k_minus; ++pos)
          w *= ws[static_cast<std::size_t>(digits[static_cast<std::size_t>(pos)])];
        for (int pos = k_minus; pos < k; ++pos)
          w *= wl[static_cast<std::size_t>(digits[static_cast<std::size_t>(pos)])];
        const cxl v = f.eval({digits.data(), static_cast<std::size_t>(k_minus)},
                             {digits.data() + k_minus,
                              static_cast<std::size_t>(k_plus)});
        acc.add(w * v);
        for (int pos = k - 1; pos >= 0; --pos) {
          if (++digits[static_cast<std::size_t>(pos)] < M) break;
          digits[static_cast<std::size_t>(pos)] = 0;
        }
      }
      partial[static_cast<std::size_t>(c)] = acc.total();
    });
    const cxl val = detail::reduce_pairwise(std::move(partial));
    out.value = cx(static_cast<double>(val.real()),
                   static_cast<double>(val.imag()));
    out.nodes_used = M;
    if (have_prev) {
      out.est_error = static_cast<double>(std::abs(val - prev));
      if (out.est_error <= tol) {
        out.converged = true;
        return out;
      }
    }
    prev = val;
    have_prev = true;
  }
  return out;
}

QuadratureResult integrate_circle(const std::function<cx(cx)>& fn,
                                  double radius, double tol, int max_nodes) {
  if (!(radius > 0.0)) throw DomainError("integrate_circle: radius <= 0");
  QuadratureResult out{cx(0.0, 0.0), std::numeric_limits<double>::infinity(),
                       0, false};
  cxl prev{};
  bool have_prev = false;
  for (int M = 32; M <= max_nodes; M *= 2) {
    const std::vector<cxl> nodes = circle_nodes(radius, M);
    detail::NeumaierComplex acc;
    for (const cxl& z : nodes) {
      const cx zd(static_cast<double>(z.real()), static_cast<double>(z.imag()));
      const cx v = fn(zd);
      acc.add(cxl{v.real(), v.imag()} * z / static_cast<long double>(M));
    }
    const cxl val = acc.total();
    out.value = cx(static_cast<double>(val.real()),
                   static_cast<double>(val.imag()));
    out.nodes_used = M;
    if (have_prev) {
      out.est_error = static_cast<double>(std::abs(val - prev));
      if (out.est_error <= tol) {
        out.converged = true;
        return out;
      }
    }
    prev = val;
    have_prev = true;
  }
  return out;
}

}  // namespace asep
