#include "asep/dist.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "asep/detail/linalg.hpp"
#include "asep/detail/nodes.hpp"
#include "asep/detail/sum.hpp"
#include "asep/errors.hpp"
#include "asep/parallel.hpp"
#include "asep/tau_comb.hpp"

namespace asep {

namespace {

constexpr int kMaxVariables = 12;
constexpr double kPairCap = 1e8;
// Pure large-contour integrands grow like R^x, so for x this large the
// quadrature switches to the tight large radius to keep cancellation from
// eating the extended-precision mantissa.
constexpr std::int64_t kTightRadiusX = 6;

// Long-double copies of the rates for the quadrature internals.  tau is
// recomputed as the exact ratio so the integrand identities hold to working
// precision.
struct LP {
  long double p, q, tau, inv_tau;
};

LP lp_of(const ModelParams& mp) {
  LP lp;
  lp.p = mp.p;
  lp.q = mp.q;
  lp.tau = lp.p / lp.q;
  lp.inv_tau = lp.q / lp.p;
  return lp;
}

cxl f_l(const LP& lp, cxl a, cxl b) {
  return (b - a) / (lp.p + lp.q * a * b - a);
}

cxl eps_l(const LP& lp, cxl xi) { return lp.p / xi + lp.q * xi - 1.0L; }

long double ipow_l(long double b, std::int64_t e) {
  if (e < 0) return 1.0L / ipow_l(b, -e);
  long double acc = 1.0L;
  while (e > 0) {
    if (e & 1) acc *= b;
    b *= b;
    e >>= 1;
  }
  return acc;
}

double sign_of(std::int64_t e) { return ((e % 2) + 2) % 2 == 0 ? 1.0 : -1.0; }

long double factorial_l(int n) {
  long double acc = 1.0L;
  for (int i = 2; i <= n; ++i) acc *= i;
  return acc;
}

cxl kernel_plus_impl(const LP& lp, cxl xi, cxl xp, std::int64_t x,
                     long double t) {
  const cxl num = pow_int(xp, x) * std::exp(eps_l(lp, xp) * t) *
                  (xp - lp.tau) * xp;
  const cxl den = (lp.p + lp.q * xi * xp - xi) * (xp * xp - lp.tau);
  return num / den;
}

cxl kernel_minus_impl(const LP& lp, cxl xi, cxl xp, std::int64_t x,
                      long double t) {
  const cxl num = pow_int(xp, x) * std::exp(eps_l(lp, xp) * t) * (xp - lp.tau);
  const cxl den =
      (lp.p + lp.q * xi * xp - xi) * (1.0L / (xp * xp) - lp.inv_tau) * xp;
  return num / den;
}

cxl pair_plus_impl(const LP& lp, cxl a, cxl b) {
  return (1.0L + lp.tau - a - b) / (lp.tau - a * b);
}

cxl pair_minus_impl(const LP& lp, cxl a, cxl b) {
  return (1.0L + lp.inv_tau - 1.0L / a - 1.0L / b) /
         (lp.inv_tau - 1.0L / (a * b));
}

cxl phi_plus_impl(const LP& lp, std::span<const cxl> xs) {
  const int k = static_cast<int>(xs.size());
  cxl num{1.0L, 0.0L}, den{1.0L, 0.0L};
  cxl suffix{1.0L, 0.0L};
  for (int i = k - 1; i >= 0; --i) {
    num *= xs[static_cast<std::size_t>(i)];
    suffix *= xs[static_cast<std::size_t>(i)];
    den *= suffix * suffix - ipow_l(lp.tau, k - i);
  }
  return num / den;
}

cxl phi_minus_impl(const LP& lp, std::span<const cxl> xs) {
  // Canonical order: xs[j] carries label j - k, i.e. exponent 2(k-j) - 1,
  // and the label-l tail product is the prefix product up to index k - l.
  const int k = static_cast<int>(xs.size());
  cxl num{1.0L, 0.0L}, den{1.0L, 0.0L};
  cxl prefix{1.0L, 0.0L};
  for (int j = 0; j < k; ++j) {
    num *= pow_int(xs[static_cast<std::size_t>(j)], 2 * (k - j) - 1);
    prefix *= xs[static_cast<std::size_t>(j)];
    den *= ipow_l(lp.tau, j + 1) - prefix * prefix;
  }
  return num / den;
}

// Lexicographic successor of a k-combination of {0, ..., M-1}.
bool advance_combination(std::span<int> c, int M) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[static_cast<std::size_t>(i)] < M - k + i) {
      int v = ++c[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = ++v;
      return true;
    }
  }
  return false;
}

void store_result(QuadratureResult& out, const cxl& val, int M) {
  out.value = cx(static_cast<double>(val.real()),
                 static_cast<double>(val.imag()));
  out.nodes_used = M;
}

// Iterated contour integral of the symmetrized alternating-series term
// with k_minus small and k_plus large variables:
//
//   (2 pi i)^{-k} * integral of  prod_{i<0, j>0} f(xi_i, xi_j)
//       * det(K-) * prod pair-   * det(K+) * prod pair+ .
//
// The integrand vanishes whenever two same-side variables coincide (the
// determinant gets equal rows), so the tensor-product trapezoid sum reduces
// to k-! k+! times a sum over strictly increasing node-index combinations
// per side.  The side with fewer combinations is precomputed and held; the
// other side streams by rank ranges, which keeps the result byte-identical
// for any worker count.
QuadratureResult alternating_sym_integral(const ModelParams& mp, int k_minus,
                                          int k_plus, std::int64_t x, double t,
                                          const ContourPlan& plan, double tol,
                                          int max_nodes) {
  if (k_minus < 0 || k_plus < 0 || k_minus + k_plus > kMaxVariables)
    throw DomainError("alternating term: variable count out of range");
  QuadratureResult out{cx(0.0, 0.0), std::numeric_limits<double>::infinity(),
                       0, false};
  if (k_minus + k_plus == 0) {
    out.value = cx(1.0, 0.0);
    out.est_error = 0.0;
    out.converged = true;
    return out;
  }
  const LP lp = lp_of(mp);
  const double r = plan.radius_small;
  const double R =
      k_minus == 0 ? (x >= kTightRadiusX ? plan.radius_large_tight
                                         : plan.radius_large_pure)
                   : plan.radius_large;
  if (k_minus > 0 && !(r > 0.0))
    throw DomainError("alternating term: plan has no small contour");

  cxl prev{};
  bool have_prev = false;
  for (int M = plan.nodes; M <= max_nodes; M *= 2) {
    const double n_minus_d = binomial(M, k_minus);
    const double n_plus_d = binomial(M, k_plus);
    if (n_minus_d * n_plus_d > kPairCap) break;
    const std::int64_t n_minus = std::llround(n_minus_d);
    const std::int64_t n_plus = std::llround(n_plus_d);

    const std::vector<cxl> ns = detail::circle_nodes(r, k_minus > 0 ? M : 0);
    const std::vector<cxl> nl = detail::circle_nodes(R, k_plus > 0 ? M : 0);
    const std::size_t Ms = static_cast<std::size_t>(M);
    std::vector<cxl> Km, Kp, pm, pp, mix;
    if (k_minus > 0) {
      Km.resize(Ms * Ms);
      pm.resize(Ms * Ms);
      for (std::size_t a = 0; a < Ms; ++a)
        for (std::size_t b = 0; b < Ms; ++b) {
          Km[a * Ms + b] = kernel_minus_impl(lp, ns[a], ns[b], x, t);
          pm[a * Ms + b] = pair_minus_impl(lp, ns[a], ns[b]);
        }
    }
    if (k_plus > 0) {
      Kp.resize(Ms * Ms);
      pp.resize(Ms * Ms);
      for (std::size_t a = 0; a < Ms; ++a)
        for (std::size_t b = 0; b < Ms; ++b) {
          Kp[a * Ms + b] = kernel_plus_impl(lp, nl[a], nl[b], x, t);
          pp[a * Ms + b] = pair_plus_impl(lp, nl[a], nl[b]);
        }
    }
    if (k_minus > 0 && k_plus > 0) {
      mix.resize(Ms * Ms);
      for (std::size_t a = 0; a < Ms; ++a)
        for (std::size_t b = 0; b < Ms; ++b)
          mix[a * Ms + b] = f_l(lp, ns[a], nl[b]);
    }

    // det(K) * pair product * node weights for one side's combination.
    const auto side_value = [&](bool minus_side, std::span<const int> combo,
                                std::vector<cxl>& scratch) -> cxl {
      const int kk = static_cast<int>(combo.size());
      if (kk == 0) return cxl{1.0L, 0.0L};
      const std::vector<cxl>& K = minus_side ? Km : Kp;
      const std::vector<cxl>& P = minus_side ? pm : pp;
      const std::vector<cxl>& nodes = minus_side ? ns : nl;
      scratch.resize(static_cast<std::size_t>(kk) * kk);
      for (int i = 0; i < kk; ++i)
        for (int j = 0; j < kk; ++j)
          scratch[static_cast<std::size_t>(i) * kk + j] =
              K[static_cast<std::size_t>(combo[static_cast<std::size_t>(i)]) * Ms +
                static_cast<std::size_t>(combo[static_cast<std::size_t>(j)])];
      cxl v = detail::det_in_place(scratch, kk);
      for (int i = 0; i < kk; ++i) {
        const std::size_t ci =
            static_cast<std::size_t>(combo[static_cast<std::size_t>(i)]);
        for (int j = i + 1; j < kk; ++j)
          v *= P[ci * Ms +
                 static_cast<std::size_t>(combo[static_cast<std::size_t>(j)])];
        v *= nodes[ci] / static_cast<long double>(M);
      }
      return v;
    };

    const bool store_minus = n_minus <= n_plus;
    const int k_st = store_minus ? k_minus : k_plus;
    const int k_sr = store_minus ? k_plus : k_minus;
    const std::int64_t n_st = store_minus ? n_minus : n_plus;
    const std::int64_t n_sr = store_minus ? n_plus : n_minus;

    std::vector<int> st_combos(static_cast<std::size_t>(n_st) *
                               static_cast<std::size_t>(k_st));
    std::vector<cxl> st_vals(static_cast<std::size_t>(n_st));
    {
      const std::int64_t chunk = 2048;
      const std::int64_t n_chunks = (n_st + chunk - 1) / chunk;
      parallel_chunks(n_chunks, [&](std::int64_t c) {
        std::vector<cxl> scratch;
        std::vector<int> combo(static_cast<std::size_t>(k_st));
        const std::int64_t begin = c * chunk;
        const std::int64_t end = std::min(n_st, begin + chunk);
        unrank_combination(static_cast<double>(begin), M, k_st, combo);
        for (std::int64_t i = begin; i < end; ++i) {
          std::copy(combo.begin(), combo.end(),
                    st_combos.begin() + i * k_st);
          st_vals[static_cast<std::size_t>(i)] =
              side_value(store_minus, combo, scratch);
          advance_combination(combo, M);
        }
      });
    }

    const std::int64_t stream_chunk =
        std::max<std::int64_t>(1, 65536 / std::max<std::int64_t>(1, n_st));
    const std::int64_t n_chunks = (n_sr + stream_chunk - 1) / stream_chunk;
    std::vector<cxl> partial(static_cast<std::size_t>(n_chunks));
    parallel_chunks(n_chunks, [&](std::int64_t c) {
      detail::NeumaierComplex acc;
      std::vector<cxl> scratch;
      std::vector<int> combo(static_cast<std::size_t>(k_sr));
      const std::int64_t begin = c * stream_chunk;
      const std::int64_t end = std::min(n_sr, begin + stream_chunk);
      unrank_combination(static_cast<double>(begin), M, k_sr, combo);
      for (std::int64_t i = begin; i < end; ++i) {
        const cxl v = side_value(!store_minus, combo, scratch);
        for (std::int64_t s = 0; s < n_st; ++s) {
          cxl mixv{1.0L, 0.0L};
          if (k_minus > 0 && k_plus > 0) {
            const int* sc = &st_combos[static_cast<std::size_t>(s) *
                                       static_cast<std::size_t>(k_st)];
            for (int a = 0; a < k_st; ++a)
              for (int b = 0; b < k_sr; ++b) {
                const int im = store_minus ? sc[a] : combo[static_cast<std::size_t>(b)];
                const int ip = store_minus ? combo[static_cast<std::size_t>(b)] : sc[a];
                mixv *= mix[static_cast<std::size_t>(im) * Ms +
                            static_cast<std::size_t>(ip)];
              }
          }
          acc.add(v * st_vals[static_cast<std::size_t>(s)] * mixv);
        }
        advance_combination(combo, M);
      }
      partial[static_cast<std::size_t>(c)] = acc.total();
    });
    const cxl val = detail::reduce_pairwise(std::move(partial)) *
                    factorial_l(k_minus) * factorial_l(k_plus);
    store_result(out, val, M);
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

// Single-contour analogue for the step and one-sided series: integrand
// diag(xi_1) ... diag(xi_k) * prod_{i<j} pair(xi_i, xi_j), symmetric and
// vanishing at coincident nodes, integrated over C^k with the combination
// shortcut.
QuadratureResult block_sym_integral(
    int k, double radius, int start_nodes, double tol, int max_nodes,
    const std::function<cxl(cxl)>& diag_fn,
    const std::function<cxl(cxl, cxl)>& pair_fn) {
  if (k < 1 || k > kMaxVariables)
    throw DomainError("block term: variable count out of range");
  QuadratureResult out{cx(0.0, 0.0), std::numeric_limits<double>::infinity(),
                       0, false};
  cxl prev{};
  bool have_prev = false;
  for (int M = start_nodes; M <= max_nodes; M *= 2) {
    const double n_combos_d = binomial(M, k);
    if (n_combos_d > kPairCap) break;
    const std::int64_t n_combos = std::llround(n_combos_d);
    const std::vector<cxl> nodes = detail::circle_nodes(radius, M);
    const std::size_t Ms = static_cast<std::size_t>(M);
    std::vector<cxl> diag(Ms);
    std::vector<cxl> pair(Ms * Ms);
    for (std::size_t a = 0; a < Ms; ++a)
      diag[a] = diag_fn(nodes[a]) * nodes[a] / static_cast<long double>(M);
    for (std::size_t a = 0; a < Ms; ++a)
      for (std::size_t b = 0; b < Ms; ++b)
        pair[a * Ms + b] = pair_fn(nodes[a], nodes[b]);

    const std::int64_t chunk = 4096;
    const std::int64_t n_chunks = (n_combos + chunk - 1) / chunk;
    std::vector<cxl> partial(static_cast<std::size_t>(n_chunks));
    parallel_chunks(n_chunks, [&](std::int64_t c) {
      detail::NeumaierComplex acc;
      std::vector<int> combo(static_cast<std::size_t>(k));
      const std::int64_t begin = c * chunk;
      const std::int64_t end = std::min(n_combos, begin + chunk);
      unrank_combination(static_cast<double>(begin), M, k, combo);
      for (std::int64_t i = begin; i < end; ++i) {
        cxl v{1.0L, 0.0L};
        for (int a = 0; a < k; ++a) {
          const std::size_t ca =
              static_cast<std::size_t>(combo[static_cast<std::size_t>(a)]);
          v *= diag[ca];
          for (int b = a + 1; b < k; ++b)
            v *= pair[ca * Ms +
                      static_cast<std::size_t>(combo[static_cast<std::size_t>(b)])];
        }
        acc.add(v);
        advance_combination(combo, M);
      }
      partial[static_cast<std::size_t>(c)] = acc.total();
    });
    const cxl val = detail::reduce_pairwise(std::move(partial)) * factorial_l(k);
    store_result(out, val, M);
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

// Unsymmetrized alternating-series integrand: prod_{a<b} f * per-variable
// weights * phi- * phi+, evaluated from per-level tables.
class AltUnsymIntegrand : public TensorIntegrand {
 public:
  AltUnsymIntegrand(const ModelParams& mp, std::int64_t x, double t)
      : lp_(lp_of(mp)), x_(x), t_(t) {}

  void prepare(std::span<const cxl> ns, std::span<const cxl> nl) override {
    TensorIntegrand::prepare(ns, nl);
    const std::size_t Ms = ns.size(), Ml = nl.size();
    fss_.resize(Ms * Ms);
    for (std::size_t a = 0; a < Ms; ++a)
      for (std::size_t b = 0; b < Ms; ++b)
        fss_[a * Ms + b] = f_l(lp_, ns[a], ns[b]);
    fsl_.resize(Ms * Ml);
    for (std::size_t a = 0; a < Ms; ++a)
      for (std::size_t b = 0; b < Ml; ++b)
        fsl_[a * Ml + b] = f_l(lp_, ns[a], nl[b]);
    fll_.resize(Ml * Ml);
    for (std::size_t a = 0; a < Ml; ++a)
      for (std::size_t b = 0; b < Ml; ++b)
        fll_[a * Ml + b] = f_l(lp_, nl[a], nl[b]);
    diag_s_.resize(Ms);
    for (std::size_t a = 0; a < Ms; ++a)
      diag_s_[a] = pow_int(ns[a], x_) * std::exp(eps_l(lp_, ns[a]) * t_) /
                   (1.0L - ns[a]);
    diag_l_.resize(Ml);
    for (std::size_t a = 0; a < Ml; ++a)
      diag_l_[a] = pow_int(nl[a], x_) * std::exp(eps_l(lp_, nl[a]) * t_) /
                   (1.0L - nl[a]);
  }

  cxl eval(std::span<const int> is, std::span<const int> il) const override {
    const std::size_t Ms = nodes_small_.size(), Ml = nodes_large_.size();
    const int km = static_cast<int>(is.size());
    const int kp = static_cast<int>(il.size());
    cxl v{1.0L, 0.0L};
    for (int a = 0; a < km; ++a) {
      const std::size_t ia = static_cast<std::size_t>(is[static_cast<std::size_t>(a)]);
      v *= diag_s_[ia];
      for (int b = a + 1; b < km; ++b)
        v *= fss_[ia * Ms + static_cast<std::size_t>(is[static_cast<std::size_t>(b)])];
      for (int b = 0; b < kp; ++b)
        v *= fsl_[ia * Ml + static_cast<std::size_t>(il[static_cast<std::size_t>(b)])];
    }
    for (int a = 0; a < kp; ++a) {
      const std::size_t ia = static_cast<std::size_t>(il[static_cast<std::size_t>(a)]);
      v *= diag_l_[ia];
      for (int b = a + 1; b < kp; ++b)
        v *= fll_[ia * Ml + static_cast<std::size_t>(il[static_cast<std::size_t>(b)])];
    }
    std::array<cxl, kMaxVariables> buf;
    for (int a = 0; a < km; ++a)
      buf[static_cast<std::size_t>(a)] =
          nodes_small_[static_cast<std::size_t>(is[static_cast<std::size_t>(a)])];
    v *= phi_minus_impl(lp_, {buf.data(), static_cast<std::size_t>(km)});
    for (int a = 0; a < kp; ++a)
      buf[static_cast<std::size_t>(a)] =
          nodes_large_[static_cast<std::size_t>(il[static_cast<std::size_t>(a)])];
    v *= phi_plus_impl(lp_, {buf.data(), static_cast<std::size_t>(kp)});
    return v;
  }

 private:
  LP lp_;
  std::int64_t x_;
  long double t_;
  std::vector<cxl> fss_, fsl_, fll_, diag_s_, diag_l_;
};

// Finite-start term integrand: prod_{a<b} f * prod_a xi_a^{x - s_a}
// e^{eps t} / (1 - xi_a), with s the subset sites in ascending order
// (canonical variable order makes that the right assignment).
class FiniteTermIntegrand : public TensorIntegrand {
 public:
  FiniteTermIntegrand(const ModelParams& mp, std::vector<std::int64_t> sites,
                      int k_minus, std::int64_t x, double t)
      : lp_(lp_of(mp)), sites_(std::move(sites)),
        k_minus_(k_minus), x_(x), t_(t) {}

  void prepare(std::span<const cxl> ns, std::span<const cxl> nl) override {
    TensorIntegrand::prepare(ns, nl);
    const std::size_t Ms = ns.size(), Ml = nl.size();
    fss_.resize(Ms * Ms);
    for (std::size_t a = 0; a < Ms; ++a)
      for (std::size_t b = 0; b < Ms; ++b)
        fss_[a * Ms + b] = f_l(lp_, ns[a], ns[b]);
    fsl_.resize(Ms * Ml);
    for (std::size_t a = 0; a < Ms; ++a)
      for (std::size_t b = 0; b < Ml; ++b)
        fsl_[a * Ml + b] = f_l(lp_, ns[a], nl[b]);
    fll_.resize(Ml * Ml);
    for (std::size_t a = 0; a < Ml; ++a)
      for (std::size_t b = 0; b < Ml; ++b)
        fll_[a * Ml + b] = f_l(lp_, nl[a], nl[b]);
    const int k = static_cast<int>(sites_.size());
    diag_.assign(static_cast<std::size_t>(k), {});
    for (int v = 0; v < k; ++v) {
      const bool small = v < k_minus_;
      const std::span<const cxl> nodes = small ? ns : nl;
      auto& row = diag_[static_cast<std::size_t>(v)];
      row.resize(nodes.size());
      for (std::size_t a = 0; a < nodes.size(); ++a)
        row[a] = pow_int(nodes[a], x_ - sites_[static_cast<std::size_t>(v)]) *
                 std::exp(eps_l(lp_, nodes[a]) * t_) / (1.0L - nodes[a]);
    }
  }

  cxl eval(std::span<const int> is, std::span<const int> il) const override {
    const std::size_t Ms = nodes_small_.size(), Ml = nodes_large_.size();
    const int km = static_cast<int>(is.size());
    const int kp = static_cast<int>(il.size());
    cxl v{1.0L, 0.0L};
    for (int a = 0; a < km; ++a) {
      const std::size_t ia = static_cast<std::size_t>(is[static_cast<std::size_t>(a)]);
      v *= diag_[static_cast<std::size_t>(a)][ia];
      for (int b = a + 1; b < km; ++b)
        v *= fss_[ia * Ms + static_cast<std::size_t>(is[static_cast<std::size_t>(b)])];
      for (int b = 0; b < kp; ++b)
        v *= fsl_[ia * Ml + static_cast<std::size_t>(il[static_cast<std::size_t>(b)])];
    }
    for (int a = 0; a < kp; ++a) {
      const std::size_t ia = static_cast<std::size_t>(il[static_cast<std::size_t>(a)]);
      v *= diag_[static_cast<std::size_t>(km + a)][ia];
      for (int b = a + 1; b < kp; ++b)
        v *= fll_[ia * Ml + static_cast<std::size_t>(il[static_cast<std::size_t>(b)])];
    }
    return v;
  }

 private:
  LP lp_;
  std::vector<std::int64_t> sites_;  // subset, ascending; first k_minus_ small
  int k_minus_;
  std::int64_t x_;
  long double t_;
  std::vector<cxl> fss_, fsl_, fll_;
  std::vector<std::vector<cxl>> diag_;
};

struct TermSpec {
  TermIndex idx;
  double coeff = 0.0;
};

// Shell-by-shell series driver shared by the infinite-start evaluators.
// Shells are k = k_minus + k_plus.  The driver stops once two consecutive
// shells carry absolute mass under a quarter of the tolerance and the
// geometric extrapolation of the last two masses prices the dropped tail
// inside half of it.  Observed decay alone is never trusted: in the
// crossover region a shell can dip far below the envelope and the next one
// rebound orders of magnitude above any ratio fitted to the dip, so the
// only safe stop is after the shells themselves have gone negligible.
SeriesReport run_series(
    int k_start, int kmax, double tol, bool keep_terms,
    const std::function<void(int, std::vector<TermSpec>&)>& shell_terms,
    const std::function<QuadratureResult(const TermIndex&, double)>& integral) {
  if (kmax < 1 || kmax > kMaxVariables)
    throw DomainError("series kmax must lie in 1..12");
  if (k_start > kmax)
    throw DomainError("series needs shells beyond kmax; raise kmax");
  SeriesReport rep;
  detail::NeumaierComplex sum;
  double mass_prev = std::numeric_limits<double>::infinity();
  double mass_last = std::numeric_limits<double>::infinity();
  int quiet = 0;
  std::vector<TermSpec> terms;
  bool stopped = false;
  for (int k = k_start; k <= kmax; ++k) {
    terms.clear();
    shell_terms(k, terms);
    // A shell whose coefficients all vanish identically says nothing about
    // the decay of the series, so it neither feeds the stop rule nor resets
    // it (a tagged particle far into the small-contour block zeroes out
    // every shell below |m|/2).
    if (terms.empty()) continue;
    detail::NeumaierComplex shell;
    double shell_mass = 0.0;  // sum of |coeff * integral|, cancellation-proof
    for (const TermSpec& ts : terms) {
      const double qtol = tol / 16.0 / std::max(1.0, std::fabs(ts.coeff));
      const QuadratureResult qr = integral(ts.idx, qtol);
      const cxl contrib =
          cxl{static_cast<long double>(ts.coeff), 0.0L} *
          cxl{static_cast<long double>(qr.value.real()),
              static_cast<long double>(qr.value.imag())};
      const double term_mag = static_cast<double>(std::abs(contrib));
      // When the tuple cap forbids a second node level the quadrature has no
      // level difference to report; charge the whole computed magnitude as
      // that term's uncertainty instead of poisoning the budget.
      const double term_err = std::isfinite(qr.est_error)
                                  ? std::fabs(ts.coeff) * qr.est_error
                                  : term_mag;
      shell.add(contrib);
      shell_mass += term_mag;
      sum.add(contrib);
      rep.est_error += term_err;
      ++rep.terms;
      if (keep_terms)
        rep.term_log.push_back({ts.idx, ts.coeff, qr.value, term_err,
                                qr.nodes_used, qr.converged});
    }
    rep.shells_used = k;
    mass_prev = mass_last;
    mass_last = shell_mass;
    quiet = shell_mass < 0.25 * tol ? quiet + 1 : 0;
    if (quiet >= 2) {
      const double ratio =
          mass_prev > 0.0 ? std::clamp(mass_last / mass_prev, 0.0, 0.75) : 0.0;
      if (mass_last * ratio / (1.0 - ratio) <= 0.5 * tol) {
        stopped = true;
        break;
      }
    }
  }
  if (std::isfinite(mass_last)) {
    const double ratio = std::isfinite(mass_prev) && mass_prev > 0.0
                             ? std::clamp(mass_last / mass_prev, 0.0, 0.75)
                             : 0.75;
    rep.tail_bound = mass_last * ratio / (1.0 - ratio);
  } else {
    rep.tail_bound = 0.0;  // every shell in range was identically zero
  }
  // The flag reports the achieved error budget, not the per-term targets: a
  // term may stop short of its (deliberately aggressive) share while the
  // accumulated estimate still sits well inside the requested tolerance.
  rep.converged = stopped && rep.est_error + rep.tail_bound <= tol;
  rep.raw_sum = static_cast<double>(sum.total().real());
  rep.im_residual = std::fabs(static_cast<double>(sum.total().imag()));
  rep.value = std::clamp(rep.raw_sum, 0.0, 1.0);
  return rep;
}

void require_time(double t) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
}

int alternating_k_start(std::int64_t m) {
  // The k = 0 shell carries the constant [-1, (m-1)/2], which is 1 for every
  // m < 0; for m > 0 it vanishes and the first shell with a nonzero
  // coefficient is (m+1)/2.
  if (m < 0) return 0;
  return static_cast<int>((m + 1) / 2);
}

}  // namespace

cxl phi_plus(std::span<const cxl> xi_plus, const ModelParams& mp) {
  return phi_plus_impl(lp_of(mp), xi_plus);
}

cxl phi_minus(std::span<const cxl> xi_minus, const ModelParams& mp) {
  return phi_minus_impl(lp_of(mp), xi_minus);
}

cxl kernel_plus(cxl xi, cxl xi_prime, std::int64_t x, double t,
                const ModelParams& mp) {
  return kernel_plus_impl(lp_of(mp), xi, xi_prime, x, t);
}

cxl kernel_minus(cxl xi, cxl xi_prime, std::int64_t x, double t,
                 const ModelParams& mp) {
  return kernel_minus_impl(lp_of(mp), xi, xi_prime, x, t);
}

cxl g_plus(std::span<const cxl> xi_plus, std::int64_t x, double t,
           const ModelParams& mp) {
  const LP lp = lp_of(mp);
  const int k = static_cast<int>(xi_plus.size());
  std::vector<cxl> a(static_cast<std::size_t>(k) * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      a[static_cast<std::size_t>(i) * k + j] = kernel_plus_impl(
          lp, xi_plus[static_cast<std::size_t>(i)],
          xi_plus[static_cast<std::size_t>(j)], x, t);
  cxl v = detail::det_in_place(a, k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      v *= pair_plus_impl(lp, xi_plus[static_cast<std::size_t>(i)],
                          xi_plus[static_cast<std::size_t>(j)]);
  return v;
}

cxl g_minus(std::span<const cxl> xi_minus, std::int64_t x, double t,
            const ModelParams& mp) {
  const LP lp = lp_of(mp);
  const int k = static_cast<int>(xi_minus.size());
  std::vector<cxl> a(static_cast<std::size_t>(k) * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      a[static_cast<std::size_t>(i) * k + j] = kernel_minus_impl(
          lp, xi_minus[static_cast<std::size_t>(i)],
          xi_minus[static_cast<std::size_t>(j)], x, t);
  cxl v = detail::det_in_place(a, k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      v *= pair_minus_impl(lp, xi_minus[static_cast<std::size_t>(i)],
                           xi_minus[static_cast<std::size_t>(j)]);
  return v;
}

double coeff_finite(std::int64_t m, std::span<const std::int64_t> s_minus,
                    std::span<const std::int64_t> s_plus,
                    std::span<const std::int64_t> y_minus,
                    std::span<const std::int64_t> y_plus,
                    const ModelParams& mp) {
  const std::int64_t k_minus = static_cast<std::int64_t>(s_minus.size());
  const std::int64_t k_plus = static_cast<std::int64_t>(s_plus.size());
  const std::int64_t k = k_minus + k_plus;
  std::vector<std::int64_t> rest;  // y_minus with s_minus removed
  std::set_difference(y_minus.begin(), y_minus.end(), s_minus.begin(),
                      s_minus.end(), std::back_inserter(rest));
  const std::int64_t n_rest = static_cast<std::int64_t>(rest.size());
  const double bin = tau_binomial(k - 1, m - n_rest - 1, mp.tau);
  if (bin == 0.0) return 0.0;
  std::vector<std::int64_t> y(y_minus.begin(), y_minus.end());
  y.insert(y.end(), y_plus.begin(), y_plus.end());
  const std::int64_t texp =
      m * (m - 1) / 2 - k_plus * m + sigma_count(s_plus, y) +
      sigma_count(y_minus, rest) -
      m * static_cast<std::int64_t>(y_minus.size()) +
      k_minus * (k_minus + 1) / 2;
  const double sgn = sign_of(m + n_rest);
  return sgn * static_cast<double>(ipow_l(mp.tau, texp) *
                                   ipow_l(mp.q, k * (k - 1) / 2)) *
         bin;
}

double coeff_shifted(std::int64_t m, std::span<const std::int64_t> s_minus,
                     std::span<const std::int64_t> s_plus,
                     std::span<const std::int64_t> y_minus,
                     std::span<const std::int64_t> y_plus,
                     const ModelParams& mp) {
  const std::int64_t k_minus = static_cast<std::int64_t>(s_minus.size());
  const std::int64_t k_plus = static_cast<std::int64_t>(s_plus.size());
  const std::int64_t k = k_minus + k_plus;
  const double bin = tau_binomial(k - 1, m + k_minus - 1, mp.tau);
  if (bin == 0.0) return 0.0;
  std::vector<std::int64_t> rest_minus, rest_plus;
  std::set_difference(y_minus.begin(), y_minus.end(), s_minus.begin(),
                      s_minus.end(), std::back_inserter(rest_minus));
  std::set_difference(y_plus.begin(), y_plus.end(), s_plus.begin(),
                      s_plus.end(), std::back_inserter(rest_plus));
  const std::int64_t texp = sigma_count(s_plus, rest_plus) -
                            sigma_count(rest_minus, s_minus) +
                            m * (m - 1) / 2 + k_plus * (k_plus + 1) / 2 -
                            m * k_plus;
  const double sgn = sign_of(m + k_minus);
  return sgn * static_cast<double>(ipow_l(mp.tau, texp) *
                                   ipow_l(mp.q, k * (k - 1) / 2)) *
         bin;
}

double coeff_alternating(std::int64_t m, int k_minus, int k_plus,
                         const ModelParams& mp) {
  if (m % 2 == 0)
    throw DomainError("alternating start tags odd initial sites only");
  const std::int64_t km = k_minus, kp = k_plus, k = km + kp;
  const double bin = tau_binomial(k - 1, (m - 1) / 2 + km, mp.tau);
  if (bin == 0.0) return 0.0;
  const std::int64_t texp = (m * m - 1) / 8 + k * (k + 1) / 2 - kp * km -
                            (m + 1) / 2 * kp;
  const double sgn = sign_of((m + 1) / 2 + km);
  return sgn * static_cast<double>(ipow_l(mp.tau, texp) *
                                   ipow_l(mp.q, k * (k - 1) / 2)) *
         bin;
}

double coeff_alternating_combined(std::int64_t m, int k_minus, int k_plus,
                                  const ModelParams& mp) {
  if (m % 2 == 0)
    throw DomainError("alternating start tags odd initial sites only");
  const std::int64_t km = k_minus, kp = k_plus, k = km + kp;
  const double bin = tau_binomial(k - 1, (m - 1) / 2 + km, mp.tau);
  if (bin == 0.0) return 0.0;
  const std::int64_t texp = (m * m - 1) / 8 + kp * (kp + 1) / 2 -
                            (m + 1) / 2 * kp;
  const std::int64_t qexp = k * (k + 1) / 2 - km * (km - 1) / 2;
  const std::int64_t pexp = -kp * (kp - 1) / 2;
  const double sgn = sign_of((m + 1) / 2 + kp);
  const long double mag = ipow_l(mp.tau, texp) * ipow_l(mp.q, qexp) *
                          ipow_l(mp.p, pexp) /
                          (factorial_l(k_minus) * factorial_l(k_plus));
  return sgn * static_cast<double>(mag) * bin;
}

double coeff_onesided(std::int64_t m, int k, const ModelParams& mp) {
  const std::int64_t kk = k;
  const double bin = tau_binomial(kk - 1, kk - m, mp.tau);
  if (bin == 0.0) return 0.0;
  const long double mag = ipow_l(mp.tau, (kk - m) * (kk - m + 1) / 2) *
                          ipow_l(mp.q, kk * (kk - 1)) / factorial_l(k);
  return sign_of(m) * static_cast<double>(mag) * bin;
}

SeriesReport prob_finite(std::span<const std::int64_t> sites, std::int64_t m,
                         std::int64_t x, double t, const ContourPlan& plan,
                         const EvalOptions& opts) {
  require_time(t);
  const int n = static_cast<int>(sites.size());
  if (n == 0 || n > kMaxVariables)
    throw DomainError("finite start needs 1..12 sites");
  for (int i = 1; i < n; ++i)
    if (sites[static_cast<std::size_t>(i - 1)] >= sites[static_cast<std::size_t>(i)])
      throw DomainError("finite start sites must be strictly ascending");
  if (m < 1 || m > n)
    throw DomainError("particle index out of range for the finite start");
  int n_minus = opts.split_minus;
  if (n_minus < 0) {
    n_minus = 0;
    while (n_minus < n && sites[static_cast<std::size_t>(n_minus)] < 0) ++n_minus;
  }
  if (n_minus > n)
    throw DomainError("split_minus exceeds the site count");
  const std::vector<std::int64_t> y_minus(sites.begin(), sites.begin() + n_minus);
  const std::vector<std::int64_t> y_plus(sites.begin() + n_minus, sites.end());
  const ModelParams& mp = plan.params;

  SeriesReport rep;
  detail::NeumaierComplex sum;
  bool all_ok = true;
  const double n_subsets = std::pow(2.0, n);
  for (int km = 0; km <= n_minus; ++km) {
    for_each_subset(y_minus, km, [&](std::span<const std::int64_t> sm) {
      const std::vector<std::int64_t> s_minus(sm.begin(), sm.end());
      for (int kp = 0; kp <= n - n_minus; ++kp) {
        for_each_subset(y_plus, kp, [&](std::span<const std::int64_t> sp) {
          const double coeff =
              coeff_finite(m, s_minus, sp, y_minus, y_plus, mp);
          if (coeff == 0.0) return;
          std::vector<std::int64_t> sub(s_minus);
          sub.insert(sub.end(), sp.begin(), sp.end());
          FiniteTermIntegrand f(mp, std::move(sub), km, x, t);
          const double qtol =
              opts.tol / n_subsets / std::max(1.0, std::fabs(coeff));
          const double override_large =
              (km == 0 && x >= kTightRadiusX) ? plan.radius_large_tight : 0.0;
          const QuadratureResult qr =
              integrate_tensor(f, km, kp, plan, qtol, opts.max_nodes, 0.0,
                               override_large);
          all_ok = all_ok && qr.converged;
          const cxl contrib =
              cxl{static_cast<long double>(coeff), 0.0L} *
              cxl{static_cast<long double>(qr.value.real()),
                  static_cast<long double>(qr.value.imag())};
          sum.add(contrib);
          rep.est_error += std::fabs(coeff) * qr.est_error;
          ++rep.terms;
          rep.shells_used = std::max(rep.shells_used, km + kp);
          if (opts.keep_terms)
            rep.term_log.push_back({{km, kp}, coeff, qr.value,
                                    std::fabs(coeff) * qr.est_error,
                                    qr.nodes_used, qr.converged});
        });
      }
    });
  }
  rep.converged = all_ok;
  rep.tail_bound = 0.0;  // the subset sum is exact, no truncation
  rep.raw_sum = static_cast<double>(sum.total().real());
  rep.im_residual = std::fabs(static_cast<double>(sum.total().imag()));
  rep.value = std::clamp(rep.raw_sum, 0.0, 1.0);
  return rep;
}

SeriesReport prob_alternating(std::int64_t m, std::int64_t x, double t,
                              const ContourPlan& plan,
                              const EvalOptions& opts) {
  require_time(t);
  if (m % 2 == 0)
    throw DomainError("alternating start tags odd initial sites only");
  if (((m < 0 ? -m : m) + 1) / 2 > opts.kmax)
    throw DomainError("series needs shells beyond kmax; raise kmax");
  const ModelParams& mp = plan.params;
  return run_series(
      alternating_k_start(m), opts.kmax, opts.tol, opts.keep_terms,
      [&](int k, std::vector<TermSpec>& out) {
        for (int km = 0; km <= k; ++km) {
          const double c = coeff_alternating_combined(m, km, k - km, mp);
          if (c != 0.0) out.push_back({{km, k - km}, c});
        }
      },
      [&](const TermIndex& ti, double qtol) {
        return alternating_sym_integral(mp, ti.k_minus, ti.k_plus, x, t, plan,
                                        qtol, opts.max_nodes);
      });
}

SeriesReport prob_alternating_unsym(std::int64_t m, std::int64_t x, double t,
                                    const ContourPlan& plan,
                                    const EvalOptions& opts) {
  require_time(t);
  if (m % 2 == 0)
    throw DomainError("alternating start tags odd initial sites only");
  if (((m < 0 ? -m : m) + 1) / 2 > opts.kmax)
    throw DomainError("series needs shells beyond kmax; raise kmax");
  const ModelParams& mp = plan.params;
  return run_series(
      alternating_k_start(m), opts.kmax, opts.tol, opts.keep_terms,
      [&](int k, std::vector<TermSpec>& out) {
        for (int km = 0; km <= k; ++km) {
          const double c = coeff_alternating(m, km, k - km, mp);
          if (c != 0.0) out.push_back({{km, k - km}, c});
        }
      },
      [&](const TermIndex& ti, double qtol) {
        AltUnsymIntegrand f(mp, x, t);
        const double override_large =
            (ti.k_minus == 0 && x >= kTightRadiusX) ? plan.radius_large_tight
                                                    : 0.0;
        return integrate_tensor(f, ti.k_minus, ti.k_plus, plan, qtol,
                                opts.max_nodes, 0.0, override_large);
      });
}

SeriesReport prob_onesided(std::int64_t m, std::int64_t x, double t,
                           std::int64_t k0, const ContourPlan& plan,
                           const EvalOptions& opts) {
  require_time(t);
  if (m < 1) throw DomainError("particle index must be at least 1");
  if (k0 > 1)
    throw DomainError("one-sided start needs first site 2 - k0 >= 1");
  const ModelParams& mp = plan.params;
  const LP lp = lp_of(mp);
  const std::int64_t x_eff = x + k0;
  const double radius = x_eff >= kTightRadiusX ? plan.radius_large_tight
                                               : plan.radius_large_pure;
  return run_series(
      static_cast<int>(std::min<std::int64_t>(m, kMaxVariables + 1)),
      opts.kmax, opts.tol, opts.keep_terms,
      [&](int k, std::vector<TermSpec>& out) {
        const double c = coeff_onesided(m, k, mp);
        if (c != 0.0) out.push_back({{0, k}, c});
      },
      [&](const TermIndex& ti, double qtol) {
        return block_sym_integral(
            ti.k_plus, radius, plan.nodes, qtol, opts.max_nodes,
            [&](cxl xi) {
              return pow_int(xi, x_eff) *
                     std::exp(eps_l(lp, xi) * static_cast<long double>(t)) /
                     ((1.0L - xi) * (xi * xi - lp.tau));
            },
            [&](cxl a, cxl b) {
              return f_l(lp, a, b) * f_l(lp, b, a) * pair_plus_impl(lp, a, b);
            });
      });
}

SeriesReport prob_step(std::int64_t m, std::int64_t x, double t,
                       const ContourPlan& plan, const EvalOptions& opts) {
  require_time(t);
  if (m < 1) throw DomainError("particle index must be at least 1");
  const ModelParams& mp = plan.params;
  const LP lp = lp_of(mp);
  const double radius = x >= kTightRadiusX ? plan.radius_large_tight
                                           : plan.radius_large_pure;
  return run_series(
      static_cast<int>(std::min<std::int64_t>(m, kMaxVariables + 1)),
      opts.kmax, opts.tol, opts.keep_terms,
      [&](int k, std::vector<TermSpec>& out) {
        const double c = coeff_onesided(m, k, mp);
        if (c != 0.0) out.push_back({{0, k}, c});
      },
      [&](const TermIndex& ti, double qtol) {
        return block_sym_integral(
            ti.k_plus, radius, plan.nodes, qtol, opts.max_nodes,
            [&](cxl xi) {
              return pow_int(xi, x) *
                     std::exp(eps_l(lp, xi) * static_cast<long double>(t)) /
                     ((1.0L - xi) * (xi - lp.tau));
            },
            [&](cxl a, cxl b) { return f_l(lp, a, b) * f_l(lp, b, a); });
      });
}

double current_tail_prob(std::int64_t m, std::int64_t x, double t,
                         const ContourPlan& plan, const EvalOptions& opts) {
  if (!(plan.params.p < plan.params.q))
    throw DomainError("current tail needs the left-drift regime p < q");
  return prob_step(m, x, t, plan, opts).value;
}

TermRecord alternating_term(std::int64_t m, std::int64_t x, double t,
                            int k_minus, int k_plus, const ContourPlan& plan,
                            double quad_tol, int max_nodes) {
  TermRecord rec;
  rec.idx = {k_minus, k_plus};
  rec.coeff = coeff_alternating_combined(m, k_minus, k_plus, plan.params);
  if (rec.coeff == 0.0) return rec;
  const QuadratureResult qr = alternating_sym_integral(
      plan.params, k_minus, k_plus, x, t, plan, quad_tol, max_nodes);
  rec.integral = qr.value;
  rec.quad_error = std::fabs(rec.coeff) * qr.est_error;
  rec.nodes = qr.nodes_used;
  rec.converged = qr.converged;
  return rec;
}

TermRecord alternating_term_unsym(std::int64_t m, std::int64_t x, double t,
                                  int k_minus, int k_plus,
                                  const ContourPlan& plan, double quad_tol,
                                  int max_nodes) {
  TermRecord rec;
  rec.idx = {k_minus, k_plus};
  rec.coeff = coeff_alternating(m, k_minus, k_plus, plan.params);
  if (rec.coeff == 0.0) return rec;
  AltUnsymIntegrand f(plan.params, x, t);
  const double override_large =
      (k_minus == 0 && x >= kTightRadiusX) ? plan.radius_large_tight : 0.0;
  const QuadratureResult qr = integrate_tensor(
      f, k_minus, k_plus, plan, quad_tol, max_nodes, 0.0, override_large);
  rec.integral = qr.value;
  rec.quad_error = std::fabs(rec.coeff) * qr.est_error;
  rec.nodes = qr.nodes_used;
  rec.converged = qr.converged;
  return rec;
}

SeriesReport eval_cdf(const InitialCondition& ic, const DistributionQuery& q,
                      const ContourPlan& plan, const EvalOptions& opts) {
  EvalOptions o = opts;
  o.kmax = q.kmax;
  o.tol = q.tol;
  switch (ic.kind) {
    case IcKind::FiniteSet:
      return prob_finite(ic.sites, q.m, q.x, q.t, plan, o);
    case IcKind::AlternatingZ:
      return prob_alternating(q.m, q.x, q.t, plan, o);
    case IcKind::OneSidedAlternating:
      return prob_onesided(q.m, q.x, q.t, ic.k0, plan, o);
    case IcKind::StepPositive:
      return prob_step(q.m, q.x, q.t, plan, o);
  }
  throw DomainError("eval_cdf: unknown initial condition kind");
}

}  // namespace asep
