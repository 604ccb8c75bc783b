#pragma once

// Closed-form constants and probability bounds for the 0/1-Bernoulli
// recovery analysis, with Monte Carlo estimators that make each formula
// empirically checkable. Every estimator takes (trials, seed) and splits
// work into a fixed number of chunks with derived seeds, so results do not
// depend on the thread count.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "nncs/core.hpp"
#include "nncs/parallel.hpp"
#include "nncs/random_matrices.hpp"
#include "nncs/rng.hpp"

namespace nncs {

struct MCSettings {
  long trials = 100000;
  std::uint64_t seed = 0;
  int jobs = 1;
  double confidence_sigmas = 4.0;
};

namespace detail {

// log(p/(1-p)) / (2p-1), continuously extended through p = 1/2 where the
// ratio tends to 2. The series in d = 2p-1 is 2(1 + d^2/3 + d^4/5 + ...).
inline double logit_slope(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("logit_slope: p outside (0,1)");
  const double d = 2.0 * p - 1.0;
  if (std::abs(d) < 1e-5) {
    const double d2 = d * d;
    return 2.0 * (1.0 + d2 / 3.0 + d2 * d2 / 5.0 + d2 * d2 * d2 / 7.0);
  }
  return std::log(p / (1.0 - p)) / d;
}

inline constexpr std::size_t mc_chunks = 64;

}  // namespace detail

// Subgaussian parameter of the centered Bernoulli(p) variable:
// theta(p) = sqrt((2p-1) / (2 log(p/(1-p)))), extended by continuity to
// theta(0) = theta(1) = 0 and theta(1/2) = 1/2.
inline double theta(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("theta: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return 1.0 / std::sqrt(2.0 * detail::logit_slope(p));
}

struct AlphaBeta {
  double alpha = 0.0;
  double beta = 0.0;
};

// Sampling-rate constants: alpha(p) = (2p-1)/(p^3(1-p)^3 log(p/(1-p))),
// beta(p) = 2p^2 log(p/(1-p))/(2p-1), with the p = 1/2 limits 32 and 1.
inline AlphaBeta alpha_beta(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("alpha_beta: diverges at p in {0,1}");
  const double L = detail::logit_slope(p);
  const double q = 1.0 - p;
  return {1.0 / (L * p * p * p * q * q * q), 2.0 * p * p * L};
}

// m = ceil((C1/rho^2) * alpha(p) * s * (log(e n / s) + beta(p))).
inline long sampling_rate(std::size_t n, std::size_t s, double rho, double p, double c1 = 1.0) {
  if (s < 1 || s > n) throw std::invalid_argument("sampling_rate: need 1 <= s <= n");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("sampling_rate: rho outside (0,1)");
  if (!(c1 > 0.0)) throw std::invalid_argument("sampling_rate: C1 must be positive");
  const AlphaBeta ab = alpha_beta(p);
  const double ln = std::log(std::numbers::e * static_cast<double>(n) / static_cast<double>(s));
  return static_cast<long>(
      std::ceil(c1 / (rho * rho) * ab.alpha * static_cast<double>(s) * (ln + ab.beta)));
}

// Mean-empirical-width bound over s-sparse unit vectors:
// 20 theta(p) sqrt(s (log(e n/s) + p^2/theta(p)^2)).
inline double wm_bound(std::size_t n, std::size_t s, double p) {
  if (s < 1 || s > n) throw std::invalid_argument("wm_bound: need 1 <= s <= n");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("wm_bound: p outside (0,1)");
  const double th = theta(p);
  const double ln = std::log(std::numbers::e * static_cast<double>(n) / static_cast<double>(s));
  return 20.0 * th * std::sqrt(static_cast<double>(s) * (ln + p * p / (th * th)));
}

// Paley-Zygmund tail lower bound: (4/13) p (1-p) (1 - theta^2)^2 on
// Pr[|<a,z>| >= theta sqrt(p(1-p))] for unit z.
inline double q_bound(double p, double theta_arg) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("q_bound: p outside [0,1]");
  if (!(theta_arg >= 0.0 && theta_arg <= 1.0))
    throw std::invalid_argument("q_bound: theta outside [0,1]");
  const double one_minus = 1.0 - theta_arg * theta_arg;
  return (4.0 / 13.0) * p * (1.0 - p) * one_minus * one_minus;
}

namespace detail {

inline void require_unit(const Vec& z, const char* what) {
  const double nz = norm2(z);
  if (std::abs(nz - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(what) + ": z must have unit norm");
}

template <class ChunkFn>
void run_chunks(long trials, int jobs, ChunkFn&& fn) {
  if (trials < 1) throw std::invalid_argument("MC trials must be >= 1");
  const std::size_t chunks = std::min<std::size_t>(mc_chunks, static_cast<std::size_t>(trials));
  const long base = trials / static_cast<long>(chunks);
  const long extra = trials % static_cast<long>(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const long t = base + (static_cast<long>(c) < extra ? 1 : 0);
    fn(c, t);
  });
}

}  // namespace detail

// Empirical Pr[|<a,z>| >= theta_arg * sqrt(p(1-p))] with a ~ Bernoulli(p)^n.
inline double mc_tail(const Vec& z, double p, double theta_arg, const MCSettings& mc) {
  detail::require_unit(z, "mc_tail");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("mc_tail: p outside [0,1]");
  const double cutoff = theta_arg * std::sqrt(p * (1.0 - p));
  std::vector<long> hits(detail::mc_chunks, 0);
  detail::run_chunks(mc.trials, mc.jobs, [&](std::size_t c, long t) {
    SeededRng rng(child_seed(mc.seed, c));
    long h = 0;
    for (long k = 0; k < t; ++k) {
      double acc = 0.0;
      for (double zj : z)
        if (rng.next_bernoulli(p)) acc += zj;
      if (std::abs(acc) >= cutoff) ++h;
    }
    hits[c] = h;
  });
  long total = 0;
  for (long h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(mc.trials);
}

struct QuadFormMoments {
  double mean = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;  // MC only: standard error of the variance estimate
};

// Closed-form moments of S = <a,z>^2 for unit z and a ~ Bernoulli(p)^n:
//   E[S]   = p^2 T^2 + p(1-p),                      T = sum(z)
//   Var(S) = 2 E[S]^2 - 2 p^4 T^4
//            + 4 p^2 (1-p)(1-2p) T sum(z^3)
//            + p(1-p)(1 - 6p(1-p)) sum(z^4)
inline QuadFormMoments var_S_closed(const Vec& z, double p) {
  detail::require_unit(z, "var_S_closed");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("var_S_closed: p outside [0,1]");
  double T = 0.0, z3 = 0.0, z4 = 0.0;
  for (double v : z) {
    T += v;
    z3 += v * v * v;
    z4 += v * v * v * v;
  }
  const double q = 1.0 - p;
  QuadFormMoments out;
  out.mean = p * p * T * T + p * q;
  out.variance = 2.0 * out.mean * out.mean - 2.0 * std::pow(p, 4) * std::pow(T, 4) +
                 4.0 * p * p * q * (1.0 - 2.0 * p) * T * z3 + p * q * (1.0 - 6.0 * p * q) * z4;
  return out;
}

// Empirical moments of S = <a,z>^2 (unbiased variance). The standard error
// of the variance estimate uses the delta-method formula
// Var(s^2) ~ (m4 - var^2 (N-3)/(N-1)) / N with m4 the fourth central moment.
inline QuadFormMoments mc_quadratic_form(const Vec& z, double p, const MCSettings& mc) {
  detail::require_unit(z, "mc_quadratic_form");
  std::vector<std::array<double, 4>> sums(detail::mc_chunks, {0.0, 0.0, 0.0, 0.0});
  detail::run_chunks(mc.trials, mc.jobs, [&](std::size_t c, long t) {
    SeededRng rng(child_seed(mc.seed, c));
    std::array<double, 4> s{0.0, 0.0, 0.0, 0.0};
    for (long k = 0; k < t; ++k) {
      double acc = 0.0;
      for (double zj : z)
        if (rng.next_bernoulli(p)) acc += zj;
      const double S = acc * acc;
      s[0] += S;
      s[1] += S * S;
      s[2] += S * S * S;
      s[3] += S * S * S * S;
    }
    sums[c] = s;
  });
  std::array<double, 4> s{0.0, 0.0, 0.0, 0.0};
  for (std::size_t c = 0; c < detail::mc_chunks; ++c)
    for (int k = 0; k < 4; ++k) s[k] += sums[c][k];
  const double N = static_cast<double>(mc.trials);
  QuadFormMoments out;
  const double m1 = s[0] / N;
  out.mean = m1;
  if (mc.trials > 1) {
    out.variance = (s[1] - N * m1 * m1) / (N - 1.0);
    // central moments from raw power sums
    const double m2 = s[1] / N - m1 * m1;
    const double m4 = s[3] / N - 4.0 * m1 * s[2] / N + 6.0 * m1 * m1 * s[1] / N -
                      3.0 * m1 * m1 * m1 * m1;
    const double v = std::max(0.0, m4 - m2 * m2 * (N - 3.0) / (N - 1.0));
    out.variance_se = std::sqrt(v / N);
  }
  return out;
}

// l2 norm of the s largest-magnitude entries of h. This equals the supremum
// of <h,u> over s-sparse unit vectors u, which is how the width MC computes
// its per-draw supremum exactly.
inline double top_s_l2(const Vec& h, std::size_t s) {
  if (s < 1 || s > h.size()) throw std::invalid_argument("top_s_l2: need 1 <= s <= n");
  Vec mags(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) mags[i] = std::abs(h[i]);
  std::nth_element(mags.begin(), mags.begin() + (s - 1), mags.end(), std::greater<double>());
  double acc = 0.0;
  for (std::size_t i = 0; i < s; ++i) acc += mags[i] * mags[i];
  return std::sqrt(acc);
}

// MC estimate of the mean empirical width over s-sparse unit vectors:
// E[sup <h,u>] with h = (1/sqrt(m)) sum_k eps_k a_k, a_k ~ Bernoulli(p)^n,
// eps_k Rademacher. Per draw the supremum is computed exactly via top_s_l2.
inline double mc_empirical_width(std::size_t n, std::size_t s, double p, std::size_t m,
                                 const MCSettings& mc) {
  if (s < 1 || s > n) throw std::invalid_argument("mc_empirical_width: need 1 <= s <= n");
  if (m < 1) throw std::invalid_argument("mc_empirical_width: m must be positive");
  std::vector<double> sums(detail::mc_chunks, 0.0);
  detail::run_chunks(mc.trials, mc.jobs, [&](std::size_t c, long t) {
    SeededRng rng(child_seed(mc.seed, c));
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    double acc = 0.0;
    Vec h(n), a(n);
    for (long k = 0; k < t; ++k) {
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t row = 0; row < m; ++row) {
        // row entries first, then its Rademacher sign
        for (std::size_t j = 0; j < n; ++j) a[j] = rng.next_bernoulli(p) ? 1.0 : 0.0;
        const double eps = rng.next_bernoulli(0.5) ? 1.0 : -1.0;
        for (std::size_t j = 0; j < n; ++j) h[j] += eps * scale * a[j];
      }
      acc += top_s_l2(h, s);
    }
    sums[c] = acc;
  });
  double total = 0.0;
  for (double v : sums) total += v;
  return total / static_cast<double>(mc.trials);
}

// Failure probability of the row-mean positivity event:
// n exp(-(3/8) p (1-p) m), clamped to [0,1].
inline double bernstein_fail_prob(double p, std::size_t m, std::size_t n) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("bernstein_fail_prob: p outside (0,1)");
  const double v =
      static_cast<double>(n) * std::exp(-(3.0 / 8.0) * p * (1.0 - p) * static_cast<double>(m));
  return std::clamp(v, 0.0, 1.0);
}

struct UnionFailProb {
  double total = 0.0;     // (n+1) e^{-p^2(1-p)^2 m / 72}, clamped
  double nsp_term = 0.0;  // e^{-p^2(1-p)^2 m / 72} alone, clamped
};

inline UnionFailProb union_fail_prob(double p, std::size_t m, std::size_t n) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("union_fail_prob: p outside (0,1)");
  const double q = 1.0 - p;
  const double e = std::exp(-p * p * q * q * static_cast<double>(m) / 72.0);
  UnionFailProb out;
  out.nsp_term = std::clamp(e, 0.0, 1.0);
  out.total = std::clamp(static_cast<double>(n + 1) * e, 0.0, 1.0);
  return out;
}

struct RecoveryErrorCoeff {
  double coeff = 0.0;   // multiplier of ||e||_2 in the recovery bound
  double eprime = 0.0;  // 2 Dprime (1 + C2)
  double tau = 0.0;     // C2 / (sqrt(p(1-p))^3 sqrt(m))
  double t_norm = 0.0;  // 1 / (p sqrt(m))
};

inline RecoveryErrorCoeff recovery_error_coeff(double p, std::size_t m, double c2, double dprime) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("recovery_error_coeff: p outside (0,1)");
  if (m < 1) throw std::invalid_argument("recovery_error_coeff: m must be positive");
  const double pq32 = std::pow(p * (1.0 - p), 1.5);
  const double sm = std::sqrt(static_cast<double>(m));
  RecoveryErrorCoeff out;
  out.eprime = 2.0 * dprime * (1.0 + c2);
  out.coeff = out.eprime / (pq32 * sm);
  out.tau = c2 / (pq32 * sm);
  out.t_norm = 1.0 / (p * sm);
  return out;
}

struct SmallBallCheck {
  double bound = 0.0;  // certified lower bound on inf ||Av||_2 over the critical set
  double empirical_min = std::numeric_limits<double>::infinity();  // MC probe (trials > 0)
};

namespace detail {

// Strict critical-set membership for a unit vector: the s strongest
// coordinates carry more l2 mass than (rho/sqrt(s)) times the l1 mass of the
// rest. Shared with the nsp module via this detail helper.
inline bool critical_set_member(const Vec& v, double rho, std::size_t s) {
  Vec mags(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
  Vec sorted = mags;
  std::nth_element(sorted.begin(), sorted.begin() + (s - 1), sorted.end(), std::greater<double>());
  double head2 = 0.0;
  for (std::size_t i = 0; i < s; ++i) head2 += sorted[i] * sorted[i];
  double tail1 = 0.0;
  for (std::size_t i = s; i < sorted.size(); ++i) tail1 += sorted[i];
  return std::sqrt(head2) > rho / std::sqrt(static_cast<double>(s)) * tail1;
}

}  // namespace detail

// Small-ball lower bound on inf ||Av||_2 over the critical set:
//   xi sqrt(m) Q(2 xi) - xi t_dev - 2 (3/rho) W_m
// with Q evaluated through q_bound at theta = 2 xi / sqrt(p(1-p)) and W_m
// through wm_bound. Defaults (xi <= 0, t_dev < 0) use xi0 = sqrt(p(1-p))/4
// and t0 = (p(1-p)/12) sqrt(m), the choices that make the bound positive at
// sufficiently large sampling rates. When trials > 0 the returned struct
// also carries an empirical minimum of ||Av||_2 over random critical-set
// members for a matrix sampled from the given ensemble.
inline SmallBallCheck mc_small_ball_rhs(const EnsembleSpec& spec, double rho, std::size_t s,
                                        double xi, double t_dev, const MCSettings& mc) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("mc_small_ball_rhs: rho outside (0,1)");
  if (s < 1 || s > spec.n) throw std::invalid_argument("mc_small_ball_rhs: need 1 <= s <= n");
  const double p = spec.kind == EnsembleKind::bernoulli01 ? spec.p : 0.5;
  const double pq = p * (1.0 - p);
  if (!(pq > 0.0)) throw std::invalid_argument("mc_small_ball_rhs: degenerate p");
  const double md = static_cast<double>(spec.m);
  if (xi <= 0.0) xi = 0.25 * std::sqrt(pq);
  if (t_dev < 0.0) t_dev = pq / 12.0 * std::sqrt(md);

  const double th = std::clamp(2.0 * xi / std::sqrt(pq), 0.0, 1.0);
  SmallBallCheck out;
  out.bound = xi * std::sqrt(md) * q_bound(p, th) - xi * t_dev -
              2.0 * (3.0 / rho) * wm_bound(spec.n, s, p);

  if (mc.trials > 0) {
    const DenseMatrix A = generate(spec);
    std::vector<double> mins(detail::mc_chunks, std::numeric_limits<double>::infinity());
    detail::run_chunks(mc.trials, mc.jobs, [&](std::size_t c, long t) {
      SeededRng rng(child_seed(child_seed(mc.seed, 0x6d696e), c));
      double best = std::numeric_limits<double>::infinity();
      for (long k = 0; k < t; ++k) {
        Vec v(spec.n, 0.0);
        if (k % 2 == 0) {
          // s-sparse unit vector: always in the critical set
          std::vector<std::size_t> idx(spec.n);
          for (std::size_t i = 0; i < spec.n; ++i) idx[i] = i;
          for (std::size_t i = 0; i < s; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(spec.n - i));
            std::swap(idx[i], idx[j]);
          }
          for (std::size_t i = 0; i < s; ++i) v[idx[i]] = rng.next_gaussian();
        } else {
          for (double& vj : v) vj = rng.next_gaussian();
        }
        const double nv = norm2(v);
        if (nv <= 1e-300) continue;
        for (double& vj : v) vj /= nv;
        if (!detail::critical_set_member(v, rho, s)) continue;
        best = std::min(best, norm2(mat_vec(A, v)));
      }
      mins[c] = best;
    });
    for (double v : mins) out.empirical_min = std::min(out.empirical_min, v);
  }
  return out;
}

// Every closed-form quantity a report needs, assembled in one struct.
struct BoundSet {
  double p = 0.5;
  std::size_t n = 0, m = 0, s = 0;
  double rho = 0.5;
  double c1 = 1.0, c2 = 1.0;
  double theta = 0.0;
  double alpha = 0.0, beta = 0.0;
  long m_required = 0;
  double wm = 0.0;
  double q_lower = 0.0;          // tail bound at the default theta = 1/2 choice
  double small_ball = 0.0;       // certified lower bound on inf ||Av||_2
  double nsp_fail_prob = 0.0;    // e^{-p^2(1-p)^2 m/72}
  double bernstein_fail = 0.0;   // n e^{-(3/8)p(1-p)m}
  double union_fail = 0.0;       // (n+1) e^{-p^2(1-p)^2 m/72}
  double tau = 0.0;
  double t_norm = 0.0;
  double err_coeff = 0.0;        // with Dprime built from kappa bound 3 and rho
  bool err_coeff_valid = false;  // requires 3*rho < 1
  // The common p = 1/2 shortcut forms disagree with direct substitution
  // into the general sampling rate; both are reported.
  long simplified_m_required = 0;
  double simplified_tau = 0.0;
  bool simplified_matches_general = false;
};

inline BoundSet evaluate_bounds(std::size_t n, std::size_t m, std::size_t s, double p, double rho,
                                double c1 = 1.0, double c2 = 1.0) {
  BoundSet b;
  b.p = p;
  b.n = n;
  b.m = m;
  b.s = s;
  b.rho = rho;
  b.c1 = c1;
  b.c2 = c2;
  b.theta = theta(p);
  const AlphaBeta ab = alpha_beta(p);
  b.alpha = ab.alpha;
  b.beta = ab.beta;
  b.m_required = sampling_rate(n, s, rho, p, c1);
  b.wm = wm_bound(n, s, p);
  b.q_lower = q_bound(p, 0.5);
  EnsembleSpec spec{EnsembleKind::bernoulli01, m, n, p, 0};
  MCSettings no_mc;
  no_mc.trials = 0;
  b.small_ball = mc_small_ball_rhs(spec, rho, s, -1.0, -1.0, no_mc).bound;
  const UnionFailProb uf = union_fail_prob(p, m, n);
  b.nsp_fail_prob = uf.nsp_term;
  b.union_fail = uf.total;
  b.bernstein_fail = bernstein_fail_prob(p, m, n);
  // Error coefficient with the row-mean conditioning bound kappa <= 3.
  const double kappa = 3.0;
  if (kappa * rho < 1.0) {
    const double dprime = (3.0 + kappa * rho) / (1.0 - kappa * rho) * kappa;
    const RecoveryErrorCoeff rc = recovery_error_coeff(p, m, c2, dprime);
    b.err_coeff = rc.coeff;
    b.tau = rc.tau;
    b.t_norm = rc.t_norm;
    b.err_coeff_valid = true;
  } else {
    const RecoveryErrorCoeff rc = recovery_error_coeff(p, m, c2, 0.0);
    b.tau = rc.tau;
    b.t_norm = rc.t_norm;
  }
  b.simplified_m_required = static_cast<long>(
      std::ceil(c1 / (128.0 * rho * rho) * static_cast<double>(s) * std::log(static_cast<double>(n))));
  b.simplified_tau = c2 / (8.0 * std::sqrt(static_cast<double>(m)));
  b.simplified_matches_general =
      b.simplified_m_required == b.m_required && std::abs(b.simplified_tau - b.tau) <= 1e-12;
  return b;
}

}  // namespace nncs
