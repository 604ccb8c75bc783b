#pragma once

// Geometry diagnostics for nonnegative recovery: critical-set membership,
// row-space positivity certificates, diagonal condition numbers, exact
// l1 nullspace certification by LP enumeration, randomized robust-NSP
// estimation, and the closed-form stability constants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nncs/bounds.hpp"
#include "nncs/core.hpp"
#include "nncs/lp.hpp"
#include "nncs/random_matrices.hpp"
#include "nncs/rng.hpp"

namespace nncs {

// Indices of the s largest-magnitude entries, ties broken by lowest index;
// returned ascending.
inline std::vector<std::size_t> top_support(const Vec& v, std::size_t s) {
  if (s < 1 || s > v.size()) throw std::invalid_argument("top_support: need 1 <= s <= n");
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
  std::partial_sort(idx.begin(), idx.begin() + s, idx.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(v[a]), mb = std::abs(v[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  idx.resize(s);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Membership in the critical set: unit v whose s strongest coordinates hold
// more l2 mass than (rho/sqrt(s)) times the l1 mass of the rest. The sums
// involved depend only on the magnitude multiset, so the lowest-index tie
// rule used for the support selection does not change the verdict.
inline bool in_T(const Vec& v, double rho, std::size_t s) {
  if (s < 1 || s > v.size()) throw std::invalid_argument("in_T: need 1 <= s <= n");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("in_T: rho outside (0,1)");
  if (std::abs(norm2(v) - 1.0) > 1e-9) throw std::invalid_argument("in_T: v must have unit norm");
  return detail::critical_set_member(v, rho, s);
}

struct MplusCertificate {
  Vec t;
  Vec w;                  // A^T t
  double kappa_w = 0.0;   // max w / min w when w > 0
  bool feasible = false;  // w strictly positive
  double t_norm = 0.0;
  bool within_band = false;  // row-mean certificate only: all w_i in [1/2, 3/2]
};

// Row-space positivity: is there t with A^T t > 0? Solved as the LP
//   min sum(slack)  s.t.  A^T t - slack = 1,  slack >= 0,  t free
// whose feasibility is scale-invariant and equivalent to membership.
inline MplusCertificate check_mplus(const DenseMatrix& A) {
  const std::size_t m = A.rows(), n = A.cols();
  LpProblem prob;
  const std::size_t nv = m + n;  // t, then slack
  prob.objective.assign(nv, 0.0);
  for (std::size_t j = 0; j < n; ++j) prob.objective[m + j] = 1.0;
  prob.eq = DenseMatrix(n, nv);
  prob.rhs.assign(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) prob.eq(j, i) = A(i, j);
    prob.eq(j, m + j) = -1.0;
  }
  prob.lower.assign(nv, 0.0);
  prob.upper.assign(nv, lpdetail::inf);
  for (std::size_t i = 0; i < m; ++i) prob.lower[i] = -lpdetail::inf;

  const LpResult lp = lp_solve(prob);
  MplusCertificate cert;
  if (lp.status == LpStatus::iteration_limit)
    throw std::runtime_error("check_mplus: LP stalled");
  if (lp.status != LpStatus::optimal) return cert;  // infeasible: not in M+
  cert.t.assign(lp.x.begin(), lp.x.begin() + m);
  cert.w = mat_tvec(A, cert.t);
  double wmin = std::numeric_limits<double>::infinity(), wmax = 0.0;
  for (double v : cert.w) {
    wmin = std::min(wmin, v);
    wmax = std::max(wmax, v);
  }
  cert.feasible = wmin > 0.0;
  cert.kappa_w = cert.feasible ? wmax / wmin : std::numeric_limits<double>::infinity();
  cert.t_norm = norm2(cert.t);
  return cert;
}

struct ConditionNumber {
  double kappa = 0.0;
  Vec t;
  bool feasible = false;
};

// Minimal diagonal condition number over positive w = A^T t:
//   min u  s.t.  1 <= A^T t <= u * 1
// The min-entry normalization turns the scale-invariant ratio objective
// into an exact LP; at the optimum min w = 1 and u = max w = kappa.
inline ConditionNumber condition_number(const DenseMatrix& A) {
  const std::size_t m = A.rows(), n = A.cols();
  // variables: t (m, free), u (1, >= 0), s1 (n, >= 0), s2 (n, >= 0)
  const std::size_t nv = m + 1 + 2 * n;
  LpProblem prob;
  prob.objective.assign(nv, 0.0);
  prob.objective[m] = 1.0;
  prob.eq = DenseMatrix(2 * n, nv);
  prob.rhs.assign(2 * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      prob.eq(j, i) = A(i, j);          // A^T t - s1 = 1
      prob.eq(n + j, i) = A(i, j);      // A^T t - u + s2 = 0
    }
    prob.eq(j, m + 1 + j) = -1.0;
    prob.rhs[j] = 1.0;
    prob.eq(n + j, m) = -1.0;
    prob.eq(n + j, m + 1 + n + j) = 1.0;
  }
  prob.lower.assign(nv, 0.0);
  prob.upper.assign(nv, lpdetail::inf);
  for (std::size_t i = 0; i < m; ++i) prob.lower[i] = -lpdetail::inf;

  const LpResult lp = lp_solve(prob);
  ConditionNumber out;
  if (lp.status == LpStatus::iteration_limit)
    throw std::runtime_error("condition_number: LP stalled");
  if (lp.status != LpStatus::optimal) return out;  // infeasible: not in M+
  out.kappa = lp.x[m];
  out.t.assign(lp.x.begin(), lp.x.begin() + m);
  out.feasible = true;
  return out;
}

// Row-mean certificate: w = A^T t with t = (1/(pm)) 1. Reports whether the
// concentration event max w <= 3/2, min w >= 1/2 holds; its failure
// probability is bounded by bernstein_fail_prob. ||t||_2 = 1/(p sqrt(m)).
inline MplusCertificate build_w(const DenseMatrix& A, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("build_w: p outside (0,1]");
  const std::size_t m = A.rows();
  MplusCertificate cert;
  cert.t.assign(m, 1.0 / (p * static_cast<double>(m)));
  cert.w = mat_tvec(A, cert.t);
  double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
  for (double v : cert.w) {
    wmin = std::min(wmin, v);
    wmax = std::max(wmax, v);
  }
  cert.feasible = wmin > 0.0;
  cert.kappa_w = cert.feasible ? wmax / wmin : std::numeric_limits<double>::infinity();
  cert.t_norm = norm2(cert.t);
  cert.within_band = wmax <= 1.5 && wmin >= 0.5;
  return cert;
}

enum class NspMethod { exact_l1_lp, randomized_l2 };
enum class NspStatus { holds, fails, evidence_only };

inline const char* to_string(NspMethod m) {
  return m == NspMethod::exact_l1_lp ? "exact_l1_lp" : "randomized_l2";
}
inline const char* to_string(NspStatus s) {
  switch (s) {
    case NspStatus::holds: return "holds";
    case NspStatus::fails: return "fails";
    case NspStatus::evidence_only: return "evidence_only";
  }
  return "?";
}

struct NspReport {
  std::size_t s = 0;
  double rho = 0.0;          // exact_l1_lp: worst LP optimum; randomized_l2: input rho
  double tau_estimate = 0.0; // randomized_l2: 1/q_hat; exact_l1_lp: 0 (noiseless certificate)
  NspMethod method = NspMethod::exact_l1_lp;
  NspStatus status = NspStatus::evidence_only;
  Vec witness;               // violating v when status = fails (best candidate otherwise)
};

struct L1NspOptions {
  double margin = 1e-7;  // strictness buffer under 1 for LP tolerance
  std::size_t max_n = 14;
  std::size_t max_s = 3;
};

namespace nspdetail {

// LP value of max sigma'v_S subject to Av = 0, sum_{j not in S} w_j <= 1,
// -w_j <= v_j <= w_j. box > 0 additionally clamps |v_j| <= box on S, which
// keeps the LP bounded for witness extraction.
inline LpResult l1_support_lp(const DenseMatrix& A, const std::vector<std::size_t>& support,
                              const std::vector<int>& sign, double box) {
  const std::size_t m = A.rows(), n = A.cols();
  const std::size_t s = support.size();
  std::vector<char> in_support(n, 0);
  for (std::size_t k : support) in_support[k] = 1;
  std::vector<std::size_t> comp;
  comp.reserve(n - s);
  for (std::size_t j = 0; j < n; ++j)
    if (!in_support[j]) comp.push_back(j);

  // variables: v (n, free), w (n-s, >= 0), budget slack (1, >= 0),
  //            pair slacks (2(n-s), >= 0)
  const std::size_t nc = comp.size();
  const std::size_t nv = n + nc + 1 + 2 * nc;
  const std::size_t rows = m + 1 + 2 * nc;
  LpProblem prob;
  prob.objective.assign(nv, 0.0);
  for (std::size_t k = 0; k < s; ++k)
    prob.objective[support[k]] = -static_cast<double>(sign[k]);  // maximize => minimize negative
  prob.eq = DenseMatrix(rows, nv);
  prob.rhs.assign(rows, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) prob.eq(i, j) = A(i, j);
  for (std::size_t c = 0; c < nc; ++c) prob.eq(m, n + c) = 1.0;
  prob.eq(m, n + nc) = 1.0;
  prob.rhs[m] = 1.0;
  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t r1 = m + 1 + 2 * c, r2 = r1 + 1;
    prob.eq(r1, comp[c]) = 1.0;   //  v_j - w_j + u1 = 0
    prob.eq(r1, n + c) = -1.0;
    prob.eq(r1, n + nc + 1 + 2 * c) = 1.0;
    prob.eq(r2, comp[c]) = -1.0;  // -v_j - w_j + u2 = 0
    prob.eq(r2, n + c) = -1.0;
    prob.eq(r2, n + nc + 1 + 2 * c + 1) = 1.0;
  }
  prob.lower.assign(nv, 0.0);
  prob.upper.assign(nv, lpdetail::inf);
  for (std::size_t j = 0; j < n; ++j) {
    prob.lower[j] = -lpdetail::inf;
    if (box > 0.0 && in_support[j]) {
      prob.lower[j] = -box;
      prob.upper[j] = box;
    }
  }
  return lp_solve(prob);
}

}  // namespace nspdetail

// Exact l1 nullspace certification of order s: for every support S of size s
// and every sign pattern, the kernel LP optimum must stay below 1. Certifies
// ||v_S||_1 < ||v_{S^c}||_1 for all kernel vectors (strictness via margin).
inline NspReport check_l1_nsp_exact(const DenseMatrix& A, std::size_t s,
                                    const L1NspOptions& opts = {}) {
  const std::size_t n = A.cols();
  if (s < 1 || s > n) throw std::invalid_argument("check_l1_nsp_exact: need 1 <= s <= n");
  if (n > opts.max_n || s > opts.max_s)
    throw std::invalid_argument("check_l1_nsp_exact: instance exceeds enumeration guard (n <= " +
                                std::to_string(opts.max_n) + ", s <= " +
                                std::to_string(opts.max_s) + ")");

  NspReport report;
  report.s = s;
  report.method = NspMethod::exact_l1_lp;
  report.tau_estimate = 0.0;

  double worst = 0.0;
  Vec worst_witness;

  std::vector<std::size_t> support(s);
  for (std::size_t k = 0; k < s; ++k) support[k] = k;
  const auto advance = [&]() -> bool {  // next lexicographic s-combination of {0..n-1}
    std::size_t k = s;
    while (k-- > 0) {
      if (support[k] < n - s + k) {
        ++support[k];
        for (std::size_t j = k + 1; j < s; ++j) support[j] = support[j - 1] + 1;
        return true;
      }
    }
    return false;
  };

  bool more = true;
  while (more) {
    for (std::uint64_t mask = 0; mask < (1ull << s); ++mask) {
      std::vector<int> sign(s);
      for (std::size_t k = 0; k < s; ++k) sign[k] = (mask >> k) & 1 ? -1 : 1;
      LpResult lp = nspdetail::l1_support_lp(A, support, sign, 0.0);
      double value;
      if (lp.status == LpStatus::unbounded) {
        value = std::numeric_limits<double>::infinity();
        lp = nspdetail::l1_support_lp(A, support, sign, 1e3);  // bounded re-solve for a witness
      } else if (lp.status == LpStatus::optimal) {
        value = -lp.objective;
      } else {
        throw std::runtime_error("check_l1_nsp_exact: LP failed with status " +
                                 std::string(to_string(lp.status)));
      }
      if (value > worst) {
        worst = value;
        worst_witness.assign(lp.x.begin(), lp.x.begin() + n);
      }
    }
    if (std::isinf(worst)) break;  // cannot get worse
    more = advance();
  }

  report.rho = worst;
  if (worst < 1.0 - opts.margin) {
    report.status = NspStatus::holds;
  } else {
    report.status = NspStatus::fails;
    report.witness = std::move(worst_witness);
  }
  return report;
}

struct RobustNspOptions {
  int restarts = 50;
  int steps = 500;
  std::uint64_t seed = 0;
  double penalty = 1e3;          // weight on the squared critical-set violation
  double grid_resolution = 1e-2; // angular step for the n <= 4 exhaustive grid
  bool force_search = false;     // skip the grid even when n <= 4 (cross-checks)
};

namespace nspdetail {

struct SearchState {
  double q = std::numeric_limits<double>::infinity();
  Vec witness;
};

inline void consider(const DenseMatrix& A, const Vec& v, double rho, std::size_t s,
                     SearchState& st) {
  if (!detail::critical_set_member(v, rho, s)) return;
  const double q = norm2(mat_vec(A, v));
  if (q < st.q) {
    st.q = q;
    st.witness = v;
  }
}

inline double search_objective(const DenseMatrix& A, const Vec& v, double rho, std::size_t s,
                               double penalty, const std::vector<std::size_t>& sel) {
  double head2 = 0.0;
  for (std::size_t j : sel) head2 += v[j] * v[j];
  double tail1 = norm1(v);
  for (std::size_t j : sel) tail1 -= std::abs(v[j]);
  const double h = rho / std::sqrt(static_cast<double>(s)) * tail1 - std::sqrt(head2);
  const double base = norm2(mat_vec(A, v));
  const double viol = std::max(0.0, h);
  return base + penalty * viol * viol;
}

}  // namespace nspdetail

// Estimates inf ||Av||_2 over the critical set. For n <= 4 an exhaustive
// hyperspherical grid is swept (resolution-limited certificate, status can
// be holds); otherwise multi-start projected gradient descent on the sphere
// with a penalty for leaving the critical set returns an upper bound q_hat
// on the infimum (status evidence_only). q_hat <= 1e-8 means a near-kernel
// critical direction was found: status fails with that witness.
inline NspReport estimate_robust_nsp(const DenseMatrix& A, double rho, std::size_t s,
                                     const RobustNspOptions& opts = {}) {
  const std::size_t n = A.cols();
  if (s < 1 || s > n) throw std::invalid_argument("estimate_robust_nsp: need 1 <= s <= n");
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("estimate_robust_nsp: rho outside (0,1)");

  NspReport report;
  report.s = s;
  report.rho = rho;
  report.method = NspMethod::randomized_l2;

  nspdetail::SearchState st;
  Vec probe(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {  // coordinate probes catch zero columns
    probe[j] = 1.0;
    nspdetail::consider(A, probe, rho, s, st);
    probe[j] = -1.0;
    nspdetail::consider(A, probe, rho, s, st);
    probe[j] = 0.0;
  }

  const bool use_grid = n <= 4 && !opts.force_search;
  if (use_grid) {
    double res = opts.grid_resolution;
    if (n == 4) res = std::max(res, 0.04);  // keeps the sweep below ~1e6 points
    const double pi = std::numbers::pi;
    Vec v(n, 0.0);
    if (n == 1) {
      // +-1 already probed above
    } else if (n == 2) {
      const long nphi = static_cast<long>(std::ceil(2.0 * pi / res));
      for (long a = 0; a < nphi; ++a) {
        const double phi = 2.0 * pi * static_cast<double>(a) / static_cast<double>(nphi);
        v[0] = std::cos(phi);
        v[1] = std::sin(phi);
        nspdetail::consider(A, v, rho, s, st);
      }
    } else {
      const long nth = static_cast<long>(std::ceil(pi / res)) + 1;
      const long nphi = static_cast<long>(std::ceil(2.0 * pi / res));
      const long nth2 = n == 4 ? nth : 1;
      for (long a = 0; a < nth; ++a) {
        const double t1 = pi * static_cast<double>(a) / static_cast<double>(nth - 1);
        for (long b = 0; b < nth2; ++b) {
          const double t2 = n == 4 ? pi * static_cast<double>(b) / static_cast<double>(nth - 1) : 0.0;
          for (long c = 0; c < nphi; ++c) {
            const double phi = 2.0 * pi * static_cast<double>(c) / static_cast<double>(nphi);
            if (n == 3) {
              v[0] = std::cos(t1);
              v[1] = std::sin(t1) * std::cos(phi);
              v[2] = std::sin(t1) * std::sin(phi);
            } else {
              v[0] = std::cos(t1);
              v[1] = std::sin(t1) * std::cos(t2);
              v[2] = std::sin(t1) * std::sin(t2) * std::cos(phi);
              v[3] = std::sin(t1) * std::sin(t2) * std::sin(phi);
            }
            nspdetail::consider(A, v, rho, s, st);
          }
          if (n == 3) break;  // t2 loop runs once
        }
      }
    }
  } else {
    SeededRng master(opts.seed);
    for (int r = 0; r < opts.restarts; ++r) {
      Vec v(n, 0.0);
      if (static_cast<std::size_t>(r) < n) {
        v[static_cast<std::size_t>(r)] = 1.0;
      } else {
        SeededRng rng = master.child(static_cast<std::uint64_t>(r));
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < s; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
          std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < s; ++i) v[idx[i]] = rng.next_gaussian();
        const double nv = norm2(v);
        if (nv <= 1e-300) continue;
        for (double& x : v) x /= nv;
      }
      nspdetail::consider(A, v, rho, s, st);

      auto sel = top_support(v, s);
      double f = nspdetail::search_objective(A, v, rho, s, opts.penalty, sel);
      for (int step = 0; step < opts.steps; ++step) {
        // gradient of ||Av|| plus the penalty term, in subgradient form
        Vec av = mat_vec(A, v);
        const double nav = norm2(av);
        Vec g(n, 0.0);
        if (nav > 1e-30) {
          Vec atav = mat_tvec(A, av);
          for (std::size_t j = 0; j < n; ++j) g[j] = atav[j] / nav;
        }
        double head2 = 0.0;
        for (std::size_t j : sel) head2 += v[j] * v[j];
        double tail1 = norm1(v);
        for (std::size_t j : sel) tail1 -= std::abs(v[j]);
        const double rs = rho / std::sqrt(static_cast<double>(s));
        const double h = rs * tail1 - std::sqrt(head2);
        if (h > 0.0) {
          std::vector<char> insel(n, 0);
          for (std::size_t j : sel) insel[j] = 1;
          const double hnorm = std::max(std::sqrt(head2), 1e-30);
          for (std::size_t j = 0; j < n; ++j) {
            double gh;
            if (insel[j])
              gh = -v[j] / hnorm;
            else
              gh = rs * (v[j] > 0.0 ? 1.0 : (v[j] < 0.0 ? -1.0 : 0.0));
            g[j] += 2.0 * opts.penalty * h * gh;
          }
        }

        double t = 0.25;
        bool moved = false;
        for (int bt = 0; bt < 30; ++bt) {
          Vec vn(n);
          for (std::size_t j = 0; j < n; ++j) vn[j] = v[j] - t * g[j];
          const double nv = norm2(vn);
          if (nv > 1e-300) {
            for (double& x : vn) x /= nv;
            auto seln = top_support(vn, s);
            const double fn = nspdetail::search_objective(A, vn, rho, s, opts.penalty, seln);
            if (fn < f - 1e-14) {
              v = std::move(vn);
              sel = std::move(seln);
              f = fn;
              moved = true;
              break;
            }
          }
          t *= 0.5;
        }
        nspdetail::consider(A, v, rho, s, st);
        if (!moved) break;
      }
    }
  }

  const double q_hat = st.q;
  report.tau_estimate = q_hat > 0.0 ? 1.0 / q_hat : std::numeric_limits<double>::infinity();
  if (q_hat <= 1e-8) {
    report.status = NspStatus::fails;
  } else {
    report.status = use_grid ? NspStatus::holds : NspStatus::evidence_only;
  }
  report.witness = std::move(st.witness);
  return report;
}

struct ErrorConstants {
  double cprime = 0.0;
  double dprime = 0.0;
};

// Stability constants under a diagonal reweighting with condition number
// kappa: C' = kappa (1 + kappa rho)^2 / (1 - kappa rho),
// D' = ((3 + kappa rho)/(1 - kappa rho)) max{kappa, ||W^{-1}||}.
inline ErrorConstants error_constants(double rho, double kappa, double w_inv_norm) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("error_constants: rho outside (0,1)");
  if (!(kappa >= 1.0)) throw std::invalid_argument("error_constants: kappa must be >= 1");
  if (!(w_inv_norm > 0.0)) throw std::invalid_argument("error_constants: ||W^{-1}|| must be > 0");
  const double kr = kappa * rho;
  if (!(kr < 1.0)) throw std::domain_error("error_constants: kappa*rho must be < 1");
  ErrorConstants out;
  out.cprime = kappa * (1.0 + kr) * (1.0 + kr) / (1.0 - kr);
  out.dprime = (3.0 + kr) / (1.0 - kr) * std::max(kappa, w_inv_norm);
  return out;
}

struct BaselineConstants {
  double c = 0.0;
  double d = 0.0;
};

// Unweighted NSP stability constants C = (1+rho)^2/(1-rho), D = (3+rho)/(1-rho).
inline BaselineConstants baseline_constants(double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("baseline_constants: rho outside (0,1)");
  BaselineConstants out;
  out.c = (1.0 + rho) * (1.0 + rho) / (1.0 - rho);
  out.d = (3.0 + rho) / (1.0 - rho);
  return out;
}

}  // namespace nncs
