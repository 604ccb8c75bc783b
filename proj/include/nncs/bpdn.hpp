#pragma once

// Basis-pursuit denoising:
//
//   bpdn:    min ||x||_1      s.t. ||Ax - y||_2 <= eta
//   bpdn_nn: min sum(x)       s.t. ||Ax - y||_2 <= eta,  x >= 0
//
// Solved through the Lagrangian path: for a penalty weight lam the
// unconstrained problem 0.5||Ax-y||^2 + lam*phi(x) is solved by proximal
// gradient descent with Barzilai-Borwein steps and a nonmonotone safeguard;
// the weight is then driven by bracketing plus bisection on log(lam) until
// the residual matches eta within feas_tol. The residual of the path optimum
// is continuous and nondecreasing in lam, which makes the bisection safe.
// A final support polish (least squares on the detected support) sharpens
// solutions when eta is at or near zero.
//
// Infeasible targets (eta below the minimal attainable residual) are flagged
// in the result, not thrown.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "nncs/core.hpp"
#include "nncs/nnls.hpp"

namespace nncs {

struct BpdnOptions {
  double feas_tol = -1.0;   // residual band half-width; < 0 means 1e-6*max(1,||y||)
  double opt_tol = 1e-8;    // inner stationarity tolerance, relative
  int max_inner = 50000;    // proximal iterations per penalty solve
  int max_bisect = 60;      // bisection steps on the penalty weight
};

struct BpdnResult {
  Vec x;
  double objective = 0.0;             // ||x||_1 at the solution
  double residual_norm = 0.0;         // ||Ax - y||_2
  double constraint_slack = 0.0;      // eta - residual_norm
  double duality_gap_estimate = 0.0;
  int iterations = 0;                 // total inner proximal iterations
  bool converged = false;
  bool infeasible = false;
};

namespace bpdetail {

inline double shrink(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Largest eigenvalue of A'A by power iteration (deterministic start).
inline double gram_spectral_norm(const DenseMatrix& A) {
  const std::size_t n = A.cols();
  Vec v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = 1.0 + 1e-3 * static_cast<double>(j % 7);
  double lam = 0.0;
  for (int it = 0; it < 60; ++it) {
    Vec w = mat_tvec(A, mat_vec(A, v));
    const double nw = norm2(w);
    if (nw <= 1e-300) return 0.0;
    for (std::size_t j = 0; j < n; ++j) v[j] = w[j] / nw;
    lam = nw;
  }
  return lam;
}

// min over x of 0.5||Ax-y||^2 + lam*||x||_1  (nonneg: + lam*sum(x), x >= 0).
// Warm-starts from x. Returns iterations used; sets *stationary.
inline int penalized_solve(const DenseMatrix& A, const Vec& y, double lam, bool nonneg, double L,
                           double stop_tol, int max_inner, Vec& x, bool* stationary) {
  const std::size_t n = A.cols();
  const double t_base = 1.0 / std::max(L, 1e-300);

  Vec r = sub(mat_vec(A, x), y);
  Vec g = mat_tvec(A, r);
  auto fval = [&](const Vec& rr, const Vec& xx) {
    double l1 = 0.0;
    for (double v : xx) l1 += std::abs(v);
    return 0.5 * dot(rr, rr) + lam * l1;
  };
  double F = fval(r, x);
  std::vector<double> recent(10, F);
  std::size_t ring = 0;

  double t = t_base;
  *stationary = false;
  int it = 0;
  for (; it < max_inner; ++it) {
    Vec xn(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (nonneg)
        xn[j] = std::max(0.0, x[j] - t * (g[j] + lam));
      else
        xn[j] = shrink(x[j] - t * g[j], t * lam);
    }

    double step_inf = 0.0;
    for (std::size_t j = 0; j < n; ++j) step_inf = std::max(step_inf, std::abs(xn[j] - x[j]));
    if (step_inf / t <= stop_tol) {
      *stationary = true;
      break;
    }

    Vec rn = sub(mat_vec(A, xn), y);
    double Fn = fval(rn, xn);
    const double Fmax = *std::max_element(recent.begin(), recent.end());
    if (Fn > Fmax + 1e-12 * (1.0 + std::abs(Fmax)) && t != t_base) {
      // Safeguard: redo with the majorization step, which cannot increase F.
      t = t_base;
      for (std::size_t j = 0; j < n; ++j) {
        if (nonneg)
          xn[j] = std::max(0.0, x[j] - t * (g[j] + lam));
        else
          xn[j] = shrink(x[j] - t * g[j], t * lam);
      }
      rn = sub(mat_vec(A, xn), y);
      Fn = fval(rn, xn);
    }

    Vec gn = mat_tvec(A, rn);
    double dxdx = 0.0, dxdg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = xn[j] - x[j];
      dxdx += dx * dx;
      dxdg += dx * (gn[j] - g[j]);
    }
    t = (dxdg > 1e-300) ? std::clamp(dxdx / dxdg, 0.1 * t_base, 1e4 * t_base) : 1e4 * t_base;

    x = std::move(xn);
    r = std::move(rn);
    g = std::move(gn);
    F = Fn;
    recent[ring] = F;
    ring = (ring + 1) % recent.size();
  }
  return it;
}

inline BpdnResult solve(const DenseMatrix& A, const Vec& y, double eta, bool nonneg,
                        const BpdnOptions& opts) {
  const std::size_t m = A.rows(), n = A.cols();
  if (y.size() != m) throw std::invalid_argument("bpdn: dimension mismatch");
  if (eta < 0.0 || !std::isfinite(eta)) throw std::invalid_argument("bpdn: eta must be >= 0");
  require_finite(y, "bpdn y");

  BpdnResult res;
  res.x.assign(n, 0.0);

  const double ynorm = norm2(y);
  const double feas_tol = opts.feas_tol >= 0.0 ? opts.feas_tol : 1e-6 * std::max(1.0, ynorm);

  if (ynorm <= eta + feas_tol) {  // zero is feasible, hence optimal
    res.residual_norm = ynorm;
    res.constraint_slack = eta - ynorm;
    res.converged = true;
    return res;
  }

  Vec g0 = mat_tvec(A, y);
  double lam_max = 0.0;
  if (nonneg) {
    for (double v : g0) lam_max = std::max(lam_max, v);
  } else {
    lam_max = norm_inf(g0);
  }
  if (lam_max <= 0.0) {
    // x = 0 already minimizes the residual over the feasible cone.
    res.residual_norm = ynorm;
    res.constraint_slack = eta - ynorm;
    res.infeasible = true;
    res.converged = true;
    return res;
  }

  const double L = std::max(gram_spectral_norm(A) * 1.05, 1e-300);
  const double stop_tol = opts.opt_tol * std::max(1.0, norm_inf(g0));

  Vec x(n, 0.0);
  bool stationary = true;
  bool all_stationary = true;
  auto eval = [&](double lam) {
    res.iterations +=
        penalized_solve(A, y, lam, nonneg, L, stop_tol, opts.max_inner, x, &stationary);
    all_stationary = all_stationary && stationary;
    return norm2(sub(mat_vec(A, x), y));
  };

  double lam = lam_max;
  double r_cur = ynorm;  // residual at x = 0
  double lam_final = lam_max;
  bool in_band = false;
  double lam_hi = lam_max;
  bool have_bracket = false;

  const double lam_floor = lam_max * 1e-17;
  while (true) {
    if (std::abs(r_cur - eta) <= feas_tol) {
      in_band = true;
      lam_final = lam;
      break;
    }
    if (r_cur < eta) {  // crossed below the band: bracket found
      have_bracket = true;
      break;
    }
    if (lam <= lam_floor) break;  // residual cannot be pushed down to eta
    lam_hi = lam;
    lam = std::max(lam / 8.0, lam_floor);
    r_cur = eval(lam);
  }

  if (!in_band && have_bracket) {
    double lo = lam, hi = lam_hi;  // r(lo) < eta - feas_tol < eta + feas_tol < r(hi)
    for (int k = 0; k < opts.max_bisect; ++k) {
      const double mid = std::sqrt(lo * hi);
      const double r_mid = eval(mid);
      if (std::abs(r_mid - eta) <= feas_tol) {
        in_band = true;
        lam_final = mid;
        r_cur = r_mid;
        break;
      }
      if (r_mid > eta)
        hi = mid;
      else
        lo = mid;
    }
    if (!in_band) {
      lam_final = lo;
      r_cur = eval(lo);  // end on the feasible side
    }
  } else if (!in_band) {
    lam_final = lam;
    res.infeasible = r_cur > eta + feas_tol;
  }

  // Support polish: least squares on the detected support, accepted only if
  // it stays feasible and does not grow the l1 objective.  0/1 designs throw
  // up rank-deficient supports routinely, so shed the weakest columns until
  // the restricted solve goes through.
  {
    const double xmax = norm_inf(x);
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(x[j]) > 1e-9 * xmax) support.push_back(j);
    std::sort(support.begin(), support.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(x[a]) > std::abs(x[b]);
    });
    if (support.size() > m) support.resize(m);
    while (!support.empty()) {
      bool accepted = false;
      try {
        Vec z = ls_solve_cols(A, y, support);
        bool ok = true;
        if (nonneg) {
          for (double v : z)
            if (v < 0.0) { ok = false; break; }
        }
        if (ok) {
          Vec cand(n, 0.0);
          for (std::size_t k = 0; k < support.size(); ++k) cand[support[k]] = z[k];
          const double r_cand = norm2(sub(mat_vec(A, cand), y));
          const double l1_cand = norm1(cand), l1_cur = norm1(x);
          // Inside the band the polish must not grow the objective; outside
          // it, feasibility comes first and any residual drop is progress.
          const bool accept = r_cur > eta + feas_tol
                                  ? r_cand < r_cur
                                  : r_cand <= eta + feas_tol &&
                                        l1_cand <= l1_cur + 1e-12 * (1.0 + l1_cur);
          if (accept) {
            x = std::move(cand);
            r_cur = r_cand;
            if (std::abs(r_cur - eta) <= feas_tol || r_cur <= eta) in_band = true;
            accepted = true;
          }
        }
      } catch (const rank_deficient_error&) {
        // fall through and retry on a smaller support
      }
      if (accepted) break;
      support.pop_back();
    }
  }

  // The polish can land in the band after a provisional infeasible verdict.
  if (res.infeasible && r_cur <= eta + feas_tol) res.infeasible = false;

  res.x = x;
  res.objective = norm1(res.x);
  res.residual_norm = r_cur;
  res.constraint_slack = eta - r_cur;
  res.converged = (in_band || std::abs(r_cur - eta) <= feas_tol) && all_stationary;
  if (res.infeasible) res.converged = all_stationary;

  // Duality estimate: scale the residual into the dual-feasible region.
  {
    Vec r = sub(y, mat_vec(A, res.x));
    Vec atr = mat_tvec(A, r);
    double viol = 0.0;
    if (nonneg) {
      for (double v : atr) viol = std::max(viol, v);
    } else {
      viol = norm_inf(atr);
    }
    const double den = std::max(lam_final, viol);
    if (den > 0.0) {
      const double s = 1.0 / den;
      const double dual = s * dot(y, r) - eta * s * norm2(r);
      res.duality_gap_estimate = std::max(0.0, res.objective - dual);
    } else {
      res.duality_gap_estimate = 0.0;
    }
  }
  return res;
}

}  // namespace bpdetail

inline BpdnResult bpdn(const DenseMatrix& A, const Vec& y, double eta,
                       const BpdnOptions& opts = {}) {
  return bpdetail::solve(A, y, eta, /*nonneg=*/false, opts);
}

inline BpdnResult bpdn_nn(const DenseMatrix& A, const Vec& y, double eta,
                          const BpdnOptions& opts = {}) {
  return bpdetail::solve(A, y, eta, /*nonneg=*/true, opts);
}

// Nonnegative squared-l1 regularization:
//
//   min_{z >= 0} (sum z)^2 + lambda^2 ||Az - y||_2^2
//
// which is exactly nonnegative least squares on the augmented system
// [ones-row; lambda*A] against [0; lambda*y].
inline NnlsResult l1sq_nnreg(const DenseMatrix& A, const Vec& y, double lambda,
                             const NnlsOptions& opts = {}) {
  const std::size_t m = A.rows(), n = A.cols();
  if (y.size() != m) throw std::invalid_argument("l1sq_nnreg: dimension mismatch");
  if (lambda <= 0.0 || !std::isfinite(lambda))
    throw std::invalid_argument("l1sq_nnreg: lambda must be positive");
  DenseMatrix Aug(m + 1, n);
  Vec yaug(m + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    Aug(0, j) = 1.0;
    for (std::size_t i = 0; i < m; ++i) Aug(i + 1, j) = lambda * A(i, j);
  }
  for (std::size_t i = 0; i < m; ++i) yaug[i + 1] = lambda * y[i];
  return nnls(Aug, yaug, opts);  // residual/objective are for the augmented system
}

}  // namespace nncs
