#pragma once

// Nonnegative least squares, min ||Ax - y||_2 s.t. x >= 0, by the
// Lawson-Hanson active-set iteration. The passive-set subproblem is re-solved
// from scratch with a Householder QR each time; at desk scale that is cheap
// and avoids downdating bookkeeping.
//
// Stall protection: if an index enters and is ejected again without reducing
// the residual (a floating-point artifact; exact arithmetic excludes it), it
// is excluded from selection until the residual next decreases. Selection
// ties always break toward the lowest index, so runs are deterministic.

#include <cstddef>
#include <vector>

#include "nncs/core.hpp"

namespace nncs {

struct NnlsOptions {
  double tol = -1.0;   // gradient tolerance; < 0 means 1e-10 * ||A'y||_inf
  int max_iter = 0;    // outer iteration cap; <= 0 means 10 * n
};

struct NnlsResult {
  Vec x;
  double residual_norm = 0.0;
  int iterations = 0;
  std::vector<std::size_t> active_set;  // final support {j : x_j > 0}, ascending
  bool converged = false;
};

inline NnlsResult nnls(const DenseMatrix& A, const Vec& y, const NnlsOptions& opts = {}) {
  const std::size_t m = A.rows(), n = A.cols();
  if (y.size() != m) throw std::invalid_argument("nnls: dimension mismatch");
  require_finite(y, "nnls y");

  NnlsResult res;
  res.x.assign(n, 0.0);

  Vec w = mat_tvec(A, y);
  const double tol = opts.tol >= 0.0 ? opts.tol : 1e-10 * norm_inf(w);
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * n);

  std::vector<char> passive(n, 0), banned(n, 0);
  std::vector<std::size_t> pset;  // passive indices, ascending
  Vec r = y;
  double rsq_prev = dot(r, r);

  auto rebuild_pset = [&] {
    pset.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (passive[j]) pset.push_back(j);
  };

  while (res.iterations < max_iter) {
    // Most positive gradient among free, unbanned indices.
    std::size_t enter = n;
    double best = tol;
    for (std::size_t j = 0; j < n; ++j) {
      if (passive[j] || banned[j]) continue;
      if (w[j] > best) {
        best = w[j];
        enter = j;
      }
    }
    if (enter == n) {
      res.converged = true;
      break;
    }
    ++res.iterations;

    passive[enter] = 1;
    rebuild_pset();

    Vec z;
    bool entered_ok = true;
    try {
      z = ls_solve_cols(A, y, pset);
    } catch (const rank_deficient_error&) {
      passive[enter] = 0;
      banned[enter] = 1;
      rebuild_pset();
      continue;
    }

    // Inner loop: pull the iterate back to the feasible set, dropping
    // variables pinned at zero, until the subproblem solution is positive.
    for (;;) {
      bool any_nonpos = false;
      for (double v : z)
        if (v <= 0.0) { any_nonpos = true; break; }
      if (!any_nonpos) break;

      double alpha = 1.0;
      std::size_t drop = pset.size();
      for (std::size_t k = 0; k < pset.size(); ++k) {
        if (z[k] > 0.0) continue;
        const double xk = res.x[pset[k]];
        const double denom = xk - z[k];
        const double ratio = denom > 0.0 ? xk / denom : 0.0;
        if (ratio < alpha) {
          alpha = ratio;
          drop = k;
        }
      }
      if (drop == pset.size()) {  // all z entries zero-ish: drop first nonpositive
        for (std::size_t k = 0; k < pset.size(); ++k)
          if (z[k] <= 0.0) { drop = k; break; }
        alpha = 0.0;
      }

      for (std::size_t k = 0; k < pset.size(); ++k)
        res.x[pset[k]] += alpha * (z[k] - res.x[pset[k]]);

      res.x[pset[drop]] = 0.0;
      passive[pset[drop]] = 0;
      for (std::size_t k = 0; k < pset.size(); ++k) {
        if (k == drop || z[k] > 0.0) continue;
        if (res.x[pset[k]] <= 1e-14 * (1.0 + std::abs(alpha))) {
          res.x[pset[k]] = 0.0;
          passive[pset[k]] = 0;
        }
      }
      rebuild_pset();
      if (pset.empty()) {
        z.clear();
        break;
      }
      z = ls_solve_cols(A, y, pset);  // full-rank: subset of a full-rank set
    }

    for (std::size_t j = 0; j < n; ++j)
      if (!passive[j]) res.x[j] = 0.0;
    for (std::size_t k = 0; k < pset.size(); ++k) res.x[pset[k]] = z[k];

    r = sub(y, mat_vec(A, res.x));
    w = mat_tvec(A, r);
    const double rsq = dot(r, r);
    if (rsq < rsq_prev - 1e-15 * std::max(1.0, rsq_prev)) {
      std::fill(banned.begin(), banned.end(), 0);
      rsq_prev = rsq;
    } else if (!passive[enter]) {
      banned[enter] = 1;  // entered and was ejected with no progress
    }
  }

  res.residual_norm = norm2(sub(y, mat_vec(A, res.x)));
  for (std::size_t j = 0; j < n; ++j)
    if (res.x[j] > 0.0) res.active_set.push_back(j);
  return res;
}

}  // namespace nncs
