#pragma once

// Dense tableau simplex for small linear programs.
//
//   minimize    c'x
//   subject to  E x = b,   lower <= x <= upper   (entries may be +-inf)
//
// General bounds are rewritten into standard form (x >= 0 plus range rows),
// then a phase-1 runs with the artificial cost kept as a separate row and
// compared lexicographically against the real cost (a Big-M objective with
// M treated symbolically). The moment the artificial objective reaches
// zero, remaining basic artificials are pivoted out and phase 2 prices the
// real cost alone. Entering and leaving variables follow Bland's rule with
// exact tie comparisons, so the iteration terminates deterministically.
// Intended for the desk-scale certification problems in this toolkit, not
// for large LPs.

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nncs/core.hpp"

namespace nncs {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "?";
}

struct LpProblem {
  Vec objective;    // c, length n
  DenseMatrix eq;   // E, k x n (k may be 0 via default matrix)
  Vec rhs;          // b, length k
  Vec lower;        // empty means all zeros
  Vec upper;        // empty means all +inf
};

struct LpResult {
  Vec x;                  // empty unless status == optimal
  double objective = 0.0;
  LpStatus status = LpStatus::iteration_limit;
  int pivots = 0;
};

namespace lpdetail {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// How each original variable maps into the standard-form variables.
struct VarMap {
  int kind = 0;          // 0: l + u', 1: u - u', 2: u+ - u-
  double offset = 0.0;   // l or u depending on kind
  std::size_t col = 0;   // first standard column
};

}  // namespace lpdetail

inline LpResult lp_solve(const LpProblem& prob, int max_pivots = 0) {
  using lpdetail::inf;
  const std::size_t n = prob.objective.size();
  const std::size_t k = prob.rhs.size();
  if (n == 0) throw std::invalid_argument("lp_solve: no variables");
  if (k > 0 && (prob.eq.rows() != k || prob.eq.cols() != n))
    throw std::invalid_argument("lp_solve: eq/rhs dimensions disagree with objective");

  Vec lower = prob.lower.empty() ? Vec(n, 0.0) : prob.lower;
  Vec upper = prob.upper.empty() ? Vec(n, inf) : prob.upper;
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("lp_solve: bound vectors have wrong length");

  LpResult out;
  for (std::size_t j = 0; j < n; ++j) {
    if (lower[j] > upper[j]) {
      out.status = LpStatus::infeasible;
      return out;
    }
  }

  // ---- standard form: columns for substituted variables, then range rows
  std::vector<lpdetail::VarMap> vmap(n);
  std::size_t ncols = 0;
  std::size_t nranges = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const bool lf = std::isfinite(lower[j]), uf = std::isfinite(upper[j]);
    if (lf) {
      vmap[j] = {0, lower[j], ncols};
      ncols += 1;
      if (uf) ++nranges;
    } else if (uf) {
      vmap[j] = {1, upper[j], ncols};
      ncols += 1;
    } else {
      vmap[j] = {2, 0.0, ncols};
      ncols += 2;
    }
  }
  const std::size_t nslack = nranges;
  const std::size_t nrows = k + nranges;
  const std::size_t nstruct = ncols + nslack;

  // Dense standard tableau: nrows x nstruct plus rhs, artificials appended.
  std::vector<Vec> A(nrows, Vec(nstruct, 0.0));
  Vec b(nrows, 0.0);
  Vec c(nstruct, 0.0);

  for (std::size_t i = 0; i < k; ++i) b[i] = prob.rhs[i];
  for (std::size_t j = 0; j < n; ++j) {
    const auto& vm = vmap[j];
    for (std::size_t i = 0; i < k; ++i) {
      const double e = prob.eq(i, j);
      if (e == 0.0) continue;
      switch (vm.kind) {
        case 0: A[i][vm.col] += e; b[i] -= e * vm.offset; break;
        case 1: A[i][vm.col] -= e; b[i] -= e * vm.offset; break;
        case 2: A[i][vm.col] += e; A[i][vm.col + 1] -= e; break;
      }
    }
    const double cj = prob.objective[j];
    switch (vm.kind) {
      case 0: c[vm.col] += cj; break;
      case 1: c[vm.col] -= cj; break;
      case 2: c[vm.col] += cj; c[vm.col + 1] -= cj; break;
    }
  }
  {
    std::size_t r = k, sl = ncols;
    for (std::size_t j = 0; j < n; ++j) {
      if (vmap[j].kind == 0 && std::isfinite(upper[j])) {
        A[r][vmap[j].col] = 1.0;
        A[r][sl] = 1.0;
        b[r] = upper[j] - lower[j];
        ++r;
        ++sl;
      }
    }
  }

  for (std::size_t i = 0; i < nrows; ++i) {
    if (b[i] < 0.0) {
      for (double& a : A[i]) a = -a;
      b[i] = -b[i];
    }
  }

  // ---- tableau with one artificial per row; artificials form the basis
  const std::size_t total = nstruct + nrows;
  std::vector<Vec> T(nrows, Vec(total, 0.0));
  for (std::size_t i = 0; i < nrows; ++i) {
    for (std::size_t j = 0; j < nstruct; ++j) T[i][j] = A[i][j];
    T[i][nstruct + i] = 1.0;
  }
  std::vector<std::size_t> basis(nrows);
  for (std::size_t i = 0; i < nrows; ++i) basis[i] = nstruct + i;
  std::vector<char> banned(total, 0);

  // Reduced-cost rows: artificial (phase-1) and real, plus objective values.
  Vec zart(total, 0.0), zreal(total, 0.0);
  double art_obj = 0.0, real_obj = 0.0;
  for (std::size_t j = nstruct; j < total; ++j) zart[j] = 1.0;
  for (std::size_t j = 0; j < nstruct; ++j) zreal[j] = c[j];
  for (std::size_t i = 0; i < nrows; ++i) {
    for (std::size_t j = 0; j < total; ++j) zart[j] -= T[i][j];
    art_obj += b[i];
  }

  const double tol = 1e-9;
  double scale = 1.0;
  for (std::size_t i = 0; i < nrows; ++i) scale = std::max(scale, std::abs(b[i]));
  for (const auto& row : A)
    for (double a : row) scale = std::max(scale, std::abs(a));
  const double enter_tol = tol * scale;
  const double pivot_tol = 1e-10 * scale;

  if (max_pivots <= 0) max_pivots = 1000 + 100 * static_cast<int>(nrows + total);

  const auto do_pivot = [&](std::size_t leave, std::size_t enter) {
    const double piv = T[leave][enter];
    for (double& v : T[leave]) v /= piv;
    b[leave] /= piv;
    for (std::size_t i = 0; i < nrows; ++i) {
      if (i == leave) continue;
      const double f = T[i][enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < total; ++j) T[i][j] -= f * T[leave][j];
      b[i] -= f * b[leave];
      // keep degenerate entries at exactly zero so ratio ties stay exact
      if (b[i] < 0.0 && b[i] > -1e-11 * scale) b[i] = 0.0;
    }
    {
      const double f = zart[enter];
      if (f != 0.0) {
        for (std::size_t j = 0; j < total; ++j) zart[j] -= f * T[leave][j];
        art_obj += f * b[leave];
      }
    }
    {
      const double f = zreal[enter];
      if (f != 0.0) {
        for (std::size_t j = 0; j < total; ++j) zreal[j] -= f * T[leave][j];
        real_obj += f * b[leave];
      }
    }
    if (basis[leave] >= nstruct) banned[basis[leave]] = 1;  // artificials never re-enter
    basis[leave] = enter;
  };

  const double feas_eps = 1e-9 * std::max(1.0, scale);
  bool phase1_done = false;
  int pivots = 0;
  for (;; ++pivots) {
    if (pivots >= max_pivots) {
      out.status = LpStatus::iteration_limit;
      out.pivots = pivots;
      return out;
    }

    // Once the artificial objective reaches zero, phase 1 is over for good:
    // drive any artificial still in the basis out with a degenerate pivot
    // (rows with no structural pivot are redundant and stay inert at zero)
    // and never consult the artificial cost row again. Keeping the composite
    // rule past this point lets rounding noise in that row masquerade as
    // phase-1 improvements and seesaw against the real objective forever.
    if (!phase1_done && art_obj <= feas_eps) {
      for (std::size_t i = 0; i < nrows; ++i) {
        if (basis[i] < nstruct) continue;
        for (std::size_t j = 0; j < nstruct; ++j) {
          if (std::abs(T[i][j]) > pivot_tol) {
            do_pivot(i, j);
            break;
          }
        }
      }
      phase1_done = true;
    }

    // Bland entering: first structural column with negative cost, the
    // artificial cost taking lexicographic priority while phase 1 runs.
    std::size_t enter = total;
    bool phase1_move = false;
    for (std::size_t j = 0; j < nstruct; ++j) {
      if (banned[j]) continue;
      if (phase1_done) {
        if (zreal[j] < -enter_tol) {
          enter = j;
          break;
        }
        continue;
      }
      if (zart[j] < -enter_tol) {
        enter = j;
        phase1_move = true;
        break;
      }
      if (zart[j] <= enter_tol && zreal[j] < -enter_tol) {
        enter = j;
        break;
      }
    }
    if (enter == total) break;  // optimal

    // Ratio test; Bland tie-break on the smallest basic variable index.
    // Ties must be compared exactly: a tolerance window here can prefer a
    // row whose ratio is genuinely larger, which reintroduces cycling on
    // degenerate bases (0/1 designs produce them routinely).
    std::size_t leave = nrows;
    double best = inf;
    for (std::size_t i = 0; i < nrows; ++i) {
      const double a = T[i][enter];
      if (a <= pivot_tol) continue;
      const double ratio = b[i] / a;
      if (leave == nrows || ratio < best || (ratio == best && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave == nrows) {
      out.status = phase1_move ? LpStatus::iteration_limit : LpStatus::unbounded;
      out.pivots = pivots;
      return out;
    }

    do_pivot(leave, enter);
  }

  out.pivots = pivots;
  if (art_obj > 1e-7 * std::max(1.0, scale)) {
    out.status = LpStatus::infeasible;
    return out;
  }

  Vec xstd(nstruct, 0.0);
  for (std::size_t i = 0; i < nrows; ++i)
    if (basis[i] < nstruct) xstd[basis[i]] = b[i];

  Vec x(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& vm = vmap[j];
    switch (vm.kind) {
      case 0: x[j] = vm.offset + xstd[vm.col]; break;
      case 1: x[j] = vm.offset - xstd[vm.col]; break;
      case 2: x[j] = xstd[vm.col] - xstd[vm.col + 1]; break;
    }
  }
  out.x = std::move(x);
  out.objective = dot(prob.objective, out.x);
  out.status = LpStatus::optimal;
  return out;
}

}  // namespace nncs
