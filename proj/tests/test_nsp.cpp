#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "nncs/nsp.hpp"
#include "nncs/random_matrices.hpp"

using namespace nncs;
using Catch::Approx;

namespace {

Vec random_unit(std::size_t n, SeededRng& rng) {
  Vec v(n);
  double nv = 0.0;
  do {
    for (double& x : v) x = rng.next_gaussian();
    nv = norm2(v);
  } while (nv < 1e-12);
  for (double& x : v) x /= nv;
  return v;
}

Vec sparse_signed_unit(std::size_t n, std::size_t s, std::uint64_t seed) {
  Vec v = sparse_nonneg_signal(n, s, seed);
  SeededRng rng(child_seed(seed, 17));
  for (double& x : v)
    if (x > 0.0 && rng.next_bernoulli(0.5)) x = -x;
  const double nv = norm2(v);
  for (double& x : v) x /= nv;
  return v;
}

// Gram-Schmidt basis of the row space; used to sample kernel vectors.
std::vector<Vec> row_space_basis(const DenseMatrix& A) {
  std::vector<Vec> basis;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    Vec r(A.cols());
    for (std::size_t j = 0; j < A.cols(); ++j) r[j] = A(i, j);
    for (const Vec& b : basis) {
      const double c = dot(r, b);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] -= c * b[j];
    }
    const double nr = norm2(r);
    if (nr > 1e-10) {
      for (double& x : r) x /= nr;
      basis.push_back(std::move(r));
    }
  }
  return basis;
}

Vec kernel_sample(const std::vector<Vec>& basis, std::size_t n, SeededRng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.next_gaussian();
  for (const Vec& b : basis) {
    const double c = dot(v, b);
    for (std::size_t j = 0; j < n; ++j) v[j] -= c * b[j];
  }
  return v;
}

}  // namespace

TEST_CASE("top support picks the largest magnitudes, lowest index on ties") {
  const Vec v{1.0, -2.0, 2.0, 0.5};
  REQUIRE(top_support(v, 1) == std::vector<std::size_t>{1});
  REQUIRE(top_support(v, 2) == std::vector<std::size_t>{1, 2});
  REQUIRE(top_support(v, 3) == std::vector<std::size_t>{0, 1, 2});
  REQUIRE(top_support(v, 4) == std::vector<std::size_t>{0, 1, 2, 3});
  REQUIRE_THROWS_AS(top_support(v, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(top_support(v, 5), std::invalid_argument);
}

TEST_CASE("critical set membership on hand instances") {
  Vec e1(5, 0.0);
  e1[0] = 1.0;
  for (double rho : {0.1, 0.5, 0.9})
    for (std::size_t s : {1u, 2u, 3u}) REQUIRE(in_T(e1, rho, s));

  Vec flat(100, 0.1);  // unit norm, maximally spread
  REQUIRE_FALSE(in_T(flat, 0.9, 1));
  REQUIRE(in_T(flat, 0.9, 100));  // whole support: empty tail

  REQUIRE_THROWS_AS(in_T(Vec{0.5, 0.5}, 0.5, 1), std::invalid_argument);  // not unit
  REQUIRE_THROWS_AS(in_T(e1, 0.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(in_T(e1, 1.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(in_T(e1, 0.5, 0), std::invalid_argument);
}

TEST_CASE("sparse unit vectors always sit in the critical set") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t s = 1 + seed % 4;
    const Vec v = sparse_signed_unit(12, s, seed);
    for (double rho : {0.1, 0.5, 0.99}) REQUIRE(in_T(v, rho, s));
  }
}

TEST_CASE("membership verdict matches an independent evaluation") {
  SeededRng rng(314);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.next_below(10);
    const std::size_t s = 1 + rng.next_below(n);
    const double rho = 0.05 + 0.9 * rng.next_double();
    const Vec v = random_unit(n, rng);

    Vec mags(n);
    for (std::size_t j = 0; j < n; ++j) mags[j] = std::abs(v[j]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    double head2 = 0.0, tail1 = 0.0;
    for (std::size_t j = 0; j < s; ++j) head2 += mags[j] * mags[j];
    for (std::size_t j = s; j < n; ++j) tail1 += mags[j];
    const bool expect = std::sqrt(head2) > rho / std::sqrt(static_cast<double>(s)) * tail1;
    REQUIRE(in_T(v, rho, s) == expect);
  }
}

TEST_CASE("row-space positivity via linear programming") {
  SECTION("strictly positive row makes it feasible") {
    SeededRng rng(21);
    DenseMatrix A(3, 4);
    for (double& v : A.data()) v = rng.next_gaussian();
    for (std::size_t j = 0; j < 4; ++j) A(0, j) = 0.5 + rng.next_double();
    const MplusCertificate cert = check_mplus(A);
    REQUIRE(cert.feasible);
    for (double w : cert.w) REQUIRE(w > 0.0);
    REQUIRE(cert.kappa_w >= 1.0);
    REQUIRE(cert.t_norm > 0.0);
    REQUIRE(cert.w == mat_tvec(A, cert.t));
  }

  SECTION("opposite-sign pair is infeasible") {
    DenseMatrix A(1, 2);
    A(0, 0) = 1.0;
    A(0, 1) = -1.0;
    const MplusCertificate cert = check_mplus(A);
    REQUIRE_FALSE(cert.feasible);
    REQUIRE(cert.t.empty());
  }

  SECTION("bernoulli matrices are essentially always feasible") {
    int lp_ok = 0, mean_ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const DenseMatrix A = bernoulli01_matrix(50, 20, 0.5, 9000 + seed);
      if (check_mplus(A).feasible) ++lp_ok;
      if (build_w(A, 0.5).feasible) ++mean_ok;
    }
    REQUIRE(lp_ok == 100);
    REQUIRE(mean_ok >= 99);
  }
}

TEST_CASE("condition number on closed-form instances") {
  const ConditionNumber id = condition_number(DenseMatrix::identity(4));
  REQUIRE(id.feasible);
  REQUIRE(id.kappa == Approx(1.0).margin(1e-9));

  DenseMatrix ones(1, 5);
  for (std::size_t j = 0; j < 5; ++j) ones(0, j) = 1.0;
  const ConditionNumber flat = condition_number(ones);
  REQUIRE(flat.feasible);
  REQUIRE(flat.kappa == Approx(1.0).margin(1e-9));

  DenseMatrix bad(1, 2);
  bad(0, 0) = 1.0;
  bad(0, 1) = -1.0;
  REQUIRE_FALSE(condition_number(bad).feasible);
}

TEST_CASE("condition number matches a sphere grid search") {
  SeededRng rng(55);
  DenseMatrix A(5, 4);
  for (double& v : A.data()) v = rng.next_gaussian();
  for (std::size_t j = 0; j < 4; ++j) A(0, j) = 0.5 + rng.next_double();

  const ConditionNumber lp = condition_number(A);
  REQUIRE(lp.feasible);
  {
    const Vec w = mat_tvec(A, lp.t);
    double wmin = w[0], wmax = w[0];
    for (double v : w) {
      wmin = std::min(wmin, v);
      wmax = std::max(wmax, v);
    }
    REQUIRE(wmin == Approx(1.0).margin(1e-7));  // min-entry normalization at the optimum
    REQUIRE(wmax == Approx(lp.kappa).margin(1e-7));
  }

  // dense sweep over unit t in R^5 by hyperspherical angles
  const double res = 0.3;
  const double pi = std::numbers::pi;
  const long nth = static_cast<long>(std::ceil(pi / res)) + 1;
  const long nphi = static_cast<long>(std::ceil(2.0 * pi / res));
  double best = std::numeric_limits<double>::infinity();
  Vec t(5);
  for (long a = 0; a < nth; ++a) {
    const double t1 = pi * a / static_cast<double>(nth - 1);
    for (long b = 0; b < nth; ++b) {
      const double t2 = pi * b / static_cast<double>(nth - 1);
      for (long c = 0; c < nth; ++c) {
        const double t3 = pi * c / static_cast<double>(nth - 1);
        for (long d = 0; d < nphi; ++d) {
          const double phi = 2.0 * pi * d / static_cast<double>(nphi);
          t[0] = std::cos(t1);
          t[1] = std::sin(t1) * std::cos(t2);
          t[2] = std::sin(t1) * std::sin(t2) * std::cos(t3);
          t[3] = std::sin(t1) * std::sin(t2) * std::sin(t3) * std::cos(phi);
          t[4] = std::sin(t1) * std::sin(t2) * std::sin(t3) * std::sin(phi);
          const Vec w = mat_tvec(A, t);
          double wmin = w[0], wmax = w[0];
          for (double v : w) {
            wmin = std::min(wmin, v);
            wmax = std::max(wmax, v);
          }
          if (wmin > 1e-9) best = std::min(best, wmax / wmin);
        }
      }
    }
  }
  REQUIRE(lp.kappa <= best + 1e-9);   // LP is exact, grid can only overshoot
  REQUIRE(best <= lp.kappa + 0.8);    // and lands nearby at this resolution
}

TEST_CASE("positivity diagnostics are row-scale invariant") {
  SeededRng rng(66);
  DenseMatrix A(4, 5);
  for (double& v : A.data()) v = rng.next_gaussian();
  for (std::size_t j = 0; j < 5; ++j) A(0, j) = 0.3 + rng.next_double();

  DenseMatrix B = A;
  const Vec scales{3.0, 0.25, 7.0, 1.5};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) B(i, j) *= scales[i];

  REQUIRE(check_mplus(A).feasible == check_mplus(B).feasible);
  const ConditionNumber ka = condition_number(A);
  const ConditionNumber kb = condition_number(B);
  REQUIRE(ka.kappa == Approx(kb.kappa).margin(1e-7));
}

TEST_CASE("row-mean certificate") {
  SECTION("all-ones matrix gives exactly flat weights") {
    const DenseMatrix A = bernoulli01_matrix(8, 5, 1.0, 0);
    const MplusCertificate cert = build_w(A, 1.0);
    for (double w : cert.w) REQUIRE(w == 1.0);
    REQUIRE(cert.kappa_w == 1.0);
    REQUIRE(cert.within_band);
    REQUIRE(cert.t_norm == Approx(1.0 / std::sqrt(8.0)));
  }

  SECTION("weights are unbiased") {
    const std::size_t m = 50, n = 20;
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const MplusCertificate cert = build_w(bernoulli01_matrix(m, n, 0.5, 40000 + seed), 0.5);
      for (double w : cert.w) acc += w;
    }
    const double N = 1000.0 * n;
    const double mean = acc / N;
    const double se = std::sqrt((1.0 - 0.5) / (0.5 * m) / N);
    REQUIRE(std::abs(mean - 1.0) < 4.0 * se);
  }

  SECTION("concentration band holds at scale") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const MplusCertificate cert = build_w(bernoulli01_matrix(200, 1000, 0.5, 500 + seed), 0.5);
      REQUIRE(cert.within_band);
      REQUIRE(cert.kappa_w <= 3.0);
      REQUIRE(cert.t_norm == Approx(1.0 / (0.5 * std::sqrt(200.0))));
    }
  }

  REQUIRE_THROWS_AS(build_w(DenseMatrix::identity(2), 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_w(DenseMatrix::identity(2), 1.5), std::invalid_argument);
}

TEST_CASE("exact l1 certification on closed-form instances") {
  SECTION("trivial kernel always holds") {
    for (std::size_t s : {1u, 2u, 3u}) {
      const NspReport r = check_l1_nsp_exact(DenseMatrix::identity(6), s);
      REQUIRE(r.status == NspStatus::holds);
      REQUIRE(r.method == NspMethod::exact_l1_lp);
      REQUIRE(r.rho <= 1e-6);
      REQUIRE(r.tau_estimate == 0.0);
    }
  }

  SECTION("one-dimensional kernel with balanced mass fails") {
    DenseMatrix A(1, 2);
    A(0, 0) = 1.0;
    A(0, 1) = 1.0;
    const NspReport r = check_l1_nsp_exact(A, 1);
    REQUIRE(r.status == NspStatus::fails);
    REQUIRE(r.rho >= 1.0 - 1e-7);
    REQUIRE(r.witness.size() == 2);
    // witness is a kernel vector violating strict domination
    REQUIRE(std::abs(r.witness[0] + r.witness[1]) < 1e-7);
    REQUIRE(norm_inf(r.witness) >= 0.5 * norm1(r.witness) * (1.0 - 1e-6));
  }

  SECTION("enumeration guard") {
    REQUIRE_THROWS_AS(check_l1_nsp_exact(DenseMatrix::identity(15), 1), std::invalid_argument);
    REQUIRE_THROWS_AS(check_l1_nsp_exact(DenseMatrix::identity(8), 4), std::invalid_argument);
    REQUIRE_THROWS_AS(check_l1_nsp_exact(DenseMatrix::identity(4), 0), std::invalid_argument);
  }
}

TEST_CASE("exact l1 certification holds for tall bernoulli matrices") {
  int holds = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const NspReport r = check_l1_nsp_exact(bernoulli01_matrix(20, 10, 0.5, 7000 + seed), 1);
    if (r.status == NspStatus::holds) ++holds;
  }
  REQUIRE(holds >= 49);  // rank loss needs coinciding columns, vanishingly rare here
}

TEST_CASE("exact l1 certification agrees with kernel sampling") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DenseMatrix A = bernoulli01_matrix(6, 10, 0.5, 8000 + seed);
    const NspReport r = check_l1_nsp_exact(A, 1);
    const auto basis = row_space_basis(A);
    REQUIRE(basis.size() < 10);  // wide matrix: kernel is nontrivial

    SeededRng rng(child_seed(seed, 3));
    double worst_ratio = 0.0;
    for (int k = 0; k < 500; ++k) {
      const Vec v = kernel_sample(basis, 10, rng);
      if (norm2(v) < 1e-9) continue;
      REQUIRE(norm2(mat_vec(A, v)) < 1e-8 * norm2(v));
      const double l1 = norm1(v), linf = norm_inf(v);
      worst_ratio = std::max(worst_ratio, linf / (l1 - linf));
    }
    // LP maximum dominates every sampled kernel direction
    REQUIRE(worst_ratio <= r.rho + 1e-6);
    if (r.status == NspStatus::holds) REQUIRE(worst_ratio < 1.0);
  }
}

TEST_CASE("robust estimation flags sparse kernel directions") {
  SeededRng rng(91);
  DenseMatrix A(6, 8);
  for (double& v : A.data()) v = rng.next_gaussian();
  for (std::size_t i = 0; i < 6; ++i) A(i, 3) = 0.0;  // plant a kernel coordinate

  const NspReport r = estimate_robust_nsp(A, 0.5, 1);
  REQUIRE(r.status == NspStatus::fails);
  REQUIRE(r.tau_estimate == std::numeric_limits<double>::infinity());
  REQUIRE(r.witness.size() == 8);
  REQUIRE(std::abs(r.witness[3]) == 1.0);
  REQUIRE(norm2(mat_vec(A, r.witness)) <= 1e-8);
}

TEST_CASE("robust estimation on the identity") {
  SECTION("search path") {
    const NspReport r = estimate_robust_nsp(DenseMatrix::identity(6), 0.5, 2);
    REQUIRE(r.status == NspStatus::evidence_only);
    REQUIRE(r.tau_estimate == Approx(1.0).margin(1e-6));
    const double q = norm2(mat_vec(DenseMatrix::identity(6), r.witness));
    REQUIRE(q >= 1.0 - 1e-9);
  }
  SECTION("grid path certifies") {
    const NspReport r = estimate_robust_nsp(DenseMatrix::identity(3), 0.5, 1);
    REQUIRE(r.status == NspStatus::holds);
    REQUIRE(r.tau_estimate == Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("search and grid agree on small instances") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const DenseMatrix A = gaussian_matrix(2, 3, seed);
    RobustNspOptions grid_opts;
    const NspReport grid = estimate_robust_nsp(A, 0.5, 1, grid_opts);

    RobustNspOptions search_opts;
    search_opts.force_search = true;
    search_opts.seed = child_seed(seed, 1);
    const NspReport search = estimate_robust_nsp(A, 0.5, 1, search_opts);

    const double qg = grid.tau_estimate > 0.0 ? 1.0 / grid.tau_estimate : 0.0;
    const double qs = search.tau_estimate > 0.0 ? 1.0 / search.tau_estimate : 0.0;
    REQUIRE(std::abs(qg - qs) < 1e-2);
    // the grid is a certificate, the search never is
    REQUIRE(grid.status != NspStatus::evidence_only);
    REQUIRE(search.status != NspStatus::holds);
  }
}

TEST_CASE("robust estimation reports a consistent witness") {
  const DenseMatrix A = bernoulli01_matrix(8, 12, 0.5, 333);
  const NspReport r = estimate_robust_nsp(A, 0.4, 2);
  REQUIRE(r.witness.size() == 12);
  REQUIRE(norm2(r.witness) == Approx(1.0).margin(1e-9));
  REQUIRE(in_T(r.witness, 0.4, 2));
  REQUIRE(norm2(mat_vec(A, r.witness)) == Approx(1.0 / r.tau_estimate).margin(1e-12));

  REQUIRE_THROWS_AS(estimate_robust_nsp(A, 1.0, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(estimate_robust_nsp(A, 0.5, 0), std::invalid_argument);
}

TEST_CASE("column reweighting degrades the certificate boundedly") {
  // certify A on the grid, then A W^{-1} at rho scaled by kappa(W): the new
  // tau must stay within ||W|| times the old one (up to grid resolution)
  const DenseMatrix A = gaussian_matrix(3, 3, 77);
  const Vec w{2.0, 1.0, 0.8};  // kappa(W) = 2.5, ||W|| = 2
  DenseMatrix B = A;
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) B(i, j) /= w[j];

  const double rho = 0.3;
  const NspReport ra = estimate_robust_nsp(A, rho, 1);
  const NspReport rb = estimate_robust_nsp(B, std::min(2.5 * rho, 0.99), 1);
  REQUIRE(ra.status == NspStatus::holds);
  REQUIRE(rb.status == NspStatus::holds);
  REQUIRE(rb.tau_estimate <= 2.0 * ra.tau_estimate * 1.05 + 0.05);
}

TEST_CASE("weighted l1 contraction along measurements") {
  const DenseMatrix A = bernoulli01_matrix(10, 6, 0.5, 88);
  const MplusCertificate cert = build_w(A, 0.5);
  REQUIRE(cert.feasible);

  SeededRng rng(89);
  for (int k = 0; k < 1000; ++k) {
    Vec x(6), z(6);
    for (double& v : x) v = rng.next_double() * 2.0;
    for (double& v : z) v = rng.next_double() * 2.0;
    double lhs = 0.0;
    for (std::size_t j = 0; j < 6; ++j) lhs += cert.w[j] * (z[j] - x[j]);
    const double rhs = cert.t_norm * norm2(mat_vec(A, sub(x, z)));
    REQUIRE(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("stability constants match hand values") {
  const ErrorConstants e = error_constants(0.25, 2.0, 1.0);
  REQUIRE(e.cprime == Approx(9.0).margin(1e-12));
  REQUIRE(e.dprime == Approx(14.0).margin(1e-12));

  const ErrorConstants big_winv = error_constants(0.25, 2.0, 5.0);
  REQUIRE(big_winv.dprime == Approx(35.0).margin(1e-12));

  const ErrorConstants limit = error_constants(1e-12, 1.0, 1.0);
  REQUIRE(limit.cprime == Approx(1.0).margin(1e-9));
  REQUIRE(limit.dprime == Approx(3.0).margin(1e-9));

  REQUIRE_THROWS_AS(error_constants(0.5, 2.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(error_constants(0.0, 1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(error_constants(0.25, 0.5, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(error_constants(0.25, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("baseline constants match hand values and grow with rho") {
  const BaselineConstants b = baseline_constants(0.5);
  REQUIRE(b.c == Approx(4.5).margin(1e-12));
  REQUIRE(b.d == Approx(7.0).margin(1e-12));

  const BaselineConstants tiny = baseline_constants(1e-12);
  REQUIRE(tiny.c == Approx(1.0).margin(1e-9));
  REQUIRE(tiny.d == Approx(3.0).margin(1e-9));

  double pc = 0.0, pd = 0.0;
  for (double rho = 0.05; rho < 1.0; rho += 0.05) {
    const BaselineConstants cur = baseline_constants(rho);
    REQUIRE(cur.c > pc);
    REQUIRE(cur.d > pd);
    pc = cur.c;
    pd = cur.d;
  }
  REQUIRE_THROWS_AS(baseline_constants(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(baseline_constants(1.0), std::invalid_argument);
}
