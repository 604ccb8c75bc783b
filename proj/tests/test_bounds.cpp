#include <catch_amalgamated.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "nncs/bounds.hpp"

using namespace nncs;
using Catch::Approx;

namespace {

Vec random_unit_vec(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  Vec z(n);
  double nz = 0.0;
  do {
    for (double& v : z) v = rng.next_gaussian();
    nz = norm2(z);
  } while (nz < 1e-12);
  for (double& v : z) v /= nz;
  return z;
}

}  // namespace

TEST_CASE("subgaussian parameter closed form") {
  REQUIRE(theta(0.5) == 0.5);
  REQUIRE(theta(0.0) == 0.0);
  REQUIRE(theta(1.0) == 0.0);
  REQUIRE_THROWS_AS(theta(-0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(theta(1.1), std::invalid_argument);

  for (int k = 1; k <= 9; ++k) {
    const double p = 0.05 * k;
    REQUIRE(theta(p) == Approx(theta(1.0 - p)).margin(1e-14));  // even under p <-> 1-p
    REQUIRE(theta(p) < 0.5);
    REQUIRE(theta(p) > 0.0);
  }

  // the series branch joins the closed form smoothly around 1/2
  REQUIRE(theta(0.5 + 1e-9) == Approx(0.5).margin(1e-12));
  REQUIRE(std::abs(theta(0.5 + 0.99e-5) - theta(0.5 + 1.01e-5)) < 1e-9);
}

TEST_CASE("sampling-rate constants") {
  const AlphaBeta half = alpha_beta(0.5);
  REQUIRE(half.alpha == Approx(32.0).margin(1e-12));
  REQUIRE(half.beta == Approx(1.0).margin(1e-12));
  REQUIRE_THROWS_AS(alpha_beta(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(alpha_beta(1.0), std::invalid_argument);

  for (int k = 1; k <= 9; ++k)
    REQUIRE(alpha_beta(0.05 * k).alpha == Approx(alpha_beta(1.0 - 0.05 * k).alpha).epsilon(1e-12));

  for (int k = 1; k <= 19; ++k) {
    const double p = 0.05 * k;
    const AlphaBeta ab = alpha_beta(p);
    REQUIRE(ab.beta > 0.0);
    REQUIRE(ab.alpha >= 32.0 - 1e-9);  // minimized at p = 1/2
    if (std::abs(2.0 * p - 1.0) > 1e-3) {
      // independent re-evaluation of the closed forms
      const double L = std::log(p / (1.0 - p)) / (2.0 * p - 1.0);
      REQUIRE(ab.alpha == Approx(1.0 / (L * std::pow(p * (1.0 - p), 3.0))).epsilon(1e-12));
      REQUIRE(ab.beta == Approx(2.0 * p * p * L).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampling rate hand value and scalings") {
  REQUIRE(sampling_rate(1000, 10, 0.5, 0.5) == 8455);

  const long m1 = sampling_rate(1000, 10, 0.5, 0.5);
  const long m2 = sampling_rate(1000, 10, 0.25, 0.5);  // rho halved -> 4x
  REQUIRE(m2 <= 4 * m1);
  REQUIRE(m2 >= 4 * m1 - 4);

  const long d1 = sampling_rate(2000, 20, 0.5, 0.5);  // s doubled at fixed n/s -> 2x
  REQUIRE(d1 <= 2 * m1);
  REQUIRE(d1 >= 2 * m1 - 2);

  REQUIRE(sampling_rate(1000, 10, 0.5, 0.5, 3.0) >= 3 * m1 - 3);

  REQUIRE_THROWS_AS(sampling_rate(10, 0, 0.5, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(sampling_rate(10, 11, 0.5, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(sampling_rate(10, 2, 1.0, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(sampling_rate(10, 2, 0.5, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("width bound hand value and monotonicity") {
  REQUIRE(wm_bound(1, 1, 0.5) == Approx(10.0 * std::sqrt(2.0)).margin(1e-12));

  double prev = 0.0;
  for (std::size_t n : {4u, 8u, 16u, 32u, 64u}) {
    const double b = wm_bound(n, 2, 0.5);
    REQUIRE(b > prev);
    prev = b;
  }
  prev = 0.0;
  for (std::size_t s = 1; s <= 20; ++s) {
    const double b = wm_bound(20, s, 0.5);
    REQUIRE(b > prev);
    prev = b;
  }
  REQUIRE_THROWS_AS(wm_bound(4, 5, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(wm_bound(4, 2, 0.0), std::invalid_argument);
}

TEST_CASE("tail lower bound closed form") {
  REQUIRE(q_bound(0.5, 1.0) == 0.0);
  REQUIRE(q_bound(0.5, 0.0) == Approx(1.0 / 13.0).margin(1e-15));
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      const double p = 0.1 * i, th = 0.1 * j;
      REQUIRE(q_bound(p, th) <= 2.0 * p * (1.0 - p) + 1e-15);
    }
  REQUIRE_THROWS_AS(q_bound(-0.1, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(q_bound(0.5, 1.5), std::invalid_argument);
}

TEST_CASE("empirical tail meets the closed bounds") {
  MCSettings mc;
  mc.trials = 20000;
  mc.seed = 2718;

  SECTION("two-point witness shows tightness") {
    const Vec z0{1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
    for (double p : {0.3, 0.5}) {
      const double target = 2.0 * p * (1.0 - p);
      const double sigma = std::sqrt(target * (1.0 - target) / mc.trials);
      const double emp = mc_tail(z0, p, 0.1, mc);
      REQUIRE(std::abs(emp - target) < 3.0 * sigma);
    }
  }

  SECTION("lower bound holds for random directions") {
    const double sigma = std::sqrt(0.25 / mc.trials);
    for (double p : {0.1, 0.5, 0.9})
      for (double th : {0.0, 0.5, 0.9}) {
        const Vec z = random_unit_vec(16, 1234);
        REQUIRE(mc_tail(z, p, th, mc) >= q_bound(p, th) - 3.0 * sigma);
      }
  }

  SECTION("degenerate p is deterministic") {
    Vec e1(4, 0.0);
    e1[0] = 1.0;
    mc.trials = 100;
    REQUIRE(mc_tail(e1, 1.0, 0.5, mc) == 1.0);
  }

  SECTION("result is independent of the job count") {
    const Vec z = random_unit_vec(8, 5);
    MCSettings a = mc, b = mc;
    a.jobs = 1;
    b.jobs = 4;
    REQUIRE(mc_tail(z, 0.4, 0.3, a) == mc_tail(z, 0.4, 0.3, b));
  }

  REQUIRE_THROWS_AS(mc_tail(Vec{1.0, 1.0}, 0.5, 0.5, mc), std::invalid_argument);
  MCSettings bad;
  bad.trials = 0;
  REQUIRE_THROWS_AS(mc_tail(Vec{1.0}, 0.5, 0.5, bad), std::invalid_argument);
}

TEST_CASE("quadratic-form moments closed form") {
  SECTION("basis vector reduces to the bernoulli variance") {
    Vec e1(6, 0.0);
    e1[0] = 1.0;
    for (int k = 0; k <= 10; ++k) {
      const double p = 0.1 * k;
      const QuadFormMoments m = var_S_closed(e1, p);
      REQUIRE(m.mean == Approx(p).margin(1e-15));
      REQUIRE(m.variance == Approx(p * (1.0 - p)).margin(1e-14));
    }
  }

  SECTION("mean never drops below p(1-p)") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Vec z = random_unit_vec(10, seed);
      for (double p : {0.1, 0.5, 0.9})
        REQUIRE(var_S_closed(z, p).mean >= p * (1.0 - p) - 1e-12);
    }
  }

  SECTION("monte carlo agrees within confidence bands") {
    MCSettings mc;
    mc.trials = 100000;
    mc.seed = 99;
    for (std::uint64_t seed : {7u, 8u, 9u}) {
      const Vec z = random_unit_vec(12, seed);
      for (double p : {0.1, 0.5}) {
        const QuadFormMoments closed = var_S_closed(z, p);
        const QuadFormMoments emp = mc_quadratic_form(z, p, mc);
        const double mean_se = std::sqrt(closed.variance / mc.trials);
        REQUIRE(std::abs(emp.mean - closed.mean) < 4.0 * mean_se);
        REQUIRE(emp.variance_se > 0.0);
        REQUIRE(std::abs(emp.variance - closed.variance) < 4.0 * emp.variance_se);
      }
    }
  }

  SECTION("jobs do not change the estimate") {
    const Vec z = random_unit_vec(5, 17);
    MCSettings a, b;
    a.trials = b.trials = 20000;
    a.seed = b.seed = 31;
    a.jobs = 1;
    b.jobs = 5;
    const QuadFormMoments ma = mc_quadratic_form(z, 0.4, a);
    const QuadFormMoments mb = mc_quadratic_form(z, 0.4, b);
    REQUIRE(ma.mean == mb.mean);
    REQUIRE(ma.variance == mb.variance);
    REQUIRE(ma.variance_se == mb.variance_se);
  }

  REQUIRE_THROWS_AS(var_S_closed(Vec{2.0}, 0.5), std::invalid_argument);
}

TEST_CASE("top-s energy equals the brute-force support maximum") {
  for (auto [n, s] : {std::pair<std::size_t, std::size_t>{6, 2}, {8, 3}, {10, 4}}) {
    SeededRng rng(n * 100 + s);
    Vec h(n);
    for (double& v : h) v = rng.next_gaussian();

    // max over all supports of the restricted l2 norm
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != s) continue;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (mask >> j & 1) acc += h[j] * h[j];
      best = std::max(best, std::sqrt(acc));
    }
    REQUIRE(top_s_l2(h, s) == Approx(best).margin(1e-12));
  }
  REQUIRE_THROWS_AS(top_s_l2(Vec{1.0}, 2), std::invalid_argument);
}

TEST_CASE("empirical width stays under the closed bound") {
  MCSettings mc;
  mc.trials = 1000;
  mc.seed = 424;
  const double emp = mc_empirical_width(20, 2, 0.5, 40, mc);
  REQUIRE(emp > 0.0);
  REQUIRE(emp <= wm_bound(20, 2, 0.5));

  MCSettings par = mc;
  par.jobs = 3;
  REQUIRE(mc_empirical_width(20, 2, 0.5, 40, par) == emp);
}

TEST_CASE("positivity-event failure bound") {
  REQUIRE(bernstein_fail_prob(0.5, 200, 1000) ==
          Approx(1000.0 * std::exp(-18.75)).epsilon(1e-12));
  REQUIRE(bernstein_fail_prob(0.5, 200, 1000) < 1e-5);
  REQUIRE(bernstein_fail_prob(0.5, 0, 5) == 1.0);  // clamped
  REQUIRE(bernstein_fail_prob(0.5, 400, 1000) < bernstein_fail_prob(0.5, 200, 1000));
  REQUIRE(bernstein_fail_prob(0.5, 200, 2000) > bernstein_fail_prob(0.5, 200, 1000));
  REQUIRE_THROWS_AS(bernstein_fail_prob(0.0, 10, 10), std::invalid_argument);
}

TEST_CASE("union failure bound") {
  const UnionFailProb uf = union_fail_prob(0.5, 10000, 100);
  REQUIRE(uf.total == Approx(101.0 * std::exp(-10000.0 / 1152.0)).epsilon(1e-12));
  REQUIRE(uf.total == Approx(0.017155524).margin(1e-8));
  REQUIRE(uf.total >= uf.nsp_term);
  REQUIRE(union_fail_prob(0.5, 10, 100).total == 1.0);  // small m clamps
  REQUIRE(union_fail_prob(0.5, 2000000, 100).total < 1e-300);
  REQUIRE_THROWS_AS(union_fail_prob(1.0, 10, 10), std::invalid_argument);
}

TEST_CASE("recovery coefficient scalings") {
  const RecoveryErrorCoeff a = recovery_error_coeff(0.5, 100, 1.0, 7.0);
  const RecoveryErrorCoeff b = recovery_error_coeff(0.5, 400, 1.0, 7.0);
  REQUIRE(a.coeff * 10.0 == Approx(b.coeff * 20.0).epsilon(1e-12));
  REQUIRE(a.tau * 10.0 == Approx(b.tau * 20.0).epsilon(1e-12));
  REQUIRE(b.t_norm == Approx(0.1).margin(1e-15));
  REQUIRE(a.eprime == Approx(2.0 * 7.0 * 2.0).margin(1e-12));

  const RecoveryErrorCoeff lo = recovery_error_coeff(0.1, 100, 1.0, 7.0);
  REQUIRE(lo.coeff / a.coeff == Approx(125.0 / 27.0).epsilon(1e-12));

  REQUIRE_THROWS_AS(recovery_error_coeff(0.0, 100, 1.0, 7.0), std::invalid_argument);
  REQUIRE_THROWS_AS(recovery_error_coeff(0.5, 0, 1.0, 7.0), std::invalid_argument);
}

TEST_CASE("small-ball lower bound") {
  EnsembleSpec spec;
  spec.kind = EnsembleKind::bernoulli01;
  spec.n = 30;
  spec.p = 0.5;
  spec.seed = 5150;
  const double rho = 0.5;

  SECTION("sits below the empirical minimum at desk scale") {
    spec.m = static_cast<std::size_t>(sampling_rate(30, 2, rho, 0.5));
    MCSettings mc;
    mc.trials = 1000;
    mc.seed = 5151;
    const SmallBallCheck chk = mc_small_ball_rhs(spec, rho, 2, -1.0, -1.0, mc);
    REQUIRE(std::isfinite(chk.empirical_min));
    REQUIRE(chk.empirical_min > 0.0);
    REQUIRE(chk.bound <= chk.empirical_min);
    // at unit constants the certificate is still vacuous here
    REQUIRE(chk.bound < 0.0);
  }

  SECTION("turns positive once the constant is large enough") {
    const double c1 = 2e7;
    spec.m = static_cast<std::size_t>(sampling_rate(30, 2, rho, 0.5, c1));
    MCSettings no_mc;
    no_mc.trials = 0;
    const SmallBallCheck chk = mc_small_ball_rhs(spec, rho, 2, -1.0, -1.0, no_mc);
    REQUIRE(chk.bound > 0.0);
    REQUIRE(chk.empirical_min == std::numeric_limits<double>::infinity());
  }

  SECTION("degrades as the order approaches the dimension") {
    spec.m = 1206;
    MCSettings no_mc;
    no_mc.trials = 0;
    const double at2 = mc_small_ball_rhs(spec, rho, 2, -1.0, -1.0, no_mc).bound;
    const double at29 = mc_small_ball_rhs(spec, rho, 29, -1.0, -1.0, no_mc).bound;
    REQUIRE(at29 < at2);
    REQUIRE(at29 < -100.0);
  }

  spec.m = 10;
  REQUIRE_THROWS_AS(mc_small_ball_rhs(spec, 1.0, 2, -1.0, -1.0, MCSettings{}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(mc_small_ball_rhs(spec, 0.5, 31, -1.0, -1.0, MCSettings{}),
                    std::invalid_argument);
}

TEST_CASE("assembled bound set is internally consistent") {
  const BoundSet b = evaluate_bounds(1000, 8455, 10, 0.5, 0.5);
  REQUIRE(b.theta == 0.5);
  REQUIRE(b.alpha == Approx(32.0).margin(1e-12));
  REQUIRE(b.beta == Approx(1.0).margin(1e-12));
  REQUIRE(b.m_required == 8455);
  REQUIRE(b.wm == Approx(wm_bound(1000, 10, 0.5)).margin(1e-12));
  REQUIRE(b.q_lower == Approx(q_bound(0.5, 0.5)).margin(1e-15));
  REQUIRE(b.bernstein_fail == Approx(bernstein_fail_prob(0.5, 8455, 1000)).margin(1e-15));
  const UnionFailProb uf = union_fail_prob(0.5, 8455, 1000);
  REQUIRE(b.union_fail == Approx(uf.total).margin(1e-15));
  REQUIRE(b.nsp_fail_prob == Approx(uf.nsp_term).margin(1e-15));
  REQUIRE(b.union_fail <= 1.0);
  REQUIRE(b.nsp_fail_prob >= 0.0);

  // 3 rho >= 1: no finite error coefficient at this rho
  REQUIRE_FALSE(b.err_coeff_valid);
  REQUIRE(b.err_coeff == 0.0);
  REQUIRE(b.tau > 0.0);
  REQUIRE(b.t_norm == Approx(1.0 / (0.5 * std::sqrt(8455.0))).epsilon(1e-12));

  const BoundSet ok = evaluate_bounds(1000, 8455, 10, 0.5, 0.25);
  REQUIRE(ok.err_coeff_valid);
  const double dprime = (3.0 + 0.75) / (1.0 - 0.75) * 3.0;
  REQUIRE(ok.err_coeff ==
          Approx(recovery_error_coeff(0.5, 8455, 1.0, dprime).coeff).epsilon(1e-12));

  // the p = 1/2 shortcut is reported but does not match direct substitution
  REQUIRE(b.simplified_m_required ==
          static_cast<long>(std::ceil(1.0 / (128.0 * 0.25) * 10.0 * std::log(1000.0))));
  REQUIRE(b.simplified_tau == Approx(1.0 / (8.0 * std::sqrt(8455.0))).epsilon(1e-12));
  REQUIRE_FALSE(b.simplified_matches_general);
}
