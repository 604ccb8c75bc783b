// nncs: command-line front end. One binary, subcommand style; all output
// files start with '#' comment lines carrying the tool version and the
// resolved configuration so a run can be replayed exactly.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "nncs/nncs.hpp"

namespace {

constexpr int ex_ok = 0;
constexpr int ex_noconv = 2;
constexpr int ex_infeas = 3;
constexpr int ex_band = 4;
constexpr int ex_usage = 64;
constexpr int ex_io = 74;

using KV = std::vector<std::pair<std::string, std::string>>;

std::string fd(double v) { return nncs::format_double(v); }

std::uint64_t fresh_seed() {
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  s ^= static_cast<std::uint64_t>(
      std::chrono::steady_clock::now().time_since_epoch().count());
  return nncs::detail::mix64(s);
}

std::vector<std::string> make_header(const std::string& command, const KV& kv) {
  std::vector<std::string> h;
  h.push_back(std::string("nncs ") + NNCS_VERSION);
  h.push_back("command = " + command);
  for (const auto& [k, v] : kv) h.push_back(k + " = " + v);
  return h;
}

void print_kv(const KV& rows) {
  for (const auto& [k, v] : rows) std::cout << k << " = " << v << '\n';
}

// key = value report: echoed to stdout, optionally written with a header
void emit_kv(const std::string& out_path, const std::vector<std::string>& header,
             const KV& rows) {
  print_kv(rows);
  if (out_path.empty()) return;
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw nncs::io_error("cannot open for writing: " + out_path);
  for (const std::string& h : header) os << "# " << h << '\n';
  for (const auto& [k, v] : rows) os << k << " = " << v << '\n';
  if (!os) throw nncs::io_error("write failed: " + out_path);
}

struct GenOpts {
  std::string ensemble = "bernoulli01";
  std::size_t m = 0, n = 0, s = 0;
  double p = 0.5, sigma = 0.1;
  std::string out;
};

struct SolveOpts {
  std::string matrix, rhs, truth, out;
  double eta = 0.0, lambda = 100.0;
};

struct NspOpts {
  std::string matrix, out;
  double p = 0.5, rho = 0.5, margin = 1e-7, grid_res = 1e-2, penalty = 1e3;
  std::size_t s = 1, max_n = 14, max_s = 3;
  int restarts = 50, steps = 500;
  bool force_search = false;
};

struct TheoryOpts {
  std::size_t n = 1000, m = 500, s = 10, dim = 16;
  double p = 0.5, rho = 0.5, c1 = 1.0, c2 = 1.0, theta_arg = 0.5, sigmas = 4.0;
  long trials = 100000;
  std::string out;
};

struct ExpOpts {
  std::size_t trials = 200, n_lo = 10, n_hi = 500, m_lo = 10, bins = 20;
  std::size_t n = 100, trials_per_cell = 10, s = 5, vectors = 100, reps = 20;
  double p = 0.5, sigma = 0.1;
  std::vector<std::size_t> m_list{40, 60, 80};
  bool eta_quantile = false, timing = false;
  std::string out, out_trials, out_grid, grid_in;
};

int run_gen(const std::string& what, const GenOpts& o, std::uint64_t seed) {
  if (what == "matrix") {
    nncs::EnsembleSpec spec;
    spec.kind = nncs::parse_ensemble(o.ensemble);
    spec.m = o.m;
    spec.n = o.n;
    spec.p = o.p;
    spec.seed = seed;
    const nncs::DenseMatrix A = nncs::generate(spec);
    KV kv{{"ensemble", o.ensemble}, {"m", std::to_string(o.m)}, {"n", std::to_string(o.n)},
          {"p", fd(o.p)},           {"seed", std::to_string(seed)}};
    nncs::write_matrix(o.out, A, make_header("gen matrix", kv));
  } else if (what == "signal") {
    const nncs::Vec x = nncs::sparse_nonneg_signal(o.n, o.s, seed);
    KV kv{{"n", std::to_string(o.n)}, {"s", std::to_string(o.s)}, {"seed", std::to_string(seed)}};
    nncs::write_vector(o.out, x, make_header("gen signal", kv));
  } else {
    const nncs::Vec e = nncs::gaussian_noise(o.m, o.sigma, seed);
    KV kv{{"m", std::to_string(o.m)}, {"sigma", fd(o.sigma)}, {"seed", std::to_string(seed)}};
    nncs::write_vector(o.out, e, make_header("gen noise", kv));
  }
  std::cout << "wrote " << o.out << '\n';
  return ex_ok;
}

int run_solve(const std::string& what, const SolveOpts& o) {
  const nncs::DenseMatrix A = nncs::read_matrix(o.matrix);
  const nncs::Vec y = nncs::read_vector(o.rhs);
  if (y.size() != A.rows()) throw nncs::io_error("solve: rhs length does not match matrix rows");

  nncs::Vec x;
  bool converged = true, infeasible = false;
  KV stats;
  if (what == "nnls") {
    const nncs::NnlsResult r = nncs::nnls(A, y);
    x = r.x;
    converged = r.converged;
    stats = {{"solver", "nnls"},
             {"residual", fd(r.residual_norm)},
             {"iterations", std::to_string(r.iterations)},
             {"support_size", std::to_string(r.active_set.size())},
             {"converged", r.converged ? "1" : "0"}};
  } else if (what == "l1sq") {
    const nncs::NnlsResult r = nncs::l1sq_nnreg(A, y, o.lambda);
    x = r.x;
    converged = r.converged;
    stats = {{"solver", "l1sq"},
             {"lambda", fd(o.lambda)},
             {"residual", fd(nncs::norm2(nncs::sub(nncs::mat_vec(A, r.x), y)))},
             {"iterations", std::to_string(r.iterations)},
             {"converged", r.converged ? "1" : "0"}};
  } else {
    const bool nn = what == "bpdn_nn";
    const nncs::BpdnResult r = nn ? nncs::bpdn_nn(A, y, o.eta) : nncs::bpdn(A, y, o.eta);
    x = r.x;
    converged = r.converged;
    infeasible = r.infeasible;
    stats = {{"solver", nn ? "bpdn_nn" : "bpdn"},
             {"eta", fd(o.eta)},
             {"objective", fd(r.objective)},
             {"residual", fd(r.residual_norm)},
             {"duality_gap_estimate", fd(r.duality_gap_estimate)},
             {"iterations", std::to_string(r.iterations)},
             {"converged", r.converged ? "1" : "0"},
             {"infeasible", r.infeasible ? "1" : "0"}};
  }

  if (!o.truth.empty()) {
    const nncs::Vec xt = nncs::read_vector(o.truth);
    if (xt.size() != x.size()) throw nncs::io_error("solve: truth length mismatch");
    const double abs_err = nncs::norm2(nncs::sub(xt, x));
    const double xn = nncs::norm2(xt);
    stats.emplace_back("abs_err", fd(abs_err));
    stats.emplace_back("rel_err", fd(xn > 0.0 ? abs_err / xn : 0.0));
  }

  print_kv(stats);
  if (!o.out.empty()) {
    KV kv{{"matrix", o.matrix}, {"rhs", o.rhs}};
    kv.insert(kv.end(), stats.begin(), stats.end());
    nncs::write_vector(o.out, x, make_header("solve " + what, kv));
  }
  if (infeasible) return ex_infeas;
  return converged ? ex_ok : ex_noconv;
}

int run_nsp(const std::string& what, const NspOpts& o, std::uint64_t seed) {
  const nncs::DenseMatrix A = nncs::read_matrix(o.matrix);
  if (what == "mplus") {
    const nncs::MplusCertificate cert = nncs::check_mplus(A);
    KV rows{{"feasible", cert.feasible ? "1" : "0"}};
    if (cert.feasible) {
      rows.emplace_back("kappa_w", fd(cert.kappa_w));
      rows.emplace_back("t_norm", fd(cert.t_norm));
      for (std::size_t i = 0; i < cert.t.size(); ++i)
        rows.emplace_back("t" + std::to_string(i), fd(cert.t[i]));
    }
    emit_kv(o.out, make_header("nsp mplus", {{"matrix", o.matrix}}), rows);
    return cert.feasible ? ex_ok : ex_infeas;
  }
  if (what == "kappa") {
    const nncs::ConditionNumber cn = nncs::condition_number(A);
    KV rows{{"feasible", cn.feasible ? "1" : "0"}};
    if (cn.feasible) {
      rows.emplace_back("kappa", fd(cn.kappa));
      for (std::size_t i = 0; i < cn.t.size(); ++i)
        rows.emplace_back("t" + std::to_string(i), fd(cn.t[i]));
    }
    emit_kv(o.out, make_header("nsp kappa", {{"matrix", o.matrix}}), rows);
    return cn.feasible ? ex_ok : ex_infeas;
  }
  if (what == "w") {
    const nncs::MplusCertificate cert = nncs::build_w(A, o.p);
    KV rows{{"feasible", cert.feasible ? "1" : "0"},
            {"within_band", cert.within_band ? "1" : "0"},
            {"kappa_w", fd(cert.kappa_w)},
            {"t_norm", fd(cert.t_norm)}};
    emit_kv(o.out, make_header("nsp w", {{"matrix", o.matrix}, {"p", fd(o.p)}}), rows);
    return cert.within_band ? ex_ok : ex_band;
  }
  if (what == "l1-exact") {
    nncs::L1NspOptions opts;
    opts.margin = o.margin;
    opts.max_n = o.max_n;
    opts.max_s = o.max_s;
    const nncs::NspReport rep = nncs::check_l1_nsp_exact(A, o.s, opts);
    KV rows{{"status", nncs::to_string(rep.status)},
            {"method", nncs::to_string(rep.method)},
            {"s", std::to_string(rep.s)},
            {"rho", fd(rep.rho)}};
    for (std::size_t i = 0; i < rep.witness.size(); ++i)
      rows.emplace_back("witness" + std::to_string(i), fd(rep.witness[i]));
    KV kv{{"matrix", o.matrix}, {"s", std::to_string(o.s)}, {"margin", fd(o.margin)}};
    emit_kv(o.out, make_header("nsp l1-exact", kv), rows);
    return rep.status == nncs::NspStatus::holds ? ex_ok : ex_band;
  }
  // l2-estimate
  nncs::RobustNspOptions opts;
  opts.restarts = o.restarts;
  opts.steps = o.steps;
  opts.seed = seed;
  opts.penalty = o.penalty;
  opts.grid_resolution = o.grid_res;
  opts.force_search = o.force_search;
  const nncs::NspReport rep = nncs::estimate_robust_nsp(A, o.rho, o.s, opts);
  const double q_hat = std::isinf(rep.tau_estimate) ? 0.0 : 1.0 / rep.tau_estimate;
  KV rows{{"status", nncs::to_string(rep.status)},
          {"method", nncs::to_string(rep.method)},
          {"s", std::to_string(rep.s)},
          {"rho", fd(rep.rho)},
          {"q_hat", fd(q_hat)},
          {"tau_estimate", fd(rep.tau_estimate)}};
  for (std::size_t i = 0; i < rep.witness.size(); ++i)
    rows.emplace_back("witness" + std::to_string(i), fd(rep.witness[i]));
  KV kv{{"matrix", o.matrix},        {"rho", fd(o.rho)},
        {"s", std::to_string(o.s)},  {"restarts", std::to_string(o.restarts)},
        {"steps", std::to_string(o.steps)}, {"grid_resolution", fd(o.grid_res)},
        {"force_search", o.force_search ? "1" : "0"}, {"seed", std::to_string(seed)}};
  emit_kv(o.out, make_header("nsp l2-estimate", kv), rows);
  return rep.status == nncs::NspStatus::fails ? ex_band : ex_ok;
}

int run_theory_bounds(const TheoryOpts& o) {
  const nncs::BoundSet b = nncs::evaluate_bounds(o.n, o.m, o.s, o.p, o.rho, o.c1, o.c2);
  KV rows{{"theta", fd(b.theta)},
          {"alpha", fd(b.alpha)},
          {"beta", fd(b.beta)},
          {"m_required", std::to_string(b.m_required)},
          {"wm_bound", fd(b.wm)},
          {"q_lower", fd(b.q_lower)},
          {"small_ball_bound", fd(b.small_ball)},
          {"nsp_fail_prob", fd(b.nsp_fail_prob)},
          {"bernstein_fail_prob", fd(b.bernstein_fail)},
          {"union_fail_prob", fd(b.union_fail)},
          {"tau", fd(b.tau)},
          {"t_norm", fd(b.t_norm)},
          {"err_coeff", fd(b.err_coeff)},
          {"err_coeff_valid", b.err_coeff_valid ? "1" : "0"},
          {"simplified_m_required", std::to_string(b.simplified_m_required)},
          {"simplified_tau", fd(b.simplified_tau)},
          {"simplified_matches_general", b.simplified_matches_general ? "1" : "0"}};
  KV kv{{"n", std::to_string(o.n)}, {"m", std::to_string(o.m)}, {"s", std::to_string(o.s)},
        {"p", fd(o.p)},             {"rho", fd(o.rho)},         {"c1", fd(o.c1)},
        {"c2", fd(o.c2)}};
  emit_kv(o.out, make_header("theory bounds", kv), rows);
  return ex_ok;
}

nncs::Vec random_unit(std::size_t dim, std::uint64_t seed) {
  nncs::SeededRng rng(seed);
  nncs::Vec z(dim);
  double nz = 0.0;
  while (nz <= 1e-300) {
    for (double& v : z) v = rng.next_gaussian();
    nz = nncs::norm2(z);
  }
  for (double& v : z) v /= nz;
  return z;
}

int run_theory_verify(const std::string& what, const TheoryOpts& o, std::uint64_t seed,
                      int jobs) {
  nncs::MCSettings mc;
  mc.trials = o.trials;
  mc.seed = nncs::child_seed(seed, 2);
  mc.jobs = jobs;
  mc.confidence_sigmas = o.sigmas;

  if (what == "tail") {
    const nncs::Vec z = random_unit(o.dim, nncs::child_seed(seed, 1));
    const double emp = nncs::mc_tail(z, o.p, o.theta_arg, mc);
    const double bound = nncs::q_bound(o.p, o.theta_arg);
    const double se = std::sqrt(std::max(emp * (1.0 - emp), 0.0) /
                                static_cast<double>(o.trials));
    const bool ok = emp >= bound - o.sigmas * se;
    KV rows{{"empirical_tail", fd(emp)}, {"lower_bound", fd(bound)},
            {"std_error", fd(se)},       {"sigmas", fd(o.sigmas)},
            {"within_band", ok ? "1" : "0"}};
    KV kv{{"p", fd(o.p)},
          {"theta", fd(o.theta_arg)},
          {"dim", std::to_string(o.dim)},
          {"trials", std::to_string(o.trials)},
          {"seed", std::to_string(seed)}};
    emit_kv(o.out, make_header("theory verify tail", kv), rows);
    return ok ? ex_ok : ex_band;
  }
  if (what == "variance") {
    const nncs::Vec z = random_unit(o.dim, nncs::child_seed(seed, 1));
    const nncs::QuadFormMoments closed = nncs::var_S_closed(z, o.p);
    const nncs::QuadFormMoments est = nncs::mc_quadratic_form(z, o.p, mc);
    const bool ok = std::abs(est.variance - closed.variance) <= o.sigmas * est.variance_se;
    KV rows{{"closed_mean", fd(closed.mean)},     {"closed_variance", fd(closed.variance)},
            {"mc_mean", fd(est.mean)},            {"mc_variance", fd(est.variance)},
            {"variance_se", fd(est.variance_se)}, {"sigmas", fd(o.sigmas)},
            {"within_band", ok ? "1" : "0"}};
    KV kv{{"p", fd(o.p)},
          {"dim", std::to_string(o.dim)},
          {"trials", std::to_string(o.trials)},
          {"seed", std::to_string(seed)}};
    emit_kv(o.out, make_header("theory verify variance", kv), rows);
    return ok ? ex_ok : ex_band;
  }
  // wm: one-sided check, the closed form upper-bounds the MC mean
  const double emp = nncs::mc_empirical_width(o.n, o.s, o.p, o.m, mc);
  const double bound = nncs::wm_bound(o.n, o.s, o.p);
  const bool ok = emp <= bound;
  KV rows{{"empirical_width", fd(emp)}, {"upper_bound", fd(bound)},
          {"within_band", ok ? "1" : "0"}};
  KV kv{{"n", std::to_string(o.n)}, {"s", std::to_string(o.s)},
        {"p", fd(o.p)},             {"m", std::to_string(o.m)},
        {"trials", std::to_string(o.trials)}, {"seed", std::to_string(seed)}};
  emit_kv(o.out, make_header("theory verify wm", kv), rows);
  return ok ? ex_ok : ex_band;
}

int run_exp_phase(const ExpOpts& o, std::uint64_t seed, int jobs) {
  nncs::PhaseRanges ranges;
  ranges.n_lo = o.n_lo;
  ranges.n_hi = o.n_hi;
  ranges.m_lo = o.m_lo;
  const nncs::PhaseResult res =
      nncs::run_phase_transition(o.trials, ranges, o.p, seed, o.bins, jobs, o.timing);
  KV kv{{"trials", std::to_string(o.trials)},
        {"n_lo", std::to_string(o.n_lo)},
        {"n_hi", std::to_string(o.n_hi)},
        {"m_lo", std::to_string(o.m_lo)},
        {"p", fd(o.p)},
        {"bins", std::to_string(o.bins)},
        {"seed", std::to_string(seed)},
        {"timing", o.timing ? "1" : "0"}};
  const auto header = make_header("exp phase", kv);
  if (!o.out_trials.empty()) {
    nncs::write_trials_csv(o.out_trials, res.records, header);
    std::cout << "wrote " << o.out_trials << '\n';
  }
  if (!o.out_grid.empty()) {
    nncs::write_grid_csv(o.out_grid, res.grid, header);
    std::cout << "wrote " << o.out_grid << '\n';
  }
  long succ = 0;
  for (long v : res.grid.success) succ += v;
  std::cout << "trials = " << o.trials << ", successes = " << succ << '\n';
  return ex_ok;
}

int run_exp_noisy(const ExpOpts& o, std::uint64_t seed, int jobs) {
  nncs::NoisyComparisonConfig cfg;
  cfg.n = o.n;
  cfg.bins = o.bins;
  cfg.sigma = o.sigma;
  cfg.trials_per_cell = o.trials_per_cell;
  cfg.seed = seed;
  cfg.eta_quantile = o.eta_quantile;
  cfg.timing = o.timing;
  cfg.jobs = jobs;
  const std::vector<nncs::TrialRecord> records = nncs::run_noisy_comparison(cfg);
  KV kv{{"n", std::to_string(o.n)},
        {"bins", std::to_string(o.bins)},
        {"sigma", fd(o.sigma)},
        {"trials_per_cell", std::to_string(o.trials_per_cell)},
        {"eta_quantile", o.eta_quantile ? "1" : "0"},
        {"seed", std::to_string(seed)}};
  nncs::write_trials_csv(o.out, records, make_header("exp noisy", kv));
  std::cout << "wrote " << o.out << '\n';
  double nnls_frac = 0.0, bpdn_frac = 0.0;
  long pairs = 0;
  for (const nncs::TrialRecord& r : records) {
    if (r.solver == nncs::SolverKind::nnls) {
      nnls_frac += r.success_noisy ? 1.0 : 0.0;
      ++pairs;
    } else {
      bpdn_frac += r.success_noisy ? 1.0 : 0.0;
    }
  }
  if (pairs > 0) {
    std::cout << "nnls_success_fraction = " << fd(nnls_frac / pairs) << '\n';
    std::cout << "bpdn_success_fraction = " << fd(bpdn_frac / pairs) << '\n';
  }
  return ex_ok;
}

int run_exp_gaussian(const ExpOpts& o, std::uint64_t seed, int jobs) {
  const std::vector<nncs::UniformSummaryRow> rows = nncs::run_gaussian_comparison(
      o.n, o.m_list, o.s, o.vectors, o.reps, seed, jobs);
  std::string mlist;
  for (std::size_t i = 0; i < o.m_list.size(); ++i) {
    if (i) mlist += ' ';
    mlist += std::to_string(o.m_list[i]);
  }
  KV kv{{"n", std::to_string(o.n)},
        {"m_list", mlist},
        {"s", std::to_string(o.s)},
        {"vectors_per_matrix", std::to_string(o.vectors)},
        {"repetitions", std::to_string(o.reps)},
        {"seed", std::to_string(seed)}};
  nncs::write_uniform_csv(o.out, rows, make_header("exp gaussian", kv));
  std::cout << "wrote " << o.out << '\n';
  for (const nncs::UniformSummaryRow& r : rows)
    std::cout << "m = " << r.m << ", " << nncs::to_string(r.ensemble)
              << " uniform fraction = " << fd(r.fraction) << '\n';
  return ex_ok;
}

int run_exp_render(const ExpOpts& o) {
  const nncs::PhaseGrid grid = nncs::read_grid_csv(o.grid_in);
  std::string bytes = nncs::render_heatmap_svg(grid);
  // provenance as an XML comment after the declaration; the renderer itself
  // stays a pure function of the grid
  const std::size_t nl = bytes.find('\n');
  std::string comment = "<!-- nncs " + std::string(NNCS_VERSION) +
                        "; command = exp render; grid = " + o.grid_in + " -->\n";
  bytes.insert(nl + 1, comment);
  std::ofstream os(o.out, std::ios::binary);
  if (!os) throw nncs::io_error("cannot open for writing: " + o.out);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw nncs::io_error("write failed: " + o.out);
  std::cout << "wrote " << o.out << '\n';
  return ex_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonnegative sparse recovery toolkit"};
  app.set_config("--config")->description("INI config file; explicit flags override it");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "master seed (omitted: generated and printed)");
  int jobs = static_cast<int>(nncs::default_jobs());
  app.add_option("--jobs", jobs, "worker threads for experiment/MC runners")
      ->check(CLI::PositiveNumber);

  GenOpts gen;
  SolveOpts solve;
  NspOpts nsp;
  TheoryOpts theory;
  ExpOpts exp;
  int rc = ex_ok;
  std::string leaf;  // which leaf ran

  // ---- gen ----
  CLI::App* cgen = app.add_subcommand("gen", "generate matrices, signals, noise");
  cgen->require_subcommand(1);
  CLI::App* gm = cgen->add_subcommand("matrix", "measurement matrix");
  gm->add_option("--ensemble", gen.ensemble, "bernoulli01|gaussian|identity")
      ->check(CLI::IsMember({"bernoulli01", "gaussian", "identity"}));
  gm->add_option("--m", gen.m, "rows")->required();
  gm->add_option("--n", gen.n, "columns")->required();
  gm->add_option("--p", gen.p, "Bernoulli parameter");
  gm->add_option("--out", gen.out, "output file")->required();
  gm->callback([&] { leaf = "gen matrix"; });
  CLI::App* gs = cgen->add_subcommand("signal", "sparse nonnegative signal");
  gs->add_option("--n", gen.n, "length")->required();
  gs->add_option("--s", gen.s, "sparsity")->required();
  gs->add_option("--out", gen.out, "output file")->required();
  gs->callback([&] { leaf = "gen signal"; });
  CLI::App* gn = cgen->add_subcommand("noise", "gaussian noise vector");
  gn->add_option("--m", gen.m, "length")->required();
  gn->add_option("--sigma", gen.sigma, "standard deviation");
  gn->add_option("--out", gen.out, "output file")->required();
  gn->callback([&] { leaf = "gen noise"; });

  // ---- solve ----
  CLI::App* csolve = app.add_subcommand("solve", "run a solver on (matrix, rhs)");
  csolve->require_subcommand(1);
  for (const char* name : {"nnls", "bpdn", "bpdn_nn", "l1sq"}) {
    CLI::App* sub = csolve->add_subcommand(name, std::string("solver: ") + name);
    sub->add_option("--matrix", solve.matrix, "matrix file")->required();
    sub->add_option("--rhs", solve.rhs, "right-hand side file")->required();
    sub->add_option("--truth", solve.truth, "ground-truth vector for error reporting");
    sub->add_option("--out", solve.out, "solution output file");
    if (std::string(name) == "bpdn" || std::string(name) == "bpdn_nn")
      sub->add_option("--eta", solve.eta, "residual budget")->required();
    if (std::string(name) == "l1sq")
      sub->add_option("--lambda", solve.lambda, "fidelity weight");
    sub->callback([&, name] { leaf = std::string("solve ") + name; });
  }

  // ---- nsp ----
  CLI::App* cnsp = app.add_subcommand("nsp", "nullspace/positivity diagnostics");
  cnsp->require_subcommand(1);
  CLI::App* nm = cnsp->add_subcommand("mplus", "row-space positivity certificate");
  nm->add_option("--matrix", nsp.matrix, "matrix file")->required();
  nm->add_option("--out", nsp.out, "report file");
  nm->callback([&] { leaf = "nsp mplus"; });
  CLI::App* nk = cnsp->add_subcommand("kappa", "minimal diagonal condition number");
  nk->add_option("--matrix", nsp.matrix, "matrix file")->required();
  nk->add_option("--out", nsp.out, "report file");
  nk->callback([&] { leaf = "nsp kappa"; });
  CLI::App* nw = cnsp->add_subcommand("w", "row-mean certificate and band check");
  nw->add_option("--matrix", nsp.matrix, "matrix file")->required();
  nw->add_option("--p", nsp.p, "Bernoulli parameter");
  nw->add_option("--out", nsp.out, "report file");
  nw->callback([&] { leaf = "nsp w"; });
  CLI::App* nl1 = cnsp->add_subcommand("l1-exact", "exhaustive l1 certification");
  nl1->add_option("--matrix", nsp.matrix, "matrix file")->required();
  nl1->add_option("--s", nsp.s, "order")->required();
  nl1->add_option("--margin", nsp.margin, "strictness margin");
  nl1->add_option("--max-n", nsp.max_n, "enumeration guard on n");
  nl1->add_option("--max-s", nsp.max_s, "enumeration guard on s");
  nl1->add_option("--out", nsp.out, "report file");
  nl1->callback([&] { leaf = "nsp l1-exact"; });
  CLI::App* nl2 = cnsp->add_subcommand("l2-estimate", "randomized robust-NSP estimate");
  nl2->add_option("--matrix", nsp.matrix, "matrix file")->required();
  nl2->add_option("--rho", nsp.rho, "NSP parameter");
  nl2->add_option("--s", nsp.s, "order")->required();
  nl2->add_option("--restarts", nsp.restarts, "search restarts");
  nl2->add_option("--steps", nsp.steps, "gradient steps per restart");
  nl2->add_option("--penalty", nsp.penalty, "critical-set penalty weight");
  nl2->add_option("--grid-res", nsp.grid_res, "grid resolution for n <= 4");
  nl2->add_flag("--force-search", nsp.force_search, "use the search even when n <= 4");
  nl2->add_option("--out", nsp.out, "report file");
  nl2->callback([&] { leaf = "nsp l2-estimate"; });

  // ---- theory ----
  CLI::App* cth = app.add_subcommand("theory", "closed-form bounds and MC verification");
  cth->require_subcommand(1);
  CLI::App* tb = cth->add_subcommand("bounds", "evaluate all closed-form bounds");
  tb->add_option("--n", theory.n, "ambient dimension")->required();
  tb->add_option("--m", theory.m, "measurements")->required();
  tb->add_option("--s", theory.s, "sparsity")->required();
  tb->add_option("--p", theory.p, "Bernoulli parameter");
  tb->add_option("--rho", theory.rho, "NSP parameter");
  tb->add_option("--c1", theory.c1, "sampling-rate constant");
  tb->add_option("--c2", theory.c2, "tau constant");
  tb->add_option("--out", theory.out, "report file");
  tb->callback([&] { leaf = "theory bounds"; });
  CLI::App* tv = cth->add_subcommand("verify", "Monte Carlo checks of the bounds");
  tv->require_subcommand(1);
  CLI::App* tvt = tv->add_subcommand("tail", "small-ball tail lower bound");
  tvt->add_option("--p", theory.p, "Bernoulli parameter");
  tvt->add_option("--theta", theory.theta_arg, "tail threshold argument");
  tvt->add_option("--dim", theory.dim, "test vector dimension");
  tvt->add_option("--trials", theory.trials, "MC draws")->check(CLI::PositiveNumber);
  tvt->add_option("--sigmas", theory.sigmas, "confidence band width");
  tvt->add_option("--out", theory.out, "report file");
  tvt->callback([&] { leaf = "theory verify tail"; });
  CLI::App* tvv = tv->add_subcommand("variance", "quadratic-form variance formula");
  tvv->add_option("--p", theory.p, "Bernoulli parameter");
  tvv->add_option("--dim", theory.dim, "test vector dimension");
  tvv->add_option("--trials", theory.trials, "MC draws")->check(CLI::PositiveNumber);
  tvv->add_option("--sigmas", theory.sigmas, "confidence band width");
  tvv->add_option("--out", theory.out, "report file");
  tvv->callback([&] { leaf = "theory verify variance"; });
  CLI::App* tvw = tv->add_subcommand("wm", "mean empirical width bound");
  tvw->add_option("--n", theory.n, "ambient dimension")->required();
  tvw->add_option("--s", theory.s, "sparsity")->required();
  tvw->add_option("--p", theory.p, "Bernoulli parameter");
  tvw->add_option("--m", theory.m, "measurements")->required();
  tvw->add_option("--trials", theory.trials, "MC draws")->check(CLI::PositiveNumber);
  tvw->add_option("--out", theory.out, "report file");
  tvw->callback([&] { leaf = "theory verify wm"; });

  // ---- exp ----
  CLI::App* cexp = app.add_subcommand("exp", "experiment harness");
  cexp->require_subcommand(1);
  CLI::App* ep = cexp->add_subcommand("phase", "noiseless NNLS phase transition");
  ep->add_option("--trials", exp.trials, "number of trials");
  ep->add_option("--n-lo", exp.n_lo, "n range low");
  ep->add_option("--n-hi", exp.n_hi, "n range high");
  ep->add_option("--m-lo", exp.m_lo, "m range low");
  ep->add_option("--p", exp.p, "Bernoulli parameter");
  ep->add_option("--bins", exp.bins, "grid bins per axis");
  ep->add_flag("--timing", exp.timing, "record wall-clock times (breaks byte replay)");
  ep->add_option("--out-trials", exp.out_trials, "per-trial CSV");
  ep->add_option("--out-grid", exp.out_grid, "binned grid CSV");
  ep->callback([&] { leaf = "exp phase"; });
  CLI::App* en = cexp->add_subcommand("noisy", "paired noisy NNLS/BPDN comparison");
  en->add_option("--n", exp.n, "signal dimension");
  en->add_option("--bins", exp.bins, "cells per axis");
  en->add_option("--sigma", exp.sigma, "noise standard deviation");
  en->add_option("--trials-per-cell", exp.trials_per_cell, "paired trials per cell");
  en->add_flag("--eta-quantile", exp.eta_quantile, "BPDN eta from the chi-square quantile");
  en->add_flag("--timing", exp.timing, "record wall-clock times (breaks byte replay)");
  en->add_option("--out", exp.out, "per-trial CSV")->required();
  en->callback([&] { leaf = "exp noisy"; });
  CLI::App* eg = cexp->add_subcommand("gaussian", "uniform-recovery ensemble comparison");
  eg->add_option("--n", exp.n, "signal dimension");
  eg->add_option("--m-list", exp.m_list, "measurement counts");
  eg->add_option("--s", exp.s, "sparsity");
  eg->add_option("--vectors", exp.vectors, "signals per matrix");
  eg->add_option("--reps", exp.reps, "matrices per (m, ensemble)");
  eg->add_option("--out", exp.out, "summary CSV")->required();
  eg->callback([&] { leaf = "exp gaussian"; });
  CLI::App* er = cexp->add_subcommand("render", "render a grid CSV as an SVG heatmap");
  er->add_option("--grid", exp.grid_in, "grid CSV input")->required();
  er->add_option("--out", exp.out, "SVG output")->required();
  er->callback([&] { leaf = "exp render"; });

  // let --seed/--jobs given after a subcommand reach the root options
  const std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* a) {
    for (CLI::App* sub : a->get_subcommands([](const CLI::App*) { return true; })) {
      sub->fallthrough(true);
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ex_ok : ex_usage;
  }

  if (seed_opt->count() == 0) {
    seed = fresh_seed();
    std::cout << "seed = " << seed << '\n';
  }

  try {
    if (leaf == "gen matrix") rc = run_gen("matrix", gen, seed);
    else if (leaf == "gen signal") rc = run_gen("signal", gen, seed);
    else if (leaf == "gen noise") rc = run_gen("noise", gen, seed);
    else if (leaf == "solve nnls") rc = run_solve("nnls", solve);
    else if (leaf == "solve bpdn") rc = run_solve("bpdn", solve);
    else if (leaf == "solve bpdn_nn") rc = run_solve("bpdn_nn", solve);
    else if (leaf == "solve l1sq") rc = run_solve("l1sq", solve);
    else if (leaf == "nsp mplus") rc = run_nsp("mplus", nsp, seed);
    else if (leaf == "nsp kappa") rc = run_nsp("kappa", nsp, seed);
    else if (leaf == "nsp w") rc = run_nsp("w", nsp, seed);
    else if (leaf == "nsp l1-exact") rc = run_nsp("l1-exact", nsp, seed);
    else if (leaf == "nsp l2-estimate") rc = run_nsp("l2-estimate", nsp, seed);
    else if (leaf == "theory bounds") rc = run_theory_bounds(theory);
    else if (leaf == "theory verify tail") rc = run_theory_verify("tail", theory, seed, jobs);
    else if (leaf == "theory verify variance")
      rc = run_theory_verify("variance", theory, seed, jobs);
    else if (leaf == "theory verify wm") rc = run_theory_verify("wm", theory, seed, jobs);
    else if (leaf == "exp phase") rc = run_exp_phase(exp, seed, jobs);
    else if (leaf == "exp noisy") rc = run_exp_noisy(exp, seed, jobs);
    else if (leaf == "exp gaussian") rc = run_exp_gaussian(exp, seed, jobs);
    else if (leaf == "exp render") rc = run_exp_render(exp);
  } catch (const nncs::io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return ex_io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}
