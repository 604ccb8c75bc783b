#pragma once

// Experiment runners: single recovery trials, the noiseless phase-transition
// sweep, the paired noisy NNLS/BPDN comparison, and the uniform-recovery
// ensemble comparison. Trials are seeded child(master, trial_index) so
// results do not depend on the worker count; CSV rows are emitted in trial
// order.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nncs/bpdn.hpp"
#include "nncs/core.hpp"
#include "nncs/io.hpp"
#include "nncs/nnls.hpp"
#include "nncs/parallel.hpp"
#include "nncs/random_matrices.hpp"
#include "nncs/rng.hpp"

namespace nncs {

enum class SolverKind { nnls, bpdn, bpdn_nn, l1sq };

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::nnls: return "nnls";
    case SolverKind::bpdn: return "bpdn";
    case SolverKind::bpdn_nn: return "bpdn_nn";
    case SolverKind::l1sq: return "l1sq";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& name) {
  if (name == "nnls") return SolverKind::nnls;
  if (name == "bpdn") return SolverKind::bpdn;
  if (name == "bpdn_nn") return SolverKind::bpdn_nn;
  if (name == "l1sq") return SolverKind::l1sq;
  throw std::invalid_argument("parse_solver: unknown solver '" + name + "'");
}

struct TrialConfig {
  std::size_t n = 0, m = 0, s = 0;
  EnsembleKind ensemble = EnsembleKind::bernoulli01;
  double p = 0.5;
  double sigma = 0.0;
  SolverKind solver = SolverKind::nnls;
  double eta = -1.0;     // bpdn family; < 0 means the instantaneous ||e||_2
  double lambda = 100.0; // l1sq fidelity weight
  std::uint64_t seed = 0;
  bool timing = false;   // off by default so output files are reproducible
};

struct TrialRecord {
  std::uint64_t trial_id = 0;
  std::size_t n = 0, m = 0, s = 0;
  double p = 0.5;  // -1 marks non-Bernoulli ensembles in the CSV
  EnsembleKind ensemble = EnsembleKind::bernoulli01;
  SolverKind solver = SolverKind::nnls;
  std::uint64_t seed = 0;
  double rel_err = 0.0;
  double abs_err = 0.0;
  double noise_norm = 0.0;
  double residual = 0.0;
  bool success_noiseless = false;
  bool success_noisy = false;
  double wall_ms = 0.0;
  bool converged = true;  // in-band convergence flag, not serialized
};

inline constexpr double success_rel_tol = 1e-3;

// Noisy success rule: abs_err <= sqrt(10) ||e||_2 / sqrt(m). With no noise
// the threshold degenerates to 0, so the noiseless rule applies instead.
inline bool noisy_success(double abs_err, double noise_norm, std::size_t m, double rel_err) {
  if (noise_norm > 0.0)
    return abs_err <= std::sqrt(10.0) * noise_norm / std::sqrt(static_cast<double>(m));
  return rel_err <= success_rel_tol;
}

// One recovery experiment: A ~ ensemble (child seed 1), x ~ s-sparse
// nonnegative (child 2), e ~ N(0, sigma^2 I) (child 3), y = Ax + e, solve,
// score. Deterministic in cfg.seed; solver non-convergence lands in the
// record, it is not thrown.
inline TrialRecord run_trial(const TrialConfig& cfg) {
  if (cfg.n == 0 || cfg.m == 0) throw std::invalid_argument("run_trial: empty dimensions");
  if (cfg.s < 1 || cfg.s > cfg.n) throw std::invalid_argument("run_trial: need 1 <= s <= n");
  if (cfg.sigma < 0.0) throw std::invalid_argument("run_trial: sigma must be nonnegative");

  EnsembleSpec spec;
  spec.kind = cfg.ensemble;
  spec.m = cfg.m;
  spec.n = cfg.n;
  spec.p = cfg.p;
  spec.seed = child_seed(cfg.seed, 1);
  const DenseMatrix A = generate(spec);
  const Vec x = sparse_nonneg_signal(cfg.n, cfg.s, child_seed(cfg.seed, 2));
  Vec e(cfg.m, 0.0);
  if (cfg.sigma > 0.0) e = gaussian_noise(cfg.m, cfg.sigma, child_seed(cfg.seed, 3));
  Vec y = mat_vec(A, x);
  for (std::size_t i = 0; i < cfg.m; ++i) y[i] += e[i];

  TrialRecord rec;
  rec.n = cfg.n;
  rec.m = cfg.m;
  rec.s = cfg.s;
  rec.p = cfg.ensemble == EnsembleKind::bernoulli01 ? cfg.p : -1.0;
  rec.ensemble = cfg.ensemble;
  rec.solver = cfg.solver;
  rec.seed = cfg.seed;
  rec.noise_norm = norm2(e);

  const auto t0 = std::chrono::steady_clock::now();
  Vec xhat;
  switch (cfg.solver) {
    case SolverKind::nnls: {
      const NnlsResult r = nnls(A, y);
      xhat = r.x;
      rec.converged = r.converged;
      break;
    }
    case SolverKind::bpdn:
    case SolverKind::bpdn_nn: {
      const double eta = cfg.eta < 0.0 ? rec.noise_norm : cfg.eta;
      const BpdnResult r =
          cfg.solver == SolverKind::bpdn ? bpdn(A, y, eta) : bpdn_nn(A, y, eta);
      xhat = r.x;
      rec.converged = r.converged && !r.infeasible;
      break;
    }
    case SolverKind::l1sq: {
      const NnlsResult r = l1sq_nnreg(A, y, cfg.lambda);
      xhat = r.x;
      rec.converged = r.converged;
      break;
    }
  }
  if (cfg.timing) {
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }

  rec.abs_err = norm2(sub(x, xhat));
  const double xn = norm2(x);
  if (xn > 0.0)
    rec.rel_err = rec.abs_err / xn;
  else
    rec.rel_err = rec.abs_err > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  rec.residual = norm2(sub(mat_vec(A, xhat), y));
  rec.success_noiseless = rec.rel_err <= success_rel_tol;
  rec.success_noisy = noisy_success(rec.abs_err, rec.noise_norm, cfg.m, rec.rel_err);
  return rec;
}

struct PhaseGrid {
  std::size_t bins = 20;
  std::vector<long> count;    // bins*bins, index = bin_delta * bins + bin_r
  std::vector<long> success;

  PhaseGrid() = default;
  explicit PhaseGrid(std::size_t g)
      : bins(g), count(g * g, 0), success(g * g, 0) {
    if (g == 0) throw std::invalid_argument("PhaseGrid: bins must be positive");
  }
};

inline std::size_t phase_bin(double value, std::size_t bins) {
  const double scaled = value * static_cast<double>(bins);
  auto b = static_cast<long>(std::floor(scaled));
  if (b < 0) b = 0;
  if (b >= static_cast<long>(bins)) b = static_cast<long>(bins) - 1;
  return static_cast<std::size_t>(b);
}

struct PhaseRanges {
  std::size_t n_lo = 10, n_hi = 500;
  std::size_t m_lo = 10;
};

struct PhaseResult {
  PhaseGrid grid;
  std::vector<TrialRecord> records;
};

// Noiseless NNLS sweep: per trial draw n, then m, then s uniformly (in that
// order) from the configured ranges, bin the outcome by (delta, r).
inline PhaseResult run_phase_transition(std::size_t num_trials, const PhaseRanges& ranges,
                                        double p, std::uint64_t seed, std::size_t bins = 20,
                                        int jobs = 1, bool timing = false) {
  if (num_trials < 1) throw std::invalid_argument("run_phase_transition: need trials >= 1");
  if (ranges.n_lo < 1 || ranges.n_lo > ranges.n_hi || ranges.m_lo < 1 ||
      ranges.m_lo > ranges.n_lo)
    throw std::invalid_argument("run_phase_transition: bad ranges");

  PhaseResult out;
  out.grid = PhaseGrid(bins);
  out.records.resize(num_trials);

  parallel_for(num_trials, jobs, [&](std::size_t t) {
    const std::uint64_t trial_seed = child_seed(seed, t);
    SeededRng dims(child_seed(trial_seed, 0));
    const std::size_t n =
        ranges.n_lo + static_cast<std::size_t>(dims.next_below(ranges.n_hi - ranges.n_lo + 1));
    const std::size_t m =
        ranges.m_lo + static_cast<std::size_t>(dims.next_below(n - ranges.m_lo + 1));
    const std::size_t s = 1 + static_cast<std::size_t>(dims.next_below(m));

    TrialConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.s = s;
    cfg.ensemble = EnsembleKind::bernoulli01;
    cfg.p = p;
    cfg.solver = SolverKind::nnls;
    cfg.seed = trial_seed;
    cfg.timing = timing;
    TrialRecord rec = run_trial(cfg);
    rec.trial_id = t;
    out.records[t] = std::move(rec);
  });

  for (const TrialRecord& rec : out.records) {
    const double delta = static_cast<double>(rec.m) / static_cast<double>(rec.n);
    const double r = static_cast<double>(rec.s) / static_cast<double>(rec.m);
    const std::size_t idx = phase_bin(delta, bins) * bins + phase_bin(r, bins);
    out.grid.count[idx] += 1;
    if (rec.success_noiseless) out.grid.success[idx] += 1;
  }
  return out;
}

struct NoisyComparisonConfig {
  std::size_t n = 100;
  std::size_t bins = 10;          // cells over (delta, r), evaluated at centers
  double sigma = 0.1;
  std::size_t trials_per_cell = 10;
  std::uint64_t seed = 0;
  bool eta_quantile = false;      // sensitivity mode: eta = sigma * sqrt(chi2_{0.9}(m))
  bool timing = false;
  int jobs = 1;
};

// 90% chi-square quantile via the Wilson-Hilferty cube approximation.
inline double chi2_quantile90(std::size_t dof) {
  const double k = static_cast<double>(dof);
  const double z = 1.2815515655446004;  // standard normal 90% point
  const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

// Paired noisy comparison: per cell center (delta, r) run trials_per_cell
// paired NNLS / plain-BPDN solves on identical (A, x, e); both rows share a
// trial id. BPDN sees the instantaneous eta = ||e||_2 unless the quantile
// mode is on.
inline std::vector<TrialRecord> run_noisy_comparison(const NoisyComparisonConfig& cfg) {
  if (cfg.n == 0 || cfg.bins == 0 || cfg.trials_per_cell == 0)
    throw std::invalid_argument("run_noisy_comparison: empty configuration");
  if (cfg.sigma < 0.0) throw std::invalid_argument("run_noisy_comparison: sigma < 0");

  const std::size_t total = cfg.bins * cfg.bins * cfg.trials_per_cell;
  std::vector<TrialRecord> records(2 * total);

  parallel_for(total, cfg.jobs, [&](std::size_t t) {
    const std::size_t cell = t / cfg.trials_per_cell;
    const std::size_t i = cell / cfg.bins;  // delta index
    const std::size_t j = cell % cfg.bins;  // r index
    const double delta = (static_cast<double>(i) + 0.5) / static_cast<double>(cfg.bins);
    const double r = (static_cast<double>(j) + 0.5) / static_cast<double>(cfg.bins);
    std::size_t m = static_cast<std::size_t>(std::lround(delta * static_cast<double>(cfg.n)));
    m = std::min(std::max<std::size_t>(m, 1), cfg.n);
    std::size_t s = static_cast<std::size_t>(std::lround(r * static_cast<double>(m)));
    s = std::min(std::max<std::size_t>(s, 1), m);

    TrialConfig tc;
    tc.n = cfg.n;
    tc.m = m;
    tc.s = s;
    tc.ensemble = EnsembleKind::bernoulli01;
    tc.p = 0.5;
    tc.sigma = cfg.sigma;
    tc.seed = child_seed(cfg.seed, t);
    tc.timing = cfg.timing;
    if (cfg.eta_quantile) tc.eta = cfg.sigma * std::sqrt(chi2_quantile90(m));

    tc.solver = SolverKind::nnls;
    TrialRecord a = run_trial(tc);
    a.trial_id = t;
    tc.solver = SolverKind::bpdn;
    TrialRecord b = run_trial(tc);
    b.trial_id = t;
    records[2 * t] = std::move(a);
    records[2 * t + 1] = std::move(b);
  });
  return records;
}

struct UniformSummaryRow {
  std::size_t m = 0;
  EnsembleKind ensemble = EnsembleKind::bernoulli01;
  std::size_t repetitions = 0;
  std::size_t uniform_successes = 0;
  double fraction = 0.0;
};

// Uniform-recovery comparison: for each m and each ensemble draw a matrix,
// test vectors_per_matrix sparse signals with noiseless NNLS, and count the
// matrix as a success only when every signal is recovered.
inline std::vector<UniformSummaryRow> run_gaussian_comparison(
    std::size_t n, const std::vector<std::size_t>& m_list, std::size_t s,
    std::size_t vectors_per_matrix, std::size_t repetitions, std::uint64_t seed, int jobs = 1) {
  if (n == 0 || m_list.empty() || s < 1 || s > n || vectors_per_matrix == 0)
    throw std::invalid_argument("run_gaussian_comparison: bad parameters");
  for (std::size_t m : m_list)
    if (m == 0) throw std::invalid_argument("run_gaussian_comparison: m must be positive");
  if (repetitions == 0) return {};

  const std::array<EnsembleKind, 2> kinds{EnsembleKind::bernoulli01, EnsembleKind::gaussian};
  const std::size_t jobs_total = m_list.size() * kinds.size() * repetitions;
  std::vector<char> uniform_ok(jobs_total, 0);

  parallel_for(jobs_total, jobs, [&](std::size_t t) {
    const std::size_t rep = t % repetitions;
    const std::size_t ke = (t / repetitions) % kinds.size();
    const std::size_t mi = t / (repetitions * kinds.size());
    (void)rep;
    const std::uint64_t job_seed = child_seed(seed, t);

    EnsembleSpec spec;
    spec.kind = kinds[ke];
    spec.m = m_list[mi];
    spec.n = n;
    spec.p = 0.5;
    spec.seed = child_seed(job_seed, 1);
    const DenseMatrix A = generate(spec);

    bool all_ok = true;
    for (std::size_t k = 0; k < vectors_per_matrix && all_ok; ++k) {
      const Vec x = sparse_nonneg_signal(n, s, child_seed(job_seed, 2 + k));
      const Vec y = mat_vec(A, x);
      const NnlsResult r = nnls(A, y);
      const double xn = norm2(x);
      const double rel = xn > 0.0 ? norm2(sub(x, r.x)) / xn : 0.0;
      if (!(rel <= success_rel_tol)) all_ok = false;
    }
    uniform_ok[t] = all_ok ? 1 : 0;
  });

  std::vector<UniformSummaryRow> rows;
  rows.reserve(m_list.size() * kinds.size());
  for (std::size_t mi = 0; mi < m_list.size(); ++mi) {
    for (std::size_t ke = 0; ke < kinds.size(); ++ke) {
      UniformSummaryRow row;
      row.m = m_list[mi];
      row.ensemble = kinds[ke];
      row.repetitions = repetitions;
      for (std::size_t rep = 0; rep < repetitions; ++rep) {
        const std::size_t t = (mi * kinds.size() + ke) * repetitions + rep;
        row.uniform_successes += uniform_ok[t] ? 1 : 0;
      }
      row.fraction = static_cast<double>(row.uniform_successes) / static_cast<double>(repetitions);
      rows.push_back(row);
    }
  }
  return rows;
}

// ---- CSV persistence ----

inline const char* trial_csv_columns() {
  return "trial_id,n,m,s,p,ensemble,solver,seed,rel_err,abs_err,noise_norm,residual,"
         "success_noiseless,success_noisy,wall_ms";
}

inline void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& records,
                             const std::vector<std::string>& header_comments) {
  for (const std::string& line : header_comments) os << "# " << line << '\n';
  os << trial_csv_columns() << '\n';
  for (const TrialRecord& r : records) {
    os << r.trial_id << ',' << r.n << ',' << r.m << ',' << r.s << ',' << format_double(r.p)
       << ',' << to_string(r.ensemble) << ',' << to_string(r.solver) << ',' << r.seed << ','
       << format_double(r.rel_err) << ',' << format_double(r.abs_err) << ','
       << format_double(r.noise_norm) << ',' << format_double(r.residual) << ','
       << (r.success_noiseless ? 1 : 0) << ',' << (r.success_noisy ? 1 : 0) << ','
       << format_double(r.wall_ms) << '\n';
  }
}

inline void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& records,
                             const std::vector<std::string>& header_comments) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for writing: " + path);
  write_trials_csv(os, records, header_comments);
  if (!os) throw io_error("write failed: " + path);
}

inline void write_grid_csv(std::ostream& os, const PhaseGrid& grid,
                           const std::vector<std::string>& header_comments) {
  for (const std::string& line : header_comments) os << "# " << line << '\n';
  os << "bin_delta,bin_r,delta_lo,delta_hi,r_lo,r_hi,trials,successes\n";
  const auto g = static_cast<double>(grid.bins);
  for (std::size_t i = 0; i < grid.bins; ++i) {
    for (std::size_t j = 0; j < grid.bins; ++j) {
      os << i << ',' << j << ',' << format_double(static_cast<double>(i) / g) << ','
         << format_double(static_cast<double>(i + 1) / g) << ','
         << format_double(static_cast<double>(j) / g) << ','
         << format_double(static_cast<double>(j + 1) / g) << ',' << grid.count[i * grid.bins + j]
         << ',' << grid.success[i * grid.bins + j] << '\n';
    }
  }
}

inline void write_grid_csv(const std::string& path, const PhaseGrid& grid,
                           const std::vector<std::string>& header_comments) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for writing: " + path);
  write_grid_csv(os, grid, header_comments);
  if (!os) throw io_error("write failed: " + path);
}

inline PhaseGrid read_grid_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open for reading: " + path);
  std::string line;
  bool have_header = false;
  std::vector<std::array<long, 4>> cells;  // i, j, trials, successes
  std::size_t bins = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {  // column header row
      have_header = true;
      continue;
    }
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t c = line.find(',', start);
      f.push_back(line.substr(start, c - start));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    if (f.size() != 8) throw io_error("grid csv: expected 8 fields in " + path);
    std::array<long, 4> cell{};
    cell[0] = std::stol(f[0]);
    cell[1] = std::stol(f[1]);
    cell[2] = std::stol(f[6]);
    cell[3] = std::stol(f[7]);
    if (cell[0] < 0 || cell[1] < 0 || cell[2] < 0 || cell[3] < 0 || cell[3] > cell[2])
      throw io_error("grid csv: invalid cell in " + path);
    bins = std::max({bins, static_cast<std::size_t>(cell[0]) + 1,
                     static_cast<std::size_t>(cell[1]) + 1});
    cells.push_back(cell);
  }
  if (cells.empty()) throw io_error("grid csv: no data rows in " + path);
  PhaseGrid grid(bins);
  for (const auto& cell : cells) {
    const std::size_t idx =
        static_cast<std::size_t>(cell[0]) * bins + static_cast<std::size_t>(cell[1]);
    grid.count[idx] = cell[2];
    grid.success[idx] = cell[3];
  }
  return grid;
}

inline void write_uniform_csv(std::ostream& os, const std::vector<UniformSummaryRow>& rows,
                              const std::vector<std::string>& header_comments) {
  for (const std::string& line : header_comments) os << "# " << line << '\n';
  os << "m,ensemble,repetitions,uniform_successes,fraction\n";
  for (const UniformSummaryRow& r : rows) {
    os << r.m << ',' << to_string(r.ensemble) << ',' << r.repetitions << ','
       << r.uniform_successes << ',' << format_double(r.fraction) << '\n';
  }
}

inline void write_uniform_csv(const std::string& path, const std::vector<UniformSummaryRow>& rows,
                              const std::vector<std::string>& header_comments) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for writing: " + path);
  write_uniform_csv(os, rows, header_comments);
  if (!os) throw io_error("write failed: " + path);
}

// Reads "key = value" pairs out of the '#' comment header of an output file,
// enough to replay the run that produced it.
inline std::vector<std::pair<std::string, std::string>> read_config_header(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open for reading: " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] != '#') break;
    std::string body = line.substr(1);
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string v) {
      const std::size_t a = v.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      const std::size_t b = v.find_last_not_of(" \t");
      return v.substr(a, b - a + 1);
    };
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!key.empty()) kv.emplace_back(key, value);
  }
  return kv;
}

}  // namespace nncs
