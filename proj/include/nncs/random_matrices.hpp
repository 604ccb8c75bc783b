#pragma once

// Measurement ensembles and synthetic signals. All draws go through
// SeededRng; entries are generated in storage order (column-major for
// matrices), supports before values for sparse signals, so a seed pins the
// full object.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "nncs/core.hpp"
#include "nncs/rng.hpp"

namespace nncs {

enum class EnsembleKind { bernoulli01, gaussian, identity };

inline const char* to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::bernoulli01: return "bernoulli01";
    case EnsembleKind::gaussian: return "gaussian";
    case EnsembleKind::identity: return "identity";
  }
  return "?";
}

inline EnsembleKind parse_ensemble(const std::string& name) {
  if (name == "bernoulli01") return EnsembleKind::bernoulli01;
  if (name == "gaussian") return EnsembleKind::gaussian;
  if (name == "identity") return EnsembleKind::identity;
  throw std::invalid_argument("parse_ensemble: unknown ensemble '" + name + "'");
}

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::bernoulli01;
  std::size_t m = 0;
  std::size_t n = 0;
  double p = 0.5;  // Bernoulli parameter; ignored for gaussian/identity
  std::uint64_t seed = 0;
};

// m x n with i.i.d. {0,1} entries, P(1) = p.
inline DenseMatrix bernoulli01_matrix(std::size_t m, std::size_t n, double p, std::uint64_t seed) {
  if (m == 0 || n == 0) throw std::invalid_argument("bernoulli01_matrix: empty dimensions");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli01_matrix: p outside [0,1]");
  DenseMatrix A(m, n);
  SeededRng rng(seed);
  for (double& a : A.data()) a = rng.next_bernoulli(p) ? 1.0 : 0.0;
  return A;
}

// m x n with i.i.d. N(0, 1/m) entries (columns have unit expected norm).
inline DenseMatrix gaussian_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || n == 0) throw std::invalid_argument("gaussian_matrix: empty dimensions");
  DenseMatrix A(m, n);
  SeededRng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (double& a : A.data()) a = scale * rng.next_gaussian();
  return A;
}

inline DenseMatrix generate(const EnsembleSpec& spec) {
  switch (spec.kind) {
    case EnsembleKind::bernoulli01:
      return bernoulli01_matrix(spec.m, spec.n, spec.p, spec.seed);
    case EnsembleKind::gaussian:
      return gaussian_matrix(spec.m, spec.n, spec.seed);
    case EnsembleKind::identity:  // debug ensemble, no randomness
      if (spec.m != spec.n) throw std::invalid_argument("generate: identity needs m == n");
      return DenseMatrix::identity(spec.m);
  }
  throw std::invalid_argument("generate: unknown ensemble kind");
}

// Nonnegative s-sparse signal: the support is the first s entries of a
// uniform random permutation of {0..n-1} (partial Fisher-Yates, s steps),
// the values are |N(0,1)| drawn in support order.
inline Vec sparse_nonneg_signal(std::size_t n, std::size_t s, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sparse_nonneg_signal: n must be positive");
  if (s < 1 || s > n) throw std::invalid_argument("sparse_nonneg_signal: need 1 <= s <= n");
  SeededRng rng(seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(perm[i], perm[j]);
  }
  Vec x(n, 0.0);
  for (std::size_t i = 0; i < s; ++i) x[perm[i]] = std::abs(rng.next_gaussian());
  return x;
}

// i.i.d. N(0, sigma^2) noise of length m.
inline Vec gaussian_noise(std::size_t m, double sigma, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("gaussian_noise: m must be positive");
  if (sigma < 0.0) throw std::invalid_argument("gaussian_noise: sigma must be nonnegative");
  SeededRng rng(seed);
  Vec e(m);
  for (double& v : e) v = sigma * rng.next_gaussian();
  return e;
}

}  // namespace nncs
