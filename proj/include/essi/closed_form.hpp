#pragma once

// Closed-form spectrum of the equal-coupling Hamiltonian: the diagonal
// (Zeeman + longitudinal) level of each magnetization block, and the
// distinct eigenvalues and degeneracies of the flip-flop part. Flip-flop
// eigenvalues and degeneracies are exact integers in units of B; doubles
// only appear once a physical B is applied.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "essi/core.hpp"

namespace essi {

namespace detail {
inline void check_block(int n, int p) {
  if (n < 0 || n > kMaxBinomialN || p < 0 || p > n) {
    throw std::invalid_argument("invalid block (n=" + std::to_string(n) +
                                ", p=" + std::to_string(p) + ")");
  }
}

inline void check_level(int n, int p, int k) {
  check_block(n, p);
  const int q = std::min(p, n - p);
  if (k < 0 || k > q) {
    throw std::out_of_range("level index k=" + std::to_string(k) +
                            " outside [0, " + std::to_string(q) + "]");
  }
}
}  // namespace detail

/// Longitudinal coefficient of the reference diagonal energy,
/// (3p^2 - 3np + n^2 - n)/4, exactly.
inline Rational diagonal_a_coefficient_reference(int n, int p) {
  detail::check_block(n, p);
  const std::int64_t nn = n;
  const std::int64_t pp = p;
  return Rational(3 * pp * pp - 3 * nn * pp + nn * nn - nn, 4);
}

/// Reference diagonal energy omega0 (2p - n)/2 + A (3p^2 - 3np + n^2 - n)/4,
/// taken verbatim. It does not agree with the first-principles diagonal of
/// the model (see engine.hpp and diagonal_formula_discrepancy).
inline double diagonal_energy_reference(int n, int p, double omega0, double coupling_A) {
  return omega0 * (2.0 * p - n) / 2.0 +
         coupling_A * diagonal_a_coefficient_reference(n, p).to_double();
}

/// Number of distinct flip-flop eigenvalues in block (n, p): min(p, n-p) + 1.
inline int distinct_eigenvalue_count(int n, int p) {
  detail::check_block(n, p);
  return std::min(p, n - p) + 1;
}

/// -q + k(n - 2q + 1) + k^2 with q = min(p, n - p), in units of B.
inline std::int64_t flipflop_eigenvalue_units(int n, int p, int k) {
  detail::check_level(n, p, k);
  const std::int64_t q = std::min(p, n - p);
  const std::int64_t kk = k;
  return -q + kk * (n - 2 * q + 1) + kk * kk;
}

inline double flipflop_eigenvalue(int n, int p, int k, double coupling_B) {
  return coupling_B * static_cast<double>(flipflop_eigenvalue_units(n, p, k));
}

/// C(n, q-k) - C(n, q-k-1); the zero-extended binomial makes k = q give
/// C(n, 0) = 1.
inline Count flipflop_degeneracy(int n, int p, int k) {
  detail::check_level(n, p, k);
  const int q = std::min(p, n - p);
  return binomial(n, q - k) - binomial(n, q - k - 1);
}

struct ClosedFormLevel {
  int k = 0;
  std::int64_t epsilon_units = 0;  // flip-flop eigenvalue / B
  Count degeneracy = 0;
  double flipflop_energy = 0.0;  // rad/s
  double total_energy = 0.0;     // diagonal + flip-flop, rad/s
};

struct ClosedFormSpectrum {
  Sector sector;
  double diagonal_energy = 0.0;
  std::vector<ClosedFormLevel> levels;  // ascending k, hence ascending epsilon
};

/// Every level of a block: reference diagonal energy plus each flip-flop
/// eigenvalue, with its degeneracy.
inline ClosedFormSpectrum sector_closed_spectrum(const EssiParams& params, const Sector& sector) {
  params.validate();
  if (sector.n() != params.n) {
    throw std::invalid_argument("sector_closed_spectrum: sector n differs from params n");
  }
  const int n = sector.n();
  const int p = sector.p();
  ClosedFormSpectrum out{sector,
                         diagonal_energy_reference(n, p, params.omega0, params.coupling_A),
                         {}};
  const int count = distinct_eigenvalue_count(n, p);
  out.levels.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    ClosedFormLevel level;
    level.k = k;
    level.epsilon_units = flipflop_eigenvalue_units(n, p, k);
    level.degeneracy = flipflop_degeneracy(n, p, k);
    level.flipflop_energy = params.coupling_B * static_cast<double>(level.epsilon_units);
    level.total_energy = out.diagonal_energy + level.flipflop_energy;
    out.levels.push_back(level);
  }
  return out;
}

/// Total spin of level k in block (n, p): S = n/2 - q + k. Returned doubled
/// so it stays integral.
inline int level_twice_total_spin(int n, int p, int k) {
  detail::check_level(n, p, k);
  return n - 2 * std::min(p, n - p) + 2 * k;
}

}  // namespace essi
