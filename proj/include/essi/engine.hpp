#pragma once

// Numerical side: flip-flop blocks (Johnson-graph adjacency scaled by B),
// first-principles diagonal energies, the full 2^n Hamiltonian used as a
// brute-force oracle, and a dense symmetric eigensolver wrapper (LAPACK
// divide and conquer on Eigen storage).

#include <Eigen/Dense>
#include <lapacke.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "essi/core.hpp"

namespace essi {

/// Largest block we store densely: C(14, 7).
inline constexpr Count kMaxDenseDimension = 3432;

using AdjacencyMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Flip-flop block of one sector: entries in {0, weight}, zero diagonal,
/// physical matrix = scale * adjacency.
struct SectorMatrix {
  Sector sector;
  AdjacencyMatrix adjacency;
  int weight = 1;
  double scale = 1.0;

  Eigen::Index dimension() const noexcept { return adjacency.rows(); }

  Eigen::MatrixXd dense() const { return adjacency.cast<double>() * scale; }
};

namespace detail {
inline void check_dense(const Sector& sector) {
  if (sector.dimension() > kMaxDenseDimension) {
    throw std::length_error("sector (" + std::to_string(sector.n()) + "," +
                            std::to_string(sector.p()) + ") of dimension " +
                            std::to_string(sector.dimension()) +
                            " exceeds the dense limit " +
                            std::to_string(kMaxDenseDimension));
  }
}
}  // namespace detail

/// Johnson graph J(n, p) adjacency in rank order: two states are joined iff
/// they differ by exchanging one up position with one down position.
/// Built by neighbour generation, O(z p (n - p)).
inline SectorMatrix build_sector_adjacency(const Sector& sector) {
  detail::check_dense(sector);
  const int n = sector.n();
  const auto states = sector_states(sector);
  const auto z = static_cast<Eigen::Index>(states.size());
  SectorMatrix out{sector, AdjacencyMatrix::Zero(z, z), 1, 1.0};
  const SubsetRanker ranker(n);
  for (Eigen::Index alpha = 0; alpha < z; ++alpha) {
    const StateMask m = states[static_cast<std::size_t>(alpha)];
    for (int up = 0; up < n; ++up) {
      if (!(m & (StateMask{1} << up))) continue;
      for (int down = 0; down < n; ++down) {
        if (m & (StateMask{1} << down)) continue;
        const StateMask neighbour = m ^ (StateMask{1} << up) ^ (StateMask{1} << down);
        const auto beta = static_cast<Eigen::Index>(ranker.rank(neighbour));
        if (beta > alpha) {
          out.adjacency(alpha, beta) = 1;
          out.adjacency(beta, alpha) = 1;
        }
      }
    }
  }
  return out;
}

/// Flip-flop block with the physical scale: weight w = 1 (unordered pairs)
/// or 2 (ordered pairs), scale B.
inline SectorMatrix flipflop_block(const Sector& sector, const EssiParams& params) {
  params.validate();
  SectorMatrix out = build_sector_adjacency(sector);
  out.weight = params.weight();
  out.adjacency *= static_cast<std::int8_t>(out.weight);
  out.scale = params.coupling_B;
  return out;
}

/// sum_{f<j} m_f m_j within block (n, p) equals (M^2 - n/4)/2, M = p - n/2.
inline Rational pair_zz_sum(int n, int p) {
  const std::int64_t twice_m = 2 * static_cast<std::int64_t>(p) - n;
  // (M^2 - n/4)/2 = ((2M)^2 - n)/8
  return Rational(twice_m * twice_m - n, 8);
}

/// omega0 M + A w sum_{f<j} m_f m_j for one product state.
inline double diagonal_energy_first_principles(const BasisState& state, const EssiParams& params) {
  params.validate();
  if (state.n() != params.n) {
    throw std::invalid_argument("diagonal_energy_first_principles: state n differs from params n");
  }
  return params.omega0 * magnetization(state) +
         params.coupling_A * params.weight() * pair_zz_sum(state.n(), state.up_count()).to_double();
}

/// Same value for every state of a block.
inline double sector_diagonal_energy(const Sector& sector, const EssiParams& params) {
  return params.omega0 * (sector.p() - 0.5 * sector.n()) +
         params.coupling_A * params.weight() * pair_zz_sum(sector.n(), sector.p()).to_double();
}

/// Full block of the Hamiltonian: diagonal energy on the diagonal plus the
/// scaled flip-flop block.
inline Eigen::MatrixXd sector_hamiltonian(const Sector& sector, const EssiParams& params) {
  Eigen::MatrixXd h = flipflop_block(sector, params).dense();
  h.diagonal().array() += sector_diagonal_energy(sector, params);
  return h;
}

/// Product basis ordered by (p ascending, lexicographic rank).
inline std::vector<StateMask> full_basis_order(int n) {
  std::vector<StateMask> order;
  order.reserve(std::size_t{1} << n);
  for (int p = 0; p <= n; ++p) {
    const auto s = sector_states(Sector(n, p));
    order.insert(order.end(), s.begin(), s.end());
  }
  return order;
}

/// Full 2^n Hamiltonian in the (p, rank) product basis. Built by applying
/// each pair term to each bit state directly, with no use of the sector
/// machinery, so it can serve as an independent check of it.
inline Eigen::MatrixXd build_full_hamiltonian(const EssiParams& params) {
  params.validate();
  const int n = params.n;
  if (n > kMaxOracleSpins) {
    throw std::length_error("build_full_hamiltonian: n=" + std::to_string(n) +
                            " exceeds " + std::to_string(kMaxOracleSpins));
  }
  const auto order = full_basis_order(n);
  const std::size_t dim = order.size();
  std::vector<Eigen::Index> position(dim);
  for (std::size_t i = 0; i < dim; ++i) position[order[i]] = static_cast<Eigen::Index>(i);

  const double w = params.weight();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  for (StateMask s = 0; s < dim; ++s) {
    const Eigen::Index row = position[s];
    double diag = 0.0;
    for (int j = 0; j < n; ++j) diag += params.omega0 * ((s >> j) & 1U ? 0.5 : -0.5);
    for (int f = 0; f < n; ++f) {
      for (int j = f + 1; j < n; ++j) {
        const bool uf = (s >> f) & 1U;
        const bool uj = (s >> j) & 1U;
        diag += params.coupling_A * w * (uf == uj ? 0.25 : -0.25);
        if (uf != uj) {
          // S-_j S+_f + S+_j S-_f exchanges the two spins with unit amplitude
          const StateMask t = s ^ (StateMask{1} << f) ^ (StateMask{1} << j);
          h(position[t], row) += params.coupling_B * w;
        }
      }
    }
    h(row, row) += diag;
  }
  return h;
}

struct EigenOptions {
  bool want_vectors = false;
  double tol_eig = 1e-10;
  double tol_orth = 1e-10;
};

struct SectorEigenResult {
  Eigen::VectorXd eigenvalues;                 // ascending
  std::optional<Eigen::MatrixXd> eigenvectors;  // orthonormal columns
  std::optional<double> residual_bound;         // max_i |H v_i - l_i v_i|_2
};

class EigenSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Make the largest-magnitude component of each column positive; ties go to
/// the lowest index.
inline void fix_eigenvector_phases(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best_abs * (1.0 + 1e-12)) {
        best_abs = a;
        best = r;
      }
    }
    if (vectors(best, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

/// Full spectrum of a dense real symmetric matrix. Rejects asymmetric input
/// (max |H - H^T| > 1e-12 |H|_F) and checks residuals and orthonormality
/// when eigenvectors are requested.
inline SectorEigenResult symmetric_eigen(const Eigen::MatrixXd& h, const EigenOptions& opts = {}) {
  if (h.rows() != h.cols()) throw std::invalid_argument("symmetric_eigen: matrix is not square");
  if (!h.allFinite()) throw std::invalid_argument("symmetric_eigen: non-finite entries");
  const double norm = h.norm();
  if (h.size() > 0) {
    const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * norm) {
      throw std::invalid_argument("symmetric_eigen: matrix is not symmetric");
    }
  }
  SectorEigenResult out;
  if (h.rows() == 0) {
    out.eigenvalues.resize(0);
    return out;
  }
  // Eigen's QL sweep cap is too small for some highly degenerate blocks
  // (it gives up on (14,5)); divide and conquer copes with them.
  Eigen::MatrixXd work = h;
  out.eigenvalues.resize(h.rows());
  const auto dim = static_cast<lapack_int>(h.rows());
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, opts.want_vectors ? 'V' : 'N', 'L', dim, work.data(), dim,
                                         out.eigenvalues.data());
  if (info != 0) {
    throw EigenSolverError("symmetric_eigen: eigensolver did not converge (info " + std::to_string(info) + ")");
  }
  if (opts.want_vectors) {
    Eigen::MatrixXd v = std::move(work);
    fix_eigenvector_phases(v);
    const Eigen::MatrixXd residual = h * v - v * out.eigenvalues.asDiagonal();
    const double res = residual.colwise().norm().maxCoeff();
    const double orth =
        (v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
    if (res > opts.tol_eig * norm) {
      throw EigenSolverError("symmetric_eigen: residual " + std::to_string(res) +
                             " exceeds tolerance");
    }
    if (orth > opts.tol_orth) {
      throw EigenSolverError("symmetric_eigen: eigenvectors not orthonormal (" +
                             std::to_string(orth) + ")");
    }
    out.eigenvectors = std::move(v);
    out.residual_bound = res;
  }
  return out;
}

/// Spin raising operator sum_j S+_j from block (n, p) into (n, p + 1):
/// a C(n,p+1) x C(n,p) 0/1 matrix in rank order.
inline Eigen::MatrixXd raising_block(const Sector& from) {
  if (from.p() >= from.n()) {
    throw std::invalid_argument("raising_block: no sector above p = n");
  }
  const Sector to(from.n(), from.p() + 1);
  detail::check_dense(from);
  detail::check_dense(to);
  const auto states = sector_states(from);
  const SubsetRanker ranker(from.n());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(to.dimension()),
                                            static_cast<Eigen::Index>(states.size()));
  for (std::size_t col = 0; col < states.size(); ++col) {
    const StateMask m = states[col];
    for (int j = 0; j < from.n(); ++j) {
      if (m & (StateMask{1} << j)) continue;
      r(static_cast<Eigen::Index>(ranker.rank(m | (StateMask{1} << j))),
        static_cast<Eigen::Index>(col)) = 1.0;
    }
  }
  return r;
}

}  // namespace essi
