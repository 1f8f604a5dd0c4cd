#pragma once

// Single-quantum stick spectrum: lines between levels of adjacent
// magnetization blocks driven by the total raising operator sum_j S+_j.
// Intensities are |<f|S+|i>|^2 summed over each pair of degenerate levels,
// times the population weight of the initial level, so they do not depend
// on the eigenbasis chosen inside a degenerate subspace.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "essi/closed_form.hpp"
#include "essi/core.hpp"
#include "essi/engine.hpp"
#include "essi/verifier.hpp"

namespace essi {

/// hbar / k_B in K s: converts rad/s to kelvin.
inline constexpr double kHbarOverKb = 7.638232577577646e-12;

struct Population {
  enum class Kind { uniform, boltzmann };
  Kind kind = Kind::uniform;
  double temperature = 0.0;  // kelvin, boltzmann only

  static Population uniform() { return {}; }
  static Population boltzmann(double kelvin) {
    if (!(kelvin > 0.0) || !std::isfinite(kelvin)) {
      throw std::invalid_argument("Population: temperature must be positive");
    }
    return {Kind::boltzmann, kelvin};
  }
};

enum class DiagonalTrack { first_principles, reference_formula };

struct SpectralLine {
  double frequency = 0.0;  // rad/s
  double intensity = 0.0;
  Sector from_sector{0, 0};
  Sector to_sector{0, 0};
  int from_level = 0;  // ascending-energy level index inside its block
  int to_level = 0;
};

struct TransitionOptions {
  DiagonalTrack track = DiagonalTrack::first_principles;
  double min_intensity = 1e-12;
  std::optional<double> level_tau;  // level clustering; default per block
};

/// Energy levels of one block with their eigenvector column ranges.
struct BlockLevels {
  Sector sector{0, 0};
  Eigen::MatrixXd vectors;
  std::vector<double> energies;
  std::vector<Eigen::Index> first;  // first column of each level
  std::vector<Eigen::Index> count;
};

namespace detail {
inline double block_diagonal_energy(const Sector& s, const EssiParams& params, DiagonalTrack track) {
  return track == DiagonalTrack::reference_formula
             ? diagonal_energy_reference(s.n(), s.p(), params.omega0, params.coupling_A)
             : sector_diagonal_energy(s, params);
}

inline BlockLevels block_levels(const Sector& s, const EssiParams& params,
                                const TransitionOptions& opts) {
  const SectorMatrix ff = flipflop_block(s, params);
  const auto eig = symmetric_eigen(ff.dense(), {.want_vectors = true});
  const double shift = block_diagonal_energy(s, params, opts.track);
  BlockLevels out;
  out.sector = s;
  out.vectors = *eig.eigenvectors;
  const double tau = opts.level_tau.value_or(default_cluster_tolerance(eig.eigenvalues));
  Eigen::Index col = 0;
  for (const auto& c : cluster_eigenvalues(eig.eigenvalues, tau)) {
    out.energies.push_back(shift + c.value);
    out.first.push_back(col);
    out.count.push_back(static_cast<Eigen::Index>(c.count));
    col += static_cast<Eigen::Index>(c.count);
  }
  return out;
}
}  // namespace detail

/// Stick spectrum of the full Hamiltonian for n <= 12.
inline std::vector<SpectralLine> stick_spectrum(const EssiParams& params,
                                                const Population& population = Population::uniform(),
                                                const TransitionOptions& opts = {}) {
  params.validate();
  const int n = params.n;
  if (n > kMaxOracleSpins) {
    throw std::length_error("stick_spectrum: n=" + std::to_string(n) + " exceeds " +
                            std::to_string(kMaxOracleSpins));
  }
  std::vector<BlockLevels> blocks;
  blocks.reserve(static_cast<std::size_t>(n) + 1);
  for (int p = 0; p <= n; ++p) blocks.push_back(detail::block_levels(Sector(n, p), params, opts));

  // Level weights. Boltzmann weights are shifted by the ground energy and
  // normalized to 2^n total so the high-temperature limit is the uniform one.
  std::vector<std::vector<double>> weight(blocks.size());
  if (population.kind == Population::Kind::uniform) {
    for (std::size_t b = 0; b < blocks.size(); ++b) weight[b].assign(blocks[b].energies.size(), 1.0);
  } else {
    double e_min = std::numeric_limits<double>::infinity();
    for (const auto& blk : blocks) {
      for (double e : blk.energies) e_min = std::min(e_min, e);
    }
    const double beta = kHbarOverKb / population.temperature;
    double z = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t l = 0; l < blocks[b].energies.size(); ++l) {
        const double w = std::exp(-beta * (blocks[b].energies[l] - e_min));
        weight[b].push_back(w);
        z += w * static_cast<double>(blocks[b].count[l]);
      }
    }
    const double scale = std::ldexp(1.0, n) / z;
    for (auto& wb : weight) {
      for (double& w : wb) w *= scale;
    }
  }

  std::vector<SpectralLine> lines;
  for (int p = 0; p < n; ++p) {
    const auto& lo = blocks[static_cast<std::size_t>(p)];
    const auto& hi = blocks[static_cast<std::size_t>(p) + 1];
    const Eigen::MatrixXd elements = hi.vectors.transpose() * raising_block(lo.sector) * lo.vectors;
    for (std::size_t i = 0; i < lo.energies.size(); ++i) {
      for (std::size_t f = 0; f < hi.energies.size(); ++f) {
        const double strength =
            elements.block(hi.first[f], lo.first[i], hi.count[f], lo.count[i]).squaredNorm();
        const double intensity = strength * weight[static_cast<std::size_t>(p)][i];
        if (intensity < opts.min_intensity) continue;
        lines.push_back({hi.energies[f] - lo.energies[i], intensity, lo.sector, hi.sector,
                         static_cast<int>(i), static_cast<int>(f)});
      }
    }
  }
  return lines;
}

/// 1e-9 * max |frequency|.
inline double default_line_tolerance(const std::vector<SpectralLine>& lines) {
  double m = 0.0;
  for (const auto& l : lines) m = std::max(m, std::abs(l.frequency));
  return 1e-9 * m;
}

/// Sorts by frequency and merges runs whose neighbouring gaps are <= tau:
/// intensities add, the frequency becomes the intensity-weighted mean, and
/// the provenance fields of the strongest contributor are kept.
inline std::vector<SpectralLine> merge_lines(std::vector<SpectralLine> lines, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("merge_lines: tau must be non-negative");
  std::stable_sort(lines.begin(), lines.end(),
                   [](const SpectralLine& a, const SpectralLine& b) { return a.frequency < b.frequency; });
  std::vector<SpectralLine> out;
  double weighted = 0.0;
  double strongest = -1.0;
  double previous = 0.0;
  for (const auto& line : lines) {
    if (out.empty() || line.frequency - previous > tau) {
      if (!out.empty() && out.back().intensity > 0.0) out.back().frequency = weighted / out.back().intensity;
      out.push_back(line);
      weighted = line.frequency * line.intensity;
      strongest = line.intensity;
    } else {
      auto& m = out.back();
      if (line.intensity > strongest) {
        strongest = line.intensity;
        m.from_sector = line.from_sector;
        m.to_sector = line.to_sector;
        m.from_level = line.from_level;
        m.to_level = line.to_level;
      }
      m.intensity += line.intensity;
      weighted += line.frequency * line.intensity;
    }
    previous = line.frequency;
  }
  if (!out.empty() && out.back().intensity > 0.0) out.back().frequency = weighted / out.back().intensity;
  return out;
}

/// Tr(S- S+) over the full 2^n space from an explicitly assembled raising
/// operator (no sector machinery): the uniform-weight intensity sum rule.
inline double raising_trace_sum_rule(int n) {
  if (n < 1 || n > 10) throw std::invalid_argument("raising_trace_sum_rule: n outside [1, 10]");
  const std::size_t dim = std::size_t{1} << n;
  Eigen::MatrixXd raise = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (StateMask s = 0; s < dim; ++s) {
    for (int j = 0; j < n; ++j) {
      if (!((s >> j) & 1U)) raise(static_cast<Eigen::Index>(s | (StateMask{1} << j)), static_cast<Eigen::Index>(s)) += 1.0;
    }
  }
  return raise.squaredNorm();  // Tr(R^T R)
}

}  // namespace essi
