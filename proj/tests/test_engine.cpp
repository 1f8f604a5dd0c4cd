#include <gtest/gtest.h>

#include <bit>

#include "essi/engine.hpp"
#include "oracles.hpp"

using namespace essi;

namespace {

EssiParams make_params(int n, double w0, double a, double b,
                       PairConvention c = PairConvention::unordered_distinct) {
  EssiParams p;
  p.n = n;
  p.omega0 = w0;
  p.coupling_A = a;
  p.coupling_B = b;
  p.pair_convention = c;
  return p;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST(SectorAdjacency, SmallExamples) {
  const auto a31 = build_sector_adjacency(Sector(3, 1));
  AdjacencyMatrix expected(3, 3);
  expected << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  EXPECT_EQ(a31.adjacency, expected);

  const auto a50 = build_sector_adjacency(Sector(5, 0));
  ASSERT_EQ(a50.dimension(), 1);
  EXPECT_EQ(a50.adjacency(0, 0), 0);
}

TEST(SectorAdjacency, FiveTwoFirstRow) {
  const auto a = build_sector_adjacency(Sector(5, 2));
  // row of {1,2}: neighbours {1,3},{1,4},{1,5},{2,3},{2,4},{2,5} -> ranks 1..6
  for (Eigen::Index c = 0; c < 10; ++c) EXPECT_EQ(a.adjacency(0, c), (c >= 1 && c <= 6) ? 1 : 0) << c;
  EXPECT_EQ(a.adjacency.row(0).cast<int>().sum(), 6);
}

TEST(SectorAdjacency, MatchesAllPairsXorOracle) {
  for (int n = 1; n <= 8; ++n) {
    for (int p = 0; p <= n; ++p) {
      const auto lex = oracle::lex_subsets(n, p);
      const auto a = build_sector_adjacency(Sector(n, p));
      for (std::size_t i = 0; i < lex.size(); ++i) {
        for (std::size_t j = 0; j < lex.size(); ++j) {
          std::uint32_t mi = 0, mj = 0;
          for (int x : lex[i]) mi |= 1U << (x - 1);
          for (int x : lex[j]) mj |= 1U << (x - 1);
          const int want = std::popcount(mi ^ mj) == 2 ? 1 : 0;
          ASSERT_EQ(a.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), want);
        }
      }
    }
  }
}

TEST(SectorAdjacency, RegularityAndTraces) {
  for (int n = 1; n <= 12; ++n) {
    for (int p = 0; p <= n; ++p) {
      const auto a = build_sector_adjacency(Sector(n, p));
      const Eigen::MatrixXi m = a.adjacency.cast<int>();
      EXPECT_EQ(m, m.transpose());
      EXPECT_EQ(m.trace(), 0);
      for (Eigen::Index r = 0; r < m.rows(); ++r) ASSERT_EQ(m.row(r).sum(), p * (n - p));
      const long long sq = (m.cast<long long>().array().square()).sum();  // trace(A^2)
      EXPECT_EQ(sq, static_cast<long long>(binomial(n, p)) * p * (n - p));
    }
  }
}

TEST(SectorAdjacency, RejectsOversizedBlocks) {
  EXPECT_THROW(build_sector_adjacency(Sector(15, 7)), std::length_error);
  EXPECT_NO_THROW(build_sector_adjacency(Sector(15, 1)));
}

TEST(FlipflopBlock, ConventionsScaleSpectrum) {
  const auto unordered = flipflop_block(Sector(5, 2), make_params(5, 0, 0, 1));
  const auto e1 = symmetric_eigen(unordered.dense());
  const std::vector<double> want1{-2, -2, -2, -2, -2, 1, 1, 1, 1, 6};
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(e1.eigenvalues(i), want1[i], 1e-12);

  const auto ordered = flipflop_block(Sector(5, 2), make_params(5, 0, 0, 1, PairConvention::ordered_distinct));
  EXPECT_EQ(ordered.weight, 2);
  const auto e2 = symmetric_eigen(ordered.dense());
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(e2.eigenvalues(i), 2 * want1[i], 1e-12);
  const Eigen::MatrixXi twice = ordered.adjacency.cast<int>();
  EXPECT_EQ(twice.row(0).sum(), 2 * 6);

  const auto two = symmetric_eigen(flipflop_block(Sector(2, 1), make_params(2, 0, 0, 3)).dense());
  EXPECT_NEAR(two.eigenvalues(0), -3.0, 1e-14);
  EXPECT_NEAR(two.eigenvalues(1), 3.0, 1e-14);
}

TEST(DiagonalEnergyFirstPrinciples, Examples) {
  const double w0 = 1.7, a = 0.9;
  EXPECT_DOUBLE_EQ(diagonal_energy_first_principles(BasisState(2, 0b01), make_params(2, 0, a, 0)), -a / 4);
  EXPECT_DOUBLE_EQ(diagonal_energy_first_principles(BasisState(5, 0b00011), make_params(5, w0, a, 0)),
                   -w0 / 2 - a / 2);
  EXPECT_DOUBLE_EQ(diagonal_energy_first_principles(BasisState(3, 0b111), make_params(3, w0, a, 0)),
                   1.5 * w0 + 0.75 * a);
  EXPECT_EQ(pair_zz_sum(5, 2), Rational(-1, 2));
}

TEST(DiagonalEnergyFirstPrinciples, MatchesExplicitPairSum) {
  for (int n = 1; n <= 10; ++n) {
    for (StateMask m = 0; m < (StateMask{1} << n); ++m) {
      double pairs = 0.0;
      for (int f = 0; f < n; ++f) {
        for (int j = f + 1; j < n; ++j) {
          const double mf = (m >> f) & 1U ? 0.5 : -0.5;
          const double mj = (m >> j) & 1U ? 0.5 : -0.5;
          pairs += mf * mj;
        }
      }
      ASSERT_DOUBLE_EQ(pair_zz_sum(n, std::popcount(m)).to_double(), pairs);
    }
  }
}

TEST(FullHamiltonian, SmallExamples) {
  const auto h1 = build_full_hamiltonian(make_params(1, 2.0, 0, 0));
  EXPECT_DOUBLE_EQ(h1(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(h1(1, 1), 1.0);

  const auto e2 = symmetric_eigen(build_full_hamiltonian(make_params(2, 0, 0, 1)));
  const std::vector<double> want{-1, 0, 0, 1};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(e2.eigenvalues(i), want[i], 1e-14);
  EXPECT_THROW(build_full_hamiltonian(make_params(13, 0, 0, 1)), std::length_error);
}

TEST(FullHamiltonian, BlockDiagonalAndEqualsSectorAssembly) {
  for (int n = 1; n <= 8; ++n) {
    const auto params = make_params(n, 1.1, -0.6, 0.8);
    const auto h = build_full_hamiltonian(params);
    Eigen::Index offset = 0;
    for (int p = 0; p <= n; ++p) {
      const auto block = sector_hamiltonian(Sector(n, p), params);
      const Eigen::Index z = block.rows();
      EXPECT_LT((h.block(offset, offset, z, z) - block).cwiseAbs().maxCoeff(), 1e-14);
      // nothing couples this block to the rest of the space
      EXPECT_EQ(h.block(offset, 0, z, offset).cwiseAbs().sum(), 0.0);
      offset += z;
    }
  }
}

TEST(FullHamiltonian, SpectrumMatchesKroneckerOracle) {
  for (int n = 1; n <= 6; ++n) {
    for (auto conv : {PairConvention::unordered_distinct, PairConvention::ordered_distinct}) {
      const auto params = make_params(n, 0.9, 1.3, -0.45, conv);
      const auto ours = symmetric_eigen(build_full_hamiltonian(params)).eigenvalues;
      const auto ref = oracle::sorted_eigenvalues(oracle::kron_hamiltonian(n, 0.9, 1.3, -0.45, pair_weight(conv)));
      EXPECT_LT((ours - ref).cwiseAbs().maxCoeff(), 1e-10) << n;
    }
  }
}

TEST(SymmetricEigen, TrivialCases) {
  Eigen::MatrixXd one(1, 1);
  one << 4.25;
  EXPECT_EQ(symmetric_eigen(one).eigenvalues(0), 4.25);

  Eigen::MatrixXd pauli(2, 2);
  pauli << 0, 1, 1, 0;
  const auto e = symmetric_eigen(pauli, {.want_vectors = true});
  EXPECT_NEAR(e.eigenvalues(0), -1.0, 1e-15);
  EXPECT_NEAR(e.eigenvalues(1), 1.0, 1e-15);
  ASSERT_TRUE(e.eigenvectors.has_value());
  ASSERT_TRUE(e.residual_bound.has_value());
  // phase: largest component positive, lowest index on ties
  EXPECT_GT((*e.eigenvectors)(0, 0), 0.0);
  EXPECT_GT((*e.eigenvectors)(0, 1), 0.0);
}

TEST(SymmetricEigen, RejectsAsymmetricInput) {
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 0.5, 0;
  EXPECT_THROW(symmetric_eigen(m), std::invalid_argument);
  Eigen::MatrixXd rect(2, 3);
  rect.setZero();
  EXPECT_THROW(symmetric_eigen(rect), std::invalid_argument);
}

TEST(SymmetricEigen, ReconstructionAndOrthonormality) {
  for (int n = 1; n <= 10; ++n) {
    for (int p = 0; p <= n; ++p) {
      if (binomial(n, p) > 1000) continue;
      const auto h = sector_hamiltonian(Sector(n, p), make_params(n, 0.3, 0.2, 1.0));
      const auto e = symmetric_eigen(h, {.want_vectors = true});
      const auto& v = *e.eigenvectors;
      const Eigen::MatrixXd rebuilt = v * e.eigenvalues.asDiagonal() * v.transpose();
      EXPECT_LE((rebuilt - h).norm(), 1e-8 * std::max(1.0, h.norm()));
      EXPECT_LE((v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE(*e.residual_bound, 1e-10 * h.norm());
    }
  }
}

TEST(SymmetricEigen, Deterministic) {
  const auto h = flipflop_block(Sector(9, 4), make_params(9, 0, 0, 1)).dense();
  const auto a = symmetric_eigen(h, {.want_vectors = true});
  const auto b = symmetric_eigen(h, {.want_vectors = true});
  EXPECT_EQ(to_vec(a.eigenvalues), to_vec(b.eigenvalues));
  EXPECT_TRUE(*a.eigenvectors == *b.eigenvectors);
}

TEST(SymmetricEigen, PerronValueIsTopEigenvalue) {
  for (int n = 1; n <= 12; ++n) {
    for (int p = 1; p < n; ++p) {
      const auto e = symmetric_eigen(build_sector_adjacency(Sector(n, p)).dense());
      EXPECT_NEAR(e.eigenvalues(e.eigenvalues.size() - 1), static_cast<double>(p) * (n - p), 1e-9);
    }
  }
}

TEST(RaisingBlock, MatchesKroneckerOracleNorm) {
  for (int n = 1; n <= 6; ++n) {
    double ours = 0.0;
    for (int p = 0; p < n; ++p) ours += raising_block(Sector(n, p)).squaredNorm();
    EXPECT_DOUBLE_EQ(ours, oracle::kron_total_raising(n).squaredNorm());
  }
  EXPECT_THROW(raising_block(Sector(3, 3)), std::invalid_argument);
}
