#pragma once

// Parameters, product basis states, magnetization sectors, exact
// combinatorics and the pair-coupling helpers used to derive the averaged
// ESSI constants from site-resolved couplings.

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace essi {

/// Exact unsigned counts (binomials, block dimensions, degeneracies).
using Count = std::uint64_t;

/// Up-spin bit mask: bit i set <=> spin at position i+1 has m = +1/2.
using StateMask = std::uint32_t;

inline constexpr int kMaxSpins = 24;         // basis enumeration
inline constexpr int kMaxDenseSpins = 14;    // dense sector eigensolves
inline constexpr int kMaxOracleSpins = 12;   // full 2^n matrices
inline constexpr int kMaxBinomialN = 64;

enum class PairConvention {
  unordered_distinct,  // sum over f < j
  ordered_distinct,    // sum over all f != j
};

/// Multiplicity of each unordered pair in a pair sum under `c`.
constexpr int pair_weight(PairConvention c) noexcept {
  return c == PairConvention::ordered_distinct ? 2 : 1;
}

inline std::string to_string(PairConvention c) {
  return c == PairConvention::ordered_distinct ? "ordered-distinct"
                                               : "unordered-distinct";
}

inline PairConvention parse_pair_convention(const std::string& s) {
  if (s == "unordered-distinct" || s == "unordered") {
    return PairConvention::unordered_distinct;
  }
  if (s == "ordered-distinct" || s == "ordered") {
    return PairConvention::ordered_distinct;
  }
  throw std::invalid_argument("unknown pair convention '" + s + "'");
}

/// Physical parameters of the equal-coupling Hamiltonian. hbar = 1, so all
/// energies are angular frequencies (rad/s).
struct EssiParams {
  int n = 1;
  double omega0 = 0.0;
  double coupling_A = 0.0;
  double coupling_B = 0.0;
  PairConvention pair_convention = PairConvention::unordered_distinct;

  void validate() const {
    if (n < 1 || n > kMaxSpins) {
      throw std::invalid_argument("spin count n=" + std::to_string(n) +
                                  " outside [1, " + std::to_string(kMaxSpins) +
                                  "]");
    }
    if (!std::isfinite(omega0) || !std::isfinite(coupling_A) ||
        !std::isfinite(coupling_B)) {
      throw std::invalid_argument("couplings must be finite");
    }
  }

  int weight() const noexcept { return pair_weight(pair_convention); }
};

// ---------------------------------------------------------------------------
// Exact arithmetic

/// C(n, k), zero-extended: 0 for k < 0 or k > n. Throws on n outside
/// [0, 64] and on overflow of the 64-bit result.
inline Count binomial(int n, int k) {
  if (n < 0 || n > kMaxBinomialN) {
    throw std::domain_error("binomial: n=" + std::to_string(n) +
                            " outside [0, 64]");
  }
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  Count result = 1;
  for (int i = 1; i <= k; ++i) {
    // result * (n - k + i) / i is exact at every step; split by the gcd so
    // the intermediate product stays as small as possible.
    Count num = static_cast<Count>(n - k + i);
    Count den = static_cast<Count>(i);
    const Count g = std::gcd(result, den);
    const Count reduced = result / g;
    den /= g;
    num /= den;  // den divides num once result's share is removed
    Count next = 0;
    if (__builtin_mul_overflow(reduced, num, &next)) {
      throw std::overflow_error("binomial: C(" + std::to_string(n) + "," +
                                std::to_string(k) + ") overflows 64 bits");
    }
    result = next;
  }
  return result;
}

/// Normalized exact rational with 64-bit parts; enough for the quarter-valued
/// energy coefficients compared here.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num(value) {}  // NOLINT
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::domain_error("Rational: zero denominator");
    normalize();
  }

  double to_double() const noexcept {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  friend Rational operator+(Rational a, Rational b) {
    return {a.num * b.den + b.num * a.den, a.den * b.den};
  }
  friend Rational operator-(Rational a, Rational b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend Rational operator*(Rational a, Rational b) {
    return {a.num * b.num, a.den * b.den};
  }
  friend bool operator==(const Rational&, const Rational&) = default;

  std::string str() const {
    return den == 1 ? std::to_string(num)
                    : std::to_string(num) + "/" + std::to_string(den);
  }

 private:
  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
};

// ---------------------------------------------------------------------------
// Sectors and basis states

/// Magnetization block with p up spins out of n; dimension C(n, p).
class Sector {
 public:
  Sector(int n, int p) : n_(n), p_(p) {
    if (n < 0 || n > kMaxSpins || p < 0 || p > n) {
      throw std::invalid_argument("invalid sector (n=" + std::to_string(n) +
                                  ", p=" + std::to_string(p) + ")");
    }
  }

  int n() const noexcept { return n_; }
  int p() const noexcept { return p_; }
  /// min(p, n - p): the reflected index the closed forms are evaluated at.
  int reduced_p() const noexcept { return std::min(p_, n_ - p_); }
  Count dimension() const { return binomial(n_, p_); }

  auto operator<=>(const Sector&) const = default;

 private:
  int n_;
  int p_;
};

/// Product state |m_1, ..., m_n> stored as an up-position bit mask.
class BasisState {
 public:
  BasisState(int n, StateMask mask) : n_(n), mask_(mask) {
    if (n < 0 || n > kMaxSpins) {
      throw std::invalid_argument("BasisState: n outside [0, 24]");
    }
    if (n < 32 && (mask >> n) != 0) {
      throw std::invalid_argument("BasisState: bits set beyond position n");
    }
  }

  /// From 1-based up positions.
  static BasisState from_positions(int n, std::span<const int> positions) {
    StateMask mask = 0;
    for (int pos : positions) {
      if (pos < 1 || pos > n) {
        throw std::invalid_argument("BasisState: position " +
                                    std::to_string(pos) + " outside [1, n]");
      }
      const StateMask bit = StateMask{1} << (pos - 1);
      if (mask & bit) {
        throw std::invalid_argument("BasisState: repeated position");
      }
      mask |= bit;
    }
    return BasisState(n, mask);
  }

  int n() const noexcept { return n_; }
  StateMask mask() const noexcept { return mask_; }
  int up_count() const noexcept { return std::popcount(mask_); }
  Sector sector() const { return Sector(n_, up_count()); }

  std::vector<int> positions() const {
    std::vector<int> out;
    for (int i = 0; i < n_; ++i) {
      if (mask_ & (StateMask{1} << i)) out.push_back(i + 1);
    }
    return out;
  }

  /// "+,-,-,..." with position 1 first.
  std::string label() const {
    std::string s;
    for (int i = 0; i < n_; ++i) {
      if (i) s += ',';
      s += (mask_ & (StateMask{1} << i)) ? '+' : '-';
    }
    return s;
  }

  bool operator==(const BasisState&) const = default;

 private:
  int n_;
  StateMask mask_;
};

/// Total S^z eigenvalue p - n/2.
inline double magnetization(const BasisState& state) {
  return state.up_count() - 0.5 * state.n();
}

// ---------------------------------------------------------------------------
// Lexicographic ranking of p-subsets of {1..n}

/// The r-th p-subset of {1..n}, ascending, in lexicographic order of the
/// ascending position tuples.
inline std::vector<int> unrank_subset(int n, int p, Count rank) {
  const Count total = binomial(n, p);
  if (p < 0 || p > n || rank >= total) {
    throw std::out_of_range("unrank_subset: rank " + std::to_string(rank) +
                            " outside [0, C(" + std::to_string(n) + "," +
                            std::to_string(p) + "))");
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(p));
  int candidate = 1;
  for (int slot = 0; slot < p; ++slot) {
    for (;; ++candidate) {
      // subsets whose next element is `candidate`
      const Count block = binomial(n - candidate, p - slot - 1);
      if (rank < block) break;
      rank -= block;
    }
    out.push_back(candidate++);
  }
  return out;
}

/// Inverse of unrank_subset. `positions` must be a strictly ascending subset
/// of {1..n}.
inline Count rank_subset(int n, std::span<const int> positions) {
  const int p = static_cast<int>(positions.size());
  if (n < 0 || n > kMaxBinomialN || p > n) {
    throw std::invalid_argument("rank_subset: invalid subset size");
  }
  Count rank = 0;
  int previous = 0;
  for (int slot = 0; slot < p; ++slot) {
    const int pos = positions[static_cast<std::size_t>(slot)];
    if (pos <= previous || pos > n) {
      throw std::invalid_argument(
          "rank_subset: positions must be strictly ascending within [1, n]");
    }
    for (int c = previous + 1; c < pos; ++c) {
      rank += binomial(n - c, p - slot - 1);
    }
    previous = pos;
  }
  return rank;
}

inline Count rank_state(const BasisState& state) {
  const auto pos = state.positions();
  return rank_subset(state.n(), pos);
}

inline StateMask unrank_mask(int n, int p, Count rank) {
  const auto pos = unrank_subset(n, p, rank);
  return BasisState::from_positions(n, pos).mask();
}

/// Table-driven ranking for repeated lookups inside one sector.
class SubsetRanker {
 public:
  explicit SubsetRanker(int n) : n_(n), table_((n + 1) * (n + 1), 0) {
    if (n < 0 || n > kMaxSpins) {
      throw std::invalid_argument("SubsetRanker: n outside [0, 24]");
    }
    for (int a = 0; a <= n; ++a) {
      for (int b = 0; b <= n; ++b) table_[a * (n + 1) + b] = binomial(a, b);
    }
  }

  Count rank(StateMask mask) const {
    const int p = std::popcount(mask);
    Count r = 0;
    int slot = 0;
    int previous = 0;
    for (int i = 0; i < n_; ++i) {
      if (!(mask & (StateMask{1} << i))) continue;
      const int pos = i + 1;
      for (int c = previous + 1; c < pos; ++c) r += choose(n_ - c, p - slot - 1);
      previous = pos;
      ++slot;
    }
    return r;
  }

 private:
  Count choose(int a, int b) const {
    return (b < 0 || b > a) ? 0 : table_[a * (n_ + 1) + b];
  }

  int n_;
  std::vector<Count> table_;
};

/// All states of a sector, in rank order.
inline std::vector<StateMask> sector_states(const Sector& sector) {
  const int n = sector.n();
  const int p = sector.p();
  std::vector<StateMask> out;
  out.reserve(static_cast<std::size_t>(sector.dimension()));
  std::vector<int> pos(static_cast<std::size_t>(p));
  std::iota(pos.begin(), pos.end(), 1);
  for (;;) {
    StateMask m = 0;
    for (int x : pos) m |= StateMask{1} << (x - 1);
    out.push_back(m);
    // advance to the lexicographic successor
    int i = p - 1;
    while (i >= 0 && pos[static_cast<std::size_t>(i)] == n - p + i + 1) --i;
    if (i < 0) break;
    ++pos[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < p; ++j) {
      pos[static_cast<std::size_t>(j)] = pos[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Site-resolved couplings

/// Symmetric n x n longitudinal and transverse pair couplings (rad/s), zero
/// diagonal. Asymmetric input is rejected.
class PairCouplings {
 public:
  PairCouplings(int n, std::vector<double> a_matrix, std::vector<double> b_matrix)
      : n_(n), a_(std::move(a_matrix)), b_(std::move(b_matrix)) {
    if (n < 1) throw std::invalid_argument("PairCouplings: n must be >= 1");
    const auto size = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (a_.size() != size || b_.size() != size) {
      throw std::invalid_argument("PairCouplings: matrices must be n x n");
    }
    check(a_, "A");
    check(b_, "B");
  }

  /// Zero matrices, filled by set_pair.
  explicit PairCouplings(int n)
      : PairCouplings(n, std::vector<double>(static_cast<std::size_t>(n) * n),
                      std::vector<double>(static_cast<std::size_t>(n) * n)) {}

  int n() const noexcept { return n_; }
  double a(int f, int j) const { return a_[index(f, j)]; }
  double b(int f, int j) const { return b_[index(f, j)]; }

  /// 1-based f != j; writes both (f,j) and (j,f).
  void set_pair(int f, int j, double a_value, double b_value) {
    if (f == j) throw std::invalid_argument("PairCouplings: diagonal pair");
    if (!std::isfinite(a_value) || !std::isfinite(b_value)) {
      throw std::invalid_argument("PairCouplings: non-finite coupling");
    }
    a_[index(f, j)] = a_[index(j, f)] = a_value;
    b_[index(f, j)] = b_[index(j, f)] = b_value;
  }

 private:
  std::size_t index(int f, int j) const {
    if (f < 1 || f > n_ || j < 1 || j > n_) {
      throw std::out_of_range("PairCouplings: index outside [1, n]");
    }
    return static_cast<std::size_t>(f - 1) * n_ + static_cast<std::size_t>(j - 1);
  }

  void check(const std::vector<double>& m, const char* name) const {
    for (int f = 0; f < n_; ++f) {
      for (int j = 0; j < n_; ++j) {
        const double v = m[static_cast<std::size_t>(f) * n_ + j];
        if (!std::isfinite(v)) {
          throw std::invalid_argument(std::string("PairCouplings: non-finite ") + name);
        }
        if (f == j && v != 0.0) {
          throw std::invalid_argument(std::string("PairCouplings: nonzero diagonal in ") + name);
        }
        if (v != m[static_cast<std::size_t>(j) * n_ + f]) {
          throw std::invalid_argument(std::string("PairCouplings: ") + name +
                                      " is not symmetric");
        }
      }
    }
  }

  int n_;
  std::vector<double> a_;
  std::vector<double> b_;
};

/// Reads rows `f,j,A_fj,B_fj` (1-based, f < j). Blank lines, `#` comments
/// and a non-numeric header line are skipped; absent pairs are zero. When
/// `n` is 0 it is taken from the largest index seen.
inline PairCouplings read_pair_couplings_csv(std::istream& in, int n = 0) {
  struct Row {
    int f, j;
    double a, b;
  };
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
    auto fail = [&](const std::string& what) {
      throw std::invalid_argument("couplings CSV line " + std::to_string(line_no) +
                                  ": " + what);
    };
    if (fields.size() != 4) fail("expected 4 fields f,j,A,B");
    Row r{};
    try {
      r.f = std::stoi(fields[0]);
      r.j = std::stoi(fields[1]);
      r.a = std::stod(fields[2]);
      r.b = std::stod(fields[3]);
    } catch (const std::logic_error&) {
      if (first_content) {
        first_content = false;
        continue;  // header
      }
      fail("non-numeric field");
    }
    first_content = false;
    if (r.f < 1 || r.j < 1) fail("indices are 1-based");
    if (r.f >= r.j) fail("rows must satisfy f < j (strict upper triangle)");
    if (!std::isfinite(r.a) || !std::isfinite(r.b)) fail("non-finite coupling");
    rows.push_back(r);
  }
  int max_index = 0;
  for (const auto& r : rows) max_index = std::max(max_index, r.j);
  if (n == 0) n = max_index;
  if (n < 2) throw std::invalid_argument("couplings CSV: need at least two spins");
  if (max_index > n) throw std::invalid_argument("couplings CSV: index exceeds n");
  PairCouplings out(n);
  std::vector<char> seen(static_cast<std::size_t>(n) * n, 0);
  for (const auto& r : rows) {
    auto& flag = seen[static_cast<std::size_t>(r.f - 1) * n + (r.j - 1)];
    if (flag) {
      throw std::invalid_argument("couplings CSV: duplicate pair (" +
                                  std::to_string(r.f) + "," + std::to_string(r.j) + ")");
    }
    flag = 1;
    out.set_pair(r.f, r.j, r.a, r.b);
  }
  return out;
}

enum class AngularFactor {
  printed,   // 1 - 3 cos(theta), as printed in the source model
  standard,  // 1 - 3 cos^2(theta), the secular dipolar factor
};

struct PairGeometry {
  double distance = 1.0;  // R_fj
  double theta = 0.0;     // polar angle to the field axis
  double phi = 0.0;       // azimuth; does not enter any coupling
};

struct CouplingConstants {
  double dipolar = 0.0;       // A_fj
  double longitudinal = 0.0;  // A_fj + J_fj
  double transverse = 0.0;    // -A_fj/4 + J_fj/2
};

/// Secular dipolar plus exchange couplings of one pair (hbar = 1).
inline CouplingConstants dipolar_coupling_constants(const PairGeometry& geom, double gamma,
                                                    double exchange,
                                                    AngularFactor factor = AngularFactor::printed) {
  if (!(geom.distance > 0.0) || !std::isfinite(geom.distance)) {
    throw std::invalid_argument("dipolar_coupling_constants: distance must be positive");
  }
  const double c = std::cos(geom.theta);
  const double angular = factor == AngularFactor::printed ? 1.0 - 3.0 * c : 1.0 - 3.0 * c * c;
  const double r3 = geom.distance * geom.distance * geom.distance;
  CouplingConstants out;
  out.dipolar = gamma * gamma / (2.0 * r3) * angular;
  out.longitudinal = out.dipolar + exchange;
  out.transverse = -0.25 * out.dipolar + 0.5 * exchange;
  return out;
}

enum class AverageNormalization {
  per_spin,  // divide the pair sum by n
  per_term,  // divide by the number of summed pair terms
};

struct CouplingAverage {
  double mean = 0.0;
  double spread = 0.0;
  // All pair values equal, yet the mean differs from that value (the
  // per-spin normalization does this for every n != 3 unordered).
  bool constant_input = false;
  bool mean_differs_from_constant = false;
};

struct CouplingAverages {
  CouplingAverage longitudinal;
  CouplingAverage transverse;
  int pair_terms = 0;
  double divisor = 0.0;
};

/// Mean <X> = (1/D) sum X_fj and spread [(1/D) sum (X_fj - <X>)^2]^(1/2)
/// over the convention's pair range, with D = n (per_spin) or the number of
/// terms (per_term).
inline CouplingAverages average_couplings(
    const PairCouplings& pairs, PairConvention convention = PairConvention::unordered_distinct,
    AverageNormalization normalization = AverageNormalization::per_spin) {
  const int n = pairs.n();
  if (n < 2) throw std::invalid_argument("average_couplings: need n >= 2");
  std::vector<double> avals, bvals;
  for (int f = 1; f <= n; ++f) {
    for (int j = 1; j <= n; ++j) {
      if (f == j) continue;
      if (convention == PairConvention::unordered_distinct && f > j) continue;
      avals.push_back(pairs.a(f, j));
      bvals.push_back(pairs.b(f, j));
    }
  }
  CouplingAverages out;
  out.pair_terms = static_cast<int>(avals.size());
  out.divisor = normalization == AverageNormalization::per_spin ? n : out.pair_terms;
  auto reduce = [&](const std::vector<double>& v) {
    CouplingAverage r;
    const double sum = std::accumulate(v.begin(), v.end(), 0.0);
    r.mean = sum / out.divisor;
    double sq = 0.0;
    for (double x : v) sq += (x - r.mean) * (x - r.mean);
    r.spread = std::sqrt(sq / out.divisor);
    r.constant_input = std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    r.mean_differs_from_constant = r.constant_input && r.mean != v.front();
    return r;
  };
  out.longitudinal = reduce(avals);
  out.transverse = reduce(bvals);
  return out;
}

}  // namespace essi
