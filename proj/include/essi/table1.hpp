#pragma once

// Five-spin reference table: printed flip-flop levels per block and
// the printed coefficient vectors with their basis-function column. Vectors
// are stored as integer numerators over factor * sqrt(radicand).

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace essi::table1 {

inline constexpr int kSpins = 5;

struct PrintedLevel {
  int p;
  int epsilon;  // units of B
  int degeneracy;
};

struct PrintedRow {
  int p;
  int epsilon;  // level the row is printed under
  std::vector<int> numerators;
  int denominator_factor;
  int denominator_radicand;
  const char* basis_label;  // basis function printed on the same line

  std::vector<double> vector() const {
    const double d = denominator_factor * std::sqrt(static_cast<double>(denominator_radicand));
    std::vector<double> v;
    v.reserve(numerators.size());
    for (int x : numerators) v.push_back(x / d);
    return v;
  }
};

inline const std::vector<PrintedLevel>& printed_levels() {
  static const std::vector<PrintedLevel> levels = {
      {0, 0, 1},                               //
      {1, -1, 4}, {1, 1, 1},                   //
      {2, -2, 5}, {2, 1, 4}, {2, 6, 1},        //
      {3, -2, 5}, {3, 1, 4}, {3, 6, 1},        //
      {4, -1, 4}, {4, 1, 1},                   //
      {5, 0, 1},
  };
  return levels;
}

inline const std::vector<PrintedRow>& printed_rows() {
  static const std::vector<PrintedRow> rows = {
      {0, 0, {1}, 1, 1, "-,-,-,-,-"},

      {1, -1, {-1, 0, 0, 0, 1}, 1, 2, "+,-,-,-,-"},
      {1, -1, {-1, 0, 0, 2, -1}, 1, 6, "-,+,-,-,-"},
      {1, -1, {-1, 0, 3, -1, -1}, 2, 3, "-,-,+,-,-"},
      {1, -1, {-1, 4, -1, -1, -1}, 2, 5, "-,-,-,+,-"},
      {1, 1, {1, 1, 1, 1, 1}, 1, 5, "-,-,-,-,+"},

      {2, -2, {1, 1, -1, -1, -1, 0, 0, 0, 0, 1}, 1, 6, "+,+,-,-,-"},
      {2, -2, {1, -1, 1, -1, -1, 0, 0, 0, 2, -1}, 1, 10, "+,-,+,-,-"},
      {2, -2, {2, -2, -3, 3, -2, 0, 0, 5, -1, -2}, 2, 15, "+,-,-,+,-"},
      {2, -2, {-2, 2, 1, -1, -2, 0, 4, 1, -1, -2}, 6, 1, "+,-,-,-,+"},
      {2, -2, {-1, 1, -1, 1, -1, 3, -1, -1, 1, -1}, 3, 2, "-,+,+,-,-"},
      {2, 1, {-1, -1, 1, 1, -2, 0, 0, 0, 0, 2}, 2, 3, "-,+,-,+,-"},
      {2, 1, {-1, 1, -1, 1, 0, -2, 0, 0, 2, 0}, 2, 3, "-,+,-,-,+"},
      {2, 1, {-2, -1, -1, -2, 1, 1, 0, 2, 1, 1}, 3, 2, "-,-,+,+,-"},
      {2, 1, {1, -4, -4, 1, 1, 1, 6, -4, 1, 1}, 3, 10, "-,-,+,-,+"},
      {2, 6, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 1, 10, "-,-,-,+,+"},

      {3, -2, {1, 1, -1, -1, 0, 0, -1, 0, 0, 1}, 1, 6, "+,+,+,-,-"},
      {3, -2, {1, -1, -1, 1, 0, 0, -1, 0, 2, -1}, 1, 10, "+,+,-,+,-"},
      {3, -2, {-3, 3, -2, 2, 0, 0, -2, 5, -1, -2}, 2, 15, "+,+,-,-,+"},
      {3, -2, {1, -1, -2, -2, 0, 4, 2, 1, -1, -2}, 6, 1, "+,-,+,+,-"},
      {3, -2, {-1, 1, -1, -1, 3, -1, 1, -1, 1, -1}, 3, 2, "+,-,+,-,+"},
      {3, 1, {-2, -2, -2, 1, 1, 1, 0, 0, 0, 3}, 2, 6, "+,-,-,+,+"},
      {3, 1, {-6, 2, 2, -5, -5, 3, 0, 0, 8, 1}, 2, 42, "-,+,+,+,-"},
      {3, 1, {1, -5, 2, -5, 2, -4, 0, 7, 1, 1}, 3, 14, "-,+,+,-,+"},
      {3, 1, {1, 1, -4, 1, -4, -4, 6, 1, 1, 1}, 3, 10, "-,+,-,+,+"},
      {3, 6, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 1, 10, "-,-,+,+,+"},

      {4, -1, {-1, 0, 0, 0, 1}, 1, 2, "+,+,+,+,-"},
      {4, -1, {-1, 0, 0, 2, -1}, 1, 6, "+,+,+,-,+"},
      {4, -1, {-1, 0, 3, -1, -1}, 2, 3, "+,+,-,+,+"},
      {4, -1, {-1, 4, -1, -1, -1}, 2, 5, "+,-,+,+,+"},
      {4, 1, {1, 1, 1, 1, 1}, 1, 5, "-,+,+,+,+"},

      {5, 0, {1}, 1, 1, "+,+,+,+,+"},
  };
  return rows;
}

}  // namespace essi::table1
