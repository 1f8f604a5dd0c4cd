#pragma once

// JSON / CSV / text rendering of library results. JSON uses insertion-ordered
// objects and shortest round-trip number formatting, so identical results
// serialize to identical bytes.

#include <charconv>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "essi/closed_form.hpp"
#include "essi/core.hpp"
#include "essi/transitions.hpp"
#include "essi/verifier.hpp"

namespace essi::io {

using Json = nlohmann::ordered_json;

enum class EnergyUnit { rad_per_s, hertz };

inline const char* unit_name(EnergyUnit u) { return u == EnergyUnit::hertz ? "Hz" : "rad/s"; }

inline double convert(double rad_per_s, EnergyUnit u) {
  return u == EnergyUnit::hertz ? rad_per_s / (2.0 * std::numbers::pi) : rad_per_s;
}

/// Shortest representation that reads back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json rational_json(const Rational& r) {
  return Json{{"exact", r.str()}, {"value", r.to_double()}};
}

inline Json params_json(const EssiParams& p, EnergyUnit u) {
  return Json{{"n", p.n},
              {"omega0", convert(p.omega0, u)},
              {"A", convert(p.coupling_A, u)},
              {"B", convert(p.coupling_B, u)},
              {"convention", to_string(p.pair_convention)}};
}

// ---------------------------------------------------------------------------

inline Json closed_form_json(const ClosedFormSpectrum& s, EnergyUnit u) {
  Json levels = Json::array();
  for (const auto& l : s.levels) {
    levels.push_back(Json{{"k", l.k},
                          {"epsilon", l.epsilon_units},
                          {"degeneracy", l.degeneracy},
                          {"flipflop_energy", convert(l.flipflop_energy, u)},
                          {"total_energy", convert(l.total_energy, u)},
                          {"twice_total_spin", level_twice_total_spin(s.sector.n(), s.sector.p(), l.k)}});
  }
  return Json{{"p", s.sector.p()},
              {"dimension", s.sector.dimension()},
              {"distinct_count", static_cast<int>(s.levels.size())},
              {"diagonal_energy", convert(s.diagonal_energy, u)},
              {"levels", std::move(levels)}};
}

inline Json sector_report_json(const SectorReport& r) {
  Json levels = Json::array();
  for (const auto& l : r.levels) {
    levels.push_back(Json{
        {"k", l.k},
        {"epsilon_found", optional_json(l.epsilon_found)},
        {"multiplicity_found", l.multiplicity_found ? Json(*l.multiplicity_found) : Json(nullptr)},
        {"epsilon_ansatz", l.epsilon_ansatz ? Json(*l.epsilon_ansatz) : Json(nullptr)},
        {"degeneracy_ansatz", l.degeneracy_ansatz ? Json(*l.degeneracy_ansatz) : Json(nullptr)},
        {"abs_dev", l.abs_dev},
        {"ok", l.ok}});
  }
  return Json{{"n", r.sector.n()},
              {"p", r.sector.p()},
              {"dimension", r.sector.dimension()},
              {"distinct_found", r.distinct_found},
              {"distinct_expected", r.distinct_expected},
              {"match", r.match},
              {"max_abs_dev", r.max_abs_dev},
              {"tolerance", r.tolerance},
              {"diagonal_delta", rational_json(r.diagonal_delta)},
              {"diagonal_delta_matches_expected", r.diagonal_delta_matches_expected},
              {"levels", std::move(levels)}};
}

inline Json table1_levels_json(const std::vector<Table1LevelVerdict>& v) {
  Json out = Json::array();
  for (const auto& l : v) {
    out.push_back(Json{{"id", l.id},
                       {"p", l.p},
                       {"level", l.level},
                       {"printed_epsilon", l.printed_epsilon},
                       {"printed_degeneracy", l.printed_degeneracy},
                       {"computed_epsilon", l.computed_epsilon},
                       {"computed_degeneracy", l.computed_degeneracy},
                       {"verdict", to_string(l.verdict)}});
  }
  return out;
}

inline Json table1_rows_json(const std::vector<Table1RowVerdict>& v) {
  Json out = Json::array();
  for (const auto& r : v) {
    out.push_back(Json{{"id", r.id},
                       {"p", r.p},
                       {"row", r.row},
                       {"printed_epsilon", r.printed_epsilon},
                       {"basis_label", r.basis_label},
                       {"basis_rank", r.basis_rank},
                       {"basis_order_ok", r.basis_order_ok},
                       {"norm", r.norm},
                       {"unit_norm", r.unit_norm},
                       {"residual", r.residual},
                       {"rayleigh_quotient", r.rayleigh_quotient},
                       {"verdict", to_string(r.verdict)}});
  }
  return out;
}

inline Json known_discrepancies_json(const std::vector<KnownDiscrepancy>& v) {
  Json out = Json::array();
  for (const auto& d : v) {
    out.push_back(Json{{"id", d.id},
                       {"kind", d.kind},
                       {"description", d.description},
                       {"p", d.p ? Json(*d.p) : Json(nullptr)},
                       {"printed", optional_json(d.printed)},
                       {"computed", optional_json(d.computed)}});
  }
  return out;
}

/// `include_timing` = false writes wall_time_ms as null so that repeated
/// runs are byte-identical.
inline Json verification_json(const VerificationReport& r, bool include_timing) {
  Json sectors = Json::array();
  for (const auto& s : r.sectors) sectors.push_back(sector_report_json(s));
  Json oracle = Json::array();
  for (const auto& c : r.oracle_checks) {
    oracle.push_back(Json{{"n", c.n}, {"match", c.match}, {"max_abs_dev", c.max_abs_dev}});
  }
  return Json{{"command", "verify"},
              {"n_max", r.n_max},
              {"verdict", r.verdict},
              {"sectors_match", r.sectors_match},
              {"oracle_match", r.oracle_match},
              {"diagonal_delta_formula_holds", r.diagonal_delta_formula_holds},
              {"tolerances",
               Json{{"eigenvalue", r.options.tol},
                    {"cluster_tau", optional_json(r.options.cluster_tau)},
                    {"oracle", r.options.oracle_tol},
                    {"fixture_residual", kFixtureResidualTol}}},
              {"known_discrepancies", known_discrepancies_json(r.known_discrepancies)},
              {"sectors", std::move(sectors)},
              {"oracle_checks", std::move(oracle)},
              {"table1", Json{{"levels", table1_levels_json(r.table1_levels)},
                              {"rows", table1_rows_json(r.table1_rows)}}},
              {"wall_time_ms", include_timing ? Json(r.wall_time_ms) : Json(nullptr)}};
}

inline Json spectrum_json(const EssiParams& params, const Population& pop,
                          const std::vector<SpectralLine>& lines, bool merged, EnergyUnit u) {
  Json arr = Json::array();
  for (const auto& l : lines) {
    arr.push_back(Json{{"frequency", convert(l.frequency, u)},
                       {"intensity", l.intensity},
                       {"p_from", l.from_sector.p()},
                       {"p_to", l.to_sector.p()},
                       {"level_from", l.from_level},
                       {"level_to", l.to_level}});
  }
  Json population{{"kind", pop.kind == Population::Kind::uniform ? "uniform" : "boltzmann"},
                  {"temperature", pop.kind == Population::Kind::uniform ? Json(nullptr) : Json(pop.temperature)}};
  return Json{{"command", "spectrum"},
              {"params", params_json(params, u)},
              {"unit", unit_name(u)},
              {"population", std::move(population)},
              {"merged", merged},
              {"lines", std::move(arr)}};
}

inline Json coupling_average_json(const CouplingAverage& a) {
  return Json{{"mean", a.mean},
              {"spread", a.spread},
              {"constant_input", a.constant_input},
              {"mean_differs_from_constant", a.mean_differs_from_constant}};
}

// ---------------------------------------------------------------------------
// Minimal fixed-width text tables

class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void print(std::ostream& os) const {
    std::vector<std::size_t> width(header_.size(), 0);
    auto grow = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    };
    grow(header_);
    for (const auto& r : rows_) grow(r);
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        os << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << r[i];
      }
      os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace essi::io
