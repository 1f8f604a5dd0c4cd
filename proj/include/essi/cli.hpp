#pragma once

// Batch command-line front end. `run` is the whole program minus the
// process boundary so tests can drive it in-process.
//
// Exit codes: 0 success, 1 verification failure or numerical error,
// 2 usage error. Output files are written to a temporary sibling and renamed
// only once complete, so a failed run never leaves a partial file behind.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "essi/closed_form.hpp"
#include "essi/core.hpp"
#include "essi/engine.hpp"
#include "essi/report_io.hpp"
#include "essi/transitions.hpp"
#include "essi/verifier.hpp"

namespace essi::cli {

enum class Format { json, csv, table };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  EssiParams params;
  Format format = Format::json;
  io::EnergyUnit unit = io::EnergyUnit::rad_per_s;
  std::string output_path;  // empty: stdout
  std::optional<unsigned> threads;

  // subcommand-specific
  std::optional<int> p;
  bool vectors = false;
  std::string matrix_csv;
  int max_n = 0;
  double tol = 1e-8;
  bool timing = false;
  std::optional<double> temperature;
  bool merge = true;
  bool reference_diagonal = false;
  std::string couplings_path;
  AverageNormalization normalization = AverageNormalization::per_spin;
};

/// Writes to stdout, or to `path` via a temporary file renamed on commit.
class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {
    if (!path_.empty()) {
      temp_ = path_ + ".partial";
      file_ = std::make_unique<std::ofstream>(temp_, std::ios::binary | std::ios::trunc);
      if (!*file_) throw std::runtime_error("cannot open " + temp_ + " for writing");
    }
  }
  OutputSink(const OutputSink&) = delete;
  OutputSink& operator=(const OutputSink&) = delete;

  ~OutputSink() {
    if (file_ && !committed_) {
      file_.reset();
      std::error_code ec;
      std::filesystem::remove(temp_, ec);
    }
  }

  std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : fallback_; }

  void commit() {
    if (!file_) {
      fallback_.flush();
      return;
    }
    file_->flush();
    if (!*file_) throw std::runtime_error("write to " + temp_ + " failed");
    file_.reset();
    std::filesystem::rename(temp_, path_);
    committed_ = true;
  }

 private:
  std::string path_;
  std::string temp_;
  std::ostream& fallback_;
  std::unique_ptr<std::ofstream> file_;
  bool committed_ = false;
};

namespace detail {

using io::fmt;
using io::Json;

inline void write_json(std::ostream& os, const Json& j) { os << j.dump(2) << '\n'; }

inline void csv_row(std::ostream& os, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    os << (first ? "" : ",") << f;
    first = false;
  }
  os << '\n';
}

inline std::string str(bool b) { return b ? "true" : "false"; }
template <class T>
std::string str(T v) {
  return std::to_string(v);
}

// --- sectors ---------------------------------------------------------------

inline int cmd_sectors(const RunConfig& cfg, std::ostream& os) {
  const int n = cfg.params.n;
  if (cfg.format == Format::json) {
    Json rows = Json::array();
    for (int p = 0; p <= n; ++p) {
      rows.push_back(Json{{"p", p}, {"dimension", binomial(n, p)}, {"magnetization", p - 0.5 * n}});
    }
    write_json(os, Json{{"command", "sectors"}, {"n", n}, {"total", Count{1} << n}, {"sectors", std::move(rows)}});
  } else if (cfg.format == Format::csv) {
    csv_row(os, {"p", "dimension", "magnetization"});
    for (int p = 0; p <= n; ++p) csv_row(os, {str(p), str(binomial(n, p)), fmt(p - 0.5 * n)});
  } else {
    io::TextTable t({"p", "M", "dimension"});
    for (int p = 0; p <= n; ++p) t.add({str(p), fmt(p - 0.5 * n), str(binomial(n, p))});
    os << "n = " << n << ", total dimension " << (Count{1} << n) << '\n';
    t.print(os);
  }
  return 0;
}

// --- closed-form -----------------------------------------------------------

inline int cmd_closed_form(const RunConfig& cfg, std::ostream& os) {
  const int n = cfg.params.n;
  std::vector<ClosedFormSpectrum> blocks;
  const int lo = cfg.p.value_or(0);
  const int hi = cfg.p.value_or(n);
  for (int p = lo; p <= hi; ++p) blocks.push_back(sector_closed_spectrum(cfg.params, Sector(n, p)));
  const auto u = cfg.unit;
  if (cfg.format == Format::json) {
    Json arr = Json::array();
    for (const auto& b : blocks) arr.push_back(io::closed_form_json(b, u));
    write_json(os, Json{{"command", "closed-form"},
                        {"params", io::params_json(cfg.params, u)},
                        {"unit", io::unit_name(u)},
                        {"blocks", std::move(arr)}});
  } else if (cfg.format == Format::csv) {
    csv_row(os, {"p", "k", "epsilon", "degeneracy", "flipflop_energy", "total_energy"});
    for (const auto& b : blocks) {
      for (const auto& l : b.levels) {
        csv_row(os, {str(b.sector.p()), str(l.k), str(l.epsilon_units), str(l.degeneracy),
                     fmt(io::convert(l.flipflop_energy, u)), fmt(io::convert(l.total_energy, u))});
      }
    }
  } else {
    io::TextTable t({"p", "k", "epsilon/B", "g", "E_diag", "E_total"});
    for (const auto& b : blocks) {
      for (const auto& l : b.levels) {
        t.add({str(b.sector.p()), str(l.k), str(l.epsilon_units), str(l.degeneracy),
               fmt(io::convert(b.diagonal_energy, u)), fmt(io::convert(l.total_energy, u))});
      }
    }
    os << "closed-form levels, n = " << n << " (energies in " << io::unit_name(u) << ")\n";
    t.print(os);
  }
  return 0;
}

// --- diagonalize -----------------------------------------------------------

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& h) {
  std::ostringstream sink;  // build in memory, then write via OutputSink
  OutputSink out(path, sink);
  auto& os = out.stream();
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    for (Eigen::Index c = 0; c < h.cols(); ++c) os << (c ? "," : "") << fmt(h(r, c));
    os << '\n';
  }
  out.commit();
}

inline int cmd_diagonalize(const RunConfig& cfg, std::ostream& os) {
  const Sector sector(cfg.params.n, *cfg.p);
  const Eigen::MatrixXd h = sector_hamiltonian(sector, cfg.params);
  if (!cfg.matrix_csv.empty()) write_matrix_csv(cfg.matrix_csv, h);
  const auto eig = symmetric_eigen(h, {.want_vectors = cfg.vectors});
  const auto u = cfg.unit;
  const auto& values = eig.eigenvalues;
  const auto clusters = cluster_eigenvalues(values, default_cluster_tolerance(values));
  const Eigen::Index z = values.size();

  if (cfg.format == Format::json) {
    // streamed by hand: eigenvector payloads reach 3432 x 3432
    Json head{{"command", "diagonalize"},
              {"n", sector.n()},
              {"p", sector.p()},
              {"dimension", sector.dimension()},
              {"params", io::params_json(cfg.params, u)},
              {"unit", io::unit_name(u)},
              {"residual_bound", eig.residual_bound ? Json(*eig.residual_bound) : Json(nullptr)}};
    Json levels = Json::array();
    for (const auto& c : clusters) levels.push_back(Json{{"value", io::convert(c.value, u)}, {"multiplicity", c.count}});
    head["levels"] = std::move(levels);
    std::string text = head.dump();
    text.pop_back();  // reopen the object
    os << text << ",\"eigenvalues\":[";
    for (Eigen::Index i = 0; i < z; ++i) os << (i ? "," : "") << Json(io::convert(values(i), u)).dump();
    os << ']';
    if (eig.eigenvectors) {
      os << ",\"eigenvectors\":[";
      for (Eigen::Index c = 0; c < z; ++c) {
        os << (c ? ",\n" : "\n") << '[';
        for (Eigen::Index r = 0; r < z; ++r) os << (r ? "," : "") << Json((*eig.eigenvectors)(r, c)).dump();
        os << ']';
      }
      os << ']';
    }
    os << "}\n";
  } else if (cfg.format == Format::csv) {
    os << "index,eigenvalue";
    if (eig.eigenvectors) {
      for (Eigen::Index r = 0; r < z; ++r) os << ",c" << (r + 1);
    }
    os << '\n';
    for (Eigen::Index i = 0; i < z; ++i) {
      os << i << ',' << fmt(io::convert(values(i), u));
      if (eig.eigenvectors) {
        for (Eigen::Index r = 0; r < z; ++r) os << ',' << fmt((*eig.eigenvectors)(r, i));
      }
      os << '\n';
    }
  } else {
    os << "block (n=" << sector.n() << ", p=" << sector.p() << "), dimension " << z << ", energies in "
       << io::unit_name(u) << '\n';
    io::TextTable t({"level", "energy", "multiplicity"});
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      t.add({str(i), fmt(io::convert(clusters[i].value, u)), str(clusters[i].count)});
    }
    t.print(os);
  }
  return 0;
}

// --- verify ----------------------------------------------------------------

inline int cmd_verify(const RunConfig& cfg, std::ostream& os) {
  VerifyOptions opts;
  opts.tol = cfg.tol;
  const auto report = verify_up_to(cfg.max_n, opts, cfg.threads.value_or(default_thread_count()));
  if (cfg.format == Format::json) {
    write_json(os, io::verification_json(report, cfg.timing));
  } else if (cfg.format == Format::csv) {
    csv_row(os, {"n", "p", "dimension", "distinct_found", "distinct_expected", "match", "max_abs_dev",
                 "diagonal_delta"});
    for (const auto& s : report.sectors) {
      csv_row(os, {str(s.sector.n()), str(s.sector.p()), str(s.sector.dimension()), str(s.distinct_found),
                   str(s.distinct_expected), str(s.match), fmt(s.max_abs_dev), s.diagonal_delta.str()});
    }
  } else {
    io::TextTable t({"n", "p", "dim", "levels", "expected", "match", "max_dev", "diag_delta/A"});
    for (const auto& s : report.sectors) {
      t.add({str(s.sector.n()), str(s.sector.p()), str(s.sector.dimension()), str(s.distinct_found),
             str(s.distinct_expected), s.match ? "yes" : "NO", fmt(s.max_abs_dev), s.diagonal_delta.str()});
    }
    t.print(os);
    os << "\nfull-space oracle:";
    for (const auto& c : report.oracle_checks) os << " n=" << c.n << (c.match ? ":ok" : ":FAIL");
    os << "\nknown discrepancies:\n";
    for (const auto& d : report.known_discrepancies) {
      os << "  " << d.id;
      if (d.printed && d.computed) os << "  printed " << fmt(*d.printed) << ", computed " << fmt(*d.computed);
      os << '\n';
    }
    os << "verdict: " << (report.verdict ? "PASS" : "FAIL") << '\n';
    if (cfg.timing) os << "wall time: " << fmt(report.wall_time_ms) << " ms\n";
  }
  return report.verdict ? 0 : 1;
}

// --- table1 ----------------------------------------------------------------

inline int cmd_table1(const RunConfig& cfg, std::ostream& os) {
  const auto levels = check_table1_levels();
  const auto rows = check_table1_fixtures();
  if (cfg.format == Format::json) {
    write_json(os, Json{{"command", "table1"},
                        {"n", table1::kSpins},
                        {"levels", io::table1_levels_json(levels)},
                        {"rows", io::table1_rows_json(rows)},
                        {"known_discrepancies", io::known_discrepancies_json(table1_known_discrepancies(levels, rows))}});
  } else if (cfg.format == Format::csv) {
    csv_row(os, {"id", "p", "printed_epsilon", "verdict", "residual", "rayleigh_quotient", "basis_order_ok", "unit_norm"});
    for (const auto& r : rows) {
      csv_row(os, {r.id, str(r.p), str(r.printed_epsilon), to_string(r.verdict), fmt(r.residual),
                   fmt(r.rayleigh_quotient), str(r.basis_order_ok), str(r.unit_norm)});
    }
  } else {
    io::TextTable lt({"id", "printed eps", "printed g", "computed eps", "computed g", "verdict"});
    for (const auto& l : levels) {
      lt.add({l.id, str(l.printed_epsilon), str(l.printed_degeneracy), fmt(l.computed_epsilon),
              str(l.computed_degeneracy), to_string(l.verdict)});
    }
    lt.print(os);
    os << '\n';
    io::TextTable rt({"id", "basis", "printed eps", "residual", "rayleigh", "verdict"});
    for (const auto& r : rows) {
      rt.add({r.id, r.basis_label, str(r.printed_epsilon), fmt(r.residual), fmt(r.rayleigh_quotient),
              to_string(r.verdict)});
    }
    rt.print(os);
  }
  return 0;
}

// --- spectrum --------------------------------------------------------------

inline int cmd_spectrum(const RunConfig& cfg, std::ostream& os) {
  const Population pop = cfg.temperature ? Population::boltzmann(*cfg.temperature) : Population::uniform();
  TransitionOptions topts;
  topts.track = cfg.reference_diagonal ? DiagonalTrack::reference_formula : DiagonalTrack::first_principles;
  auto lines = stick_spectrum(cfg.params, pop, topts);
  if (cfg.merge) {
    lines = merge_lines(std::move(lines), default_line_tolerance(lines));
  } else {
    std::stable_sort(lines.begin(), lines.end(),
                     [](const SpectralLine& a, const SpectralLine& b) { return a.frequency < b.frequency; });
  }
  const auto u = cfg.unit;
  if (cfg.format == Format::json) {
    write_json(os, io::spectrum_json(cfg.params, pop, lines, cfg.merge, u));
  } else if (cfg.format == Format::csv) {
    csv_row(os, {"frequency", "intensity", "p_from", "p_to"});
    for (const auto& l : lines) {
      csv_row(os, {fmt(io::convert(l.frequency, u)), fmt(l.intensity), str(l.from_sector.p()), str(l.to_sector.p())});
    }
  } else {
    io::TextTable t({"frequency", "intensity", "p_from", "p_to"});
    for (const auto& l : lines) {
      t.add({fmt(io::convert(l.frequency, u)), fmt(l.intensity), str(l.from_sector.p()), str(l.to_sector.p())});
    }
    os << lines.size() << " lines, frequencies in " << io::unit_name(u) << '\n';
    t.print(os);
  }
  return 0;
}

// --- couplings -------------------------------------------------------------

inline int cmd_couplings(const RunConfig& cfg, std::ostream& os, const PairCouplings& pairs) {
  const auto avg = average_couplings(pairs, cfg.params.pair_convention, cfg.normalization);
  const char* norm = cfg.normalization == AverageNormalization::per_spin ? "per-spin" : "per-term";
  if (cfg.format == Format::json) {
    write_json(os, Json{{"command", "couplings"},
                        {"n", pairs.n()},
                        {"convention", to_string(cfg.params.pair_convention)},
                        {"normalization", norm},
                        {"pair_terms", avg.pair_terms},
                        {"divisor", avg.divisor},
                        {"A", io::coupling_average_json(avg.longitudinal)},
                        {"B", io::coupling_average_json(avg.transverse)}});
  } else {
    if (cfg.format == Format::csv) {
      csv_row(os, {"coupling", "mean", "spread", "constant_input", "mean_differs_from_constant"});
    } else {
      os << "n = " << pairs.n() << ", " << avg.pair_terms << " pair terms, divisor " << fmt(avg.divisor) << '\n';
    }
    for (const auto& [name, a] : {std::pair{"A", avg.longitudinal}, std::pair{"B", avg.transverse}}) {
      csv_row(os, {name, fmt(a.mean), fmt(a.spread), str(a.constant_input), str(a.mean_differs_from_constant)});
    }
  }
  return 0;
}

}  // namespace detail

/// Parses and runs one invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Exact spectra of the equal spin-spin interaction Hamiltonian", "essi"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  RunConfig cfg;
  std::string format = "json";
  std::string unit = "rad";
  std::string convention = "unordered";
  unsigned threads = 0;
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv", "table"}));
  app.add_option("-o,--output", cfg.output_path, "Write output to this file instead of stdout");
  app.add_option("--unit", unit, "Energy unit: rad (rad/s) or hz (divide by 2 pi)")
      ->check(CLI::IsMember({"rad", "hz"}));
  app.add_option("--convention", convention, "Pair summation: unordered (f<j) or ordered (f!=j)")
      ->check(CLI::IsMember({"unordered", "ordered", "unordered-distinct", "ordered-distinct"}));
  app.add_option("--threads", threads, "Worker threads (default: ESSI_THREADS or hardware concurrency)")
      ->check(CLI::PositiveNumber);

  auto& p = cfg.params;
  int pv = 0;

  auto* sectors = app.add_subcommand("sectors", "Block dimensions C(n,p)");
  sectors->add_option("n", p.n, "Spin count")->required()->check(CLI::Range(1, kMaxSpins));

  auto* closed = app.add_subcommand("closed-form", "Closed-form levels and degeneracies");
  closed->add_option("n", p.n, "Spin count")->required()->check(CLI::Range(1, kMaxSpins));
  auto* closed_p = closed->add_option("--p", pv, "Only this block");
  closed->add_option("--omega0", p.omega0, "Zeeman frequency");
  closed->add_option("--A", p.coupling_A, "Longitudinal coupling");
  p.coupling_B = 1.0;
  closed->add_option("--B", p.coupling_B, "Transverse coupling (default 1)");

  auto* diag = app.add_subcommand("diagonalize", "Numerically diagonalize one block");
  diag->add_option("n", p.n, "Spin count")->required()->check(CLI::Range(1, kMaxDenseSpins));
  diag->add_option("p", pv, "Up-spin count")->required();
  diag->add_option("--B", p.coupling_B, "Transverse coupling")->required();
  diag->add_option("--omega0", p.omega0, "Zeeman frequency");
  diag->add_option("--A", p.coupling_A, "Longitudinal coupling");
  diag->add_flag("--vectors", cfg.vectors, "Also output eigenvectors");
  diag->add_option("--matrix-csv", cfg.matrix_csv, "Write the dense block matrix as CSV");

  auto* verify = app.add_subcommand("verify", "Check numerical blocks against the closed forms");
  verify->add_option("--max-n", cfg.max_n, "Largest spin count")->required()->check(CLI::Range(1, kMaxDenseSpins));
  verify->add_option("--tol", cfg.tol, "Relative eigenvalue tolerance")->check(CLI::PositiveNumber);
  verify->add_flag("--timing", cfg.timing, "Record wall time (makes output non-reproducible)");

  auto* table = app.add_subcommand("table1", "Check the five-spin reference table");

  auto* spectrum = app.add_subcommand("spectrum", "Single-quantum stick spectrum");
  spectrum->add_option("n", p.n, "Spin count")->required()->check(CLI::Range(1, kMaxOracleSpins));
  spectrum->add_option("--omega0", p.omega0, "Zeeman frequency")->required();
  spectrum->add_option("--A", p.coupling_A, "Longitudinal coupling")->required();
  spectrum->add_option("--B", p.coupling_B, "Transverse coupling")->required();
  double temperature = 0.0;
  auto* temp_opt = spectrum->add_option("--temperature", temperature, "Boltzmann populations at T (kelvin)")
                       ->check(CLI::PositiveNumber);
  bool no_merge = false;
  spectrum->add_flag("--no-merge", no_merge, "Keep coincident lines separate");
  spectrum->add_flag("--reference-diagonal", cfg.reference_diagonal, "Use the reference diagonal-energy formula");

  auto* couplings = app.add_subcommand("couplings", "Average site-resolved couplings from CSV (f,j,A,B)");
  couplings->add_option("file", cfg.couplings_path, "CSV file")->required()->check(CLI::ExistingFile);
  std::string normalization = "per-spin";
  couplings->add_option("--normalization", normalization, "Divide pair sums by n (per-spin) or term count")
      ->check(CLI::IsMember({"per-spin", "per-term"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "essi: " << e.what() << '\n';
    return 2;
  }

  std::optional<PairCouplings> pairs;
  try {
    cfg.format = format == "csv" ? Format::csv : format == "table" ? Format::table : Format::json;
    cfg.unit = unit == "hz" ? io::EnergyUnit::hertz : io::EnergyUnit::rad_per_s;
    p.pair_convention = parse_pair_convention(convention);
    if (threads > 0) cfg.threads = threads;
    cfg.merge = !no_merge;
    if (*temp_opt) cfg.temperature = temperature;
    cfg.normalization = normalization == "per-term" ? AverageNormalization::per_term : AverageNormalization::per_spin;

    CLI::App* chosen = app.get_subcommands().front();
    cfg.subcommand = chosen->get_name();
    if (chosen == closed && *closed_p) cfg.p = pv;
    if (chosen == diag) cfg.p = pv;
    if (cfg.p && (*cfg.p < 0 || *cfg.p > p.n)) {
      throw UsageError("p=" + std::to_string(*cfg.p) + " outside [0, n]");
    }
    if (chosen == diag && Sector(p.n, *cfg.p).dimension() > kMaxDenseDimension) {
      throw UsageError("block too large for dense diagonalization");
    }
    if (chosen == verify || chosen == table || chosen == couplings) p.n = std::max(p.n, 1);
    p.validate();
    if (chosen == couplings) {
      std::ifstream in(cfg.couplings_path);
      if (!in) throw UsageError("cannot read " + cfg.couplings_path);
      pairs = read_pair_couplings_csv(in);
    }
  } catch (const std::exception& e) {
    err << "essi: " << e.what() << '\n';
    return 2;
  }

  try {
    OutputSink sink(cfg.output_path, out);
    auto& os = sink.stream();
    int code = 0;
    if (cfg.subcommand == "sectors") code = detail::cmd_sectors(cfg, os);
    else if (cfg.subcommand == "closed-form") code = detail::cmd_closed_form(cfg, os);
    else if (cfg.subcommand == "diagonalize") code = detail::cmd_diagonalize(cfg, os);
    else if (cfg.subcommand == "verify") code = detail::cmd_verify(cfg, os);
    else if (cfg.subcommand == "table1") code = detail::cmd_table1(cfg, os);
    else if (cfg.subcommand == "spectrum") code = detail::cmd_spectrum(cfg, os);
    else if (cfg.subcommand == "couplings") code = detail::cmd_couplings(cfg, os, *pairs);
    sink.commit();
    return code;
  } catch (const std::exception& e) {
    err << "essi: " << e.what() << '\n';
    return 1;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

}  // namespace essi::cli
