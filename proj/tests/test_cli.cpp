#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "essi/cli.hpp"

namespace fs = std::filesystem;
using essi::io::Json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = essi::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("essi_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"verify"}).code, 2);  // --max-n is required
  EXPECT_EQ(run({"verify", "--max-n", "15"}).code, 2);
  EXPECT_EQ(run({"sectors", "0"}).code, 2);
  EXPECT_EQ(run({"closed-form", "5", "--p", "6"}).code, 2);
  EXPECT_EQ(run({"diagonalize", "5", "2"}).code, 2);  // --B is required
  EXPECT_EQ(run({"diagonalize", "15", "7", "--B", "1"}).code, 2);
  EXPECT_EQ(run({"--format", "xml", "sectors", "3"}).code, 2);
  EXPECT_EQ(run({"spectrum", "2", "--omega0", "1", "--A", "0", "--B", "0", "--temperature", "-3"}).code, 2);
  EXPECT_EQ(run({"couplings", "/nonexistent/file.csv"}).code, 2);
  const auto bad = run({"frobnicate"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_FALSE(bad.err.empty());
  EXPECT_TRUE(bad.out.empty());
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(Cli, SectorsJsonAndCsv) {
  const auto r = run({"sectors", "5"});
  ASSERT_EQ(r.code, 0);
  const auto j = Json::parse(r.out);
  std::vector<std::uint64_t> dims;
  for (const auto& s : j["sectors"]) dims.push_back(s["dimension"]);
  EXPECT_EQ(dims, (std::vector<std::uint64_t>{1, 5, 10, 10, 5, 1}));
  EXPECT_EQ(j["total"], 32);

  const auto csv = lines_of(run({"--format", "csv", "sectors", "5"}).out);
  ASSERT_EQ(csv.size(), 7u);
  EXPECT_EQ(csv[0], "p,dimension,magnetization");
  EXPECT_EQ(csv[3], "2,10,-0.5");
}

TEST(Cli, ClosedFormFiveTwo) {
  const auto r = run({"--format", "csv", "closed-form", "5", "--p", "2"});
  ASSERT_EQ(r.code, 0);
  const auto csv = lines_of(r.out);
  ASSERT_EQ(csv.size(), 4u);
  EXPECT_EQ(csv[0], "p,k,epsilon,degeneracy,flipflop_energy,total_energy");
  EXPECT_EQ(csv[1].substr(0, 10), "2,0,-2,5,-");
  EXPECT_EQ(csv[2].substr(0, 8), "2,1,1,4,");
  EXPECT_EQ(csv[3].substr(0, 8), "2,2,6,1,");

  const auto j = Json::parse(run({"closed-form", "5", "--p", "2"}).out);
  ASSERT_EQ(j["blocks"].size(), 1u);
  EXPECT_EQ(j["blocks"][0]["levels"].size(), 3u);
}

TEST(Cli, UnitConversion) {
  const auto rad = Json::parse(run({"closed-form", "2", "--p", "1", "--B", "6.283185307179586"}).out);
  const auto hz = Json::parse(run({"--unit", "hz", "closed-form", "2", "--p", "1", "--B", "6.283185307179586"}).out);
  const double top_rad = rad["blocks"][0]["levels"][1]["flipflop_energy"];
  const double top_hz = hz["blocks"][0]["levels"][1]["flipflop_energy"];
  EXPECT_NEAR(top_rad, 6.283185307179586, 1e-15);
  EXPECT_NEAR(top_hz, 1.0, 1e-15);
  EXPECT_EQ(hz["unit"], "Hz");
}

TEST(Cli, DiagonalizeLevels) {
  const auto r = run({"diagonalize", "5", "2", "--B", "1"});
  ASSERT_EQ(r.code, 0);
  const auto j = Json::parse(r.out);
  ASSERT_EQ(j["levels"].size(), 3u);
  EXPECT_EQ(j["levels"][0]["multiplicity"], 5);
  EXPECT_EQ(j["eigenvalues"].size(), 10u);
  EXPECT_FALSE(j.contains("eigenvectors"));
  const auto v = Json::parse(run({"diagonalize", "3", "1", "--B", "1", "--vectors"}).out);
  EXPECT_EQ(v["eigenvectors"].size(), 3u);
}

TEST(Cli, VerifyPassesAndIsReproducible) {
  const auto a = run({"verify", "--max-n", "6"});
  const auto b = run({"--threads", "3", "verify", "--max-n", "6"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = Json::parse(a.out);
  EXPECT_TRUE(j["verdict"].get<bool>());
  EXPECT_TRUE(j["wall_time_ms"].is_null());
  bool saw_typo = false;
  for (const auto& d : j["known_discrepancies"]) saw_typo |= d["id"] == "TABLE1-P1-LEVEL1";
  EXPECT_TRUE(saw_typo);

  const auto timed = Json::parse(run({"verify", "--max-n", "2", "--timing"}).out);
  EXPECT_TRUE(timed["wall_time_ms"].is_number());
}

TEST(Cli, VerifyFailureExitsOne) {
  // a tolerance far below round-off cannot be met by a dense eigensolver
  const auto r = run({"verify", "--max-n", "8", "--tol", "1e-300"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(Json::parse(r.out)["verdict"].get<bool>());
}

TEST(Cli, OutputFileIsAtomic) {
  const auto good = scratch("sectors.json");
  fs::remove(good);
  ASSERT_EQ(run({"-o", good.string(), "sectors", "4"}).code, 0);
  ASSERT_TRUE(fs::exists(good));
  EXPECT_FALSE(fs::exists(good.string() + ".partial"));
  std::ifstream in(good);
  EXPECT_EQ(Json::parse(in)["total"], 16);

  // usage failure: nothing written at all
  const auto none = scratch("none.json");
  fs::remove(none);
  EXPECT_EQ(run({"-o", none.string(), "closed-form", "5", "--p", "9"}).code, 2);
  EXPECT_FALSE(fs::exists(none));
  EXPECT_FALSE(fs::exists(none.string() + ".partial"));

  // runtime failure: matrix side file into a missing directory
  const auto out = scratch("diag.json");
  fs::remove(out);
  const auto r = run({"-o", out.string(), "diagonalize", "3", "1", "--B", "1", "--matrix-csv", "/nonexistent/dir/m.csv"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_FALSE(fs::exists(out.string() + ".partial"));
}

TEST(Cli, MatrixCsv) {
  const auto path = scratch("h.csv");
  ASSERT_EQ(run({"diagonalize", "2", "1", "--A", "1", "--B", "0.5", "--matrix-csv", path.string()}).code, 0);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(lines_of(ss.str()), (std::vector<std::string>{"-0.25,0.5", "0.5,-0.25"}));
}

TEST(Cli, Table1Report) {
  const auto r = run({"table1"});
  ASSERT_EQ(r.code, 0);
  const auto j = Json::parse(r.out);
  EXPECT_EQ(j["levels"].size(), 12u);
  EXPECT_EQ(j["rows"].size(), 32u);
  const auto csv = lines_of(run({"--format", "csv", "table1"}).out);
  EXPECT_EQ(csv[0], "id,p,printed_epsilon,verdict,residual,rayleigh_quotient,basis_order_ok,unit_norm");
  EXPECT_EQ(csv.size(), 33u);
}

TEST(Cli, SpectrumTwoSpins) {
  const auto r = run({"--format", "csv", "spectrum", "2", "--omega0", "10", "--A", "1", "--B", "0.3"});
  ASSERT_EQ(r.code, 0);
  const auto csv = lines_of(r.out);
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0], "frequency,intensity,p_from,p_to");
  const auto j = Json::parse(run({"spectrum", "2", "--omega0", "10", "--A", "1", "--B", "0.3"}).out);
  ASSERT_EQ(j["lines"].size(), 2u);
  EXPECT_NEAR(j["lines"][0]["frequency"].get<double>(), 9.8, 1e-12);
  EXPECT_NEAR(j["lines"][1]["frequency"].get<double>(), 10.2, 1e-12);
}

TEST(Cli, Couplings) {
  const auto path = scratch("pairs.csv");
  {
    std::ofstream f(path);
    f << "f,j,A,B\n1,2,3,1\n1,3,3,1\n2,3,3,1\n";
  }
  const auto j = Json::parse(run({"couplings", path.string()}).out);
  EXPECT_EQ(j["n"], 3);
  EXPECT_DOUBLE_EQ(j["A"]["mean"].get<double>(), 3.0);
  EXPECT_TRUE(j["A"]["constant_input"].get<bool>());
  const auto t = Json::parse(run({"couplings", path.string(), "--normalization", "per-term"}).out);
  EXPECT_DOUBLE_EQ(t["B"]["mean"].get<double>(), 1.0);

  const auto bad = scratch("bad.csv");
  {
    std::ofstream f(bad);
    f << "2,1,3,1\n";
  }
  EXPECT_EQ(run({"couplings", bad.string()}).code, 2);
}
