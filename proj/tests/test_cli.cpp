#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "oracles/fourier_hill.hpp"
#include "spinv/cli.hpp"
#include "spinv/kerr.hpp"

namespace fs = std::filesystem;
using spinv::cli::parse_csv;
using std::numbers::pi;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = spinv::cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spinv_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> table(const fs::path& p) {
  const auto rows = parse_csv(slurp(p));
  REQUIRE(rows.size() >= 1);
  return rows;
}

std::string value_of(const std::string& report, const std::string& key) {
  std::istringstream is(report);
  for (std::string line; std::getline(is, line);)
    if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
  return {};
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<std::string> na, nb;
  for (const auto& e : fs::directory_iterator(a)) na.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.push_back(e.path().filename().string());
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  if (na != nb) return false;
  for (const auto& n : na)
    if (slurp(a / n) != slurp(b / n)) return false;
  return true;
}

}  // namespace

TEST_CASE("csv formatting") {
  using spinv::cli::csv_escape;
  using spinv::cli::format_number;
  CHECK(format_number(0.1) == "0.10000000000000001");
  for (double x : {pi, -1e-300, 2.0 / 3.0, 6.02214076e23}) CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"x\"") == "\"say \"\"x\"\"\"");
  const auto rows = parse_csv("h1,h2\r\n\"a,b\",\"line\nbreak\"\n\"q\"\"\",\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "a,b");
  CHECK(rows[1][1] == "line\nbreak");
  CHECK(rows[2][0] == "q\"");
  CHECK(rows[2][1].empty());
  CHECK_THROWS(parse_csv("\"open"));
}

TEST_CASE("usage and exit codes") {
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 1);
  CHECK(cli({"hill", "--bogus"}).code == 1);
  CHECK(cli({"hill"}).code == 1);   // no --out
  CHECK(cli({"hill", "--gaps", "x", "--out", "/nonexistent"}).code == 1);
  CHECK(cli({"hill", "--potential", "square", "--out", "/nonexistent"}).code == 1);
  const auto d = cli({"evaporate", "--print-defaults"});
  CHECK(d.code == 0);
  CHECK(d.out.find("[evaporate]") != std::string::npos);
  CHECK(d.out.find("planck=0.001") != std::string::npos);
  const auto all = cli({"--print-defaults"});
  for (const char* s : {"[hill]", "[kerr]", "[compare]", "[collapse]", "[evaporate]"})
    CHECK(all.out.find(s) != std::string::npos);
}

TEST_CASE("hill command") {
  const auto dir = scratch("hill_free");
  REQUIRE(cli({"hill", "--gaps", "3", "--out", dir.string()}).code == 0);
  const auto rows = table(dir / "spectrum.csv");
  REQUIRE(rows.size() == 8);
  CHECK(rows[0] == std::vector<std::string>{"index", "lambda", "delta", "gap", "gap_width"});
  const double expect[] = {0, pi * pi, pi * pi, 4 * pi * pi, 4 * pi * pi, 9 * pi * pi, 9 * pi * pi};
  for (int i = 0; i < 7; ++i) {
    CHECK(std::abs(std::stod(rows[std::size_t(i + 1)][1]) - expect[i]) <= 1e-9);
    CHECK(std::abs(std::abs(std::stod(rows[std::size_t(i + 1)][2])) - 2) <= 1e-8);
  }
  for (const char* f : {"gaps.csv", "reflecting.csv", "discriminant.csv", "manifest.toml"}) CHECK(fs::exists(dir / f));
  CHECK(table(dir / "discriminant.csv").size() == 402);

  // manifest re-runs to byte-identical outputs
  const auto again = scratch("hill_free_again");
  REQUIRE(cli({"--config", (dir / "manifest.toml").string(), "--out", again.string()}).code == 0);
  CHECK(same_tree(dir, again));

  // Mathieu against the oracle-generated golden file, which is itself rechecked against the oracle
  const auto golden = table(fs::path(SPINV_TEST_DATA) / "golden" / "mathieu_gaps5.csv");
  REQUIRE(golden.size() == 12);
  const auto oracle_ev = oracle::periodic_spectrum(oracle::cosine_series(0, {2.0}), 64);
  const auto m = scratch("hill_mathieu");
  REQUIRE(cli({"hill", "--potential", "mathieu", "--out", m.string()}).code == 0);
  const auto got = table(m / "spectrum.csv");
  REQUIRE(got.size() == 12);
  for (std::size_t i = 1; i < 12; ++i) {
    const double g = std::stod(golden[i][1]);
    CHECK(std::abs(g - oracle_ev[i - 1]) <= 1e-9);
    CHECK(std::abs(std::stod(got[i][1]) - g) <= 1e-7);
  }

  // bad potential file: exit 1 and nothing written
  const auto bad_file = fs::temp_directory_path() / "spinv_cli_test_bad_samples.txt";
  std::ofstream(bad_file) << "0.1 0.2\n0.3 zebra\n";
  const auto bad = scratch("hill_bad");
  const auto r = cli({"hill", "--potential", "samples", "--samples-file", bad_file.string(), "--out", bad.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("zebra") != std::string::npos);
  CHECK_FALSE(fs::exists(bad));
  CHECK(cli({"hill", "--potential", "samples", "--samples-file", "/nonexistent/q.txt", "--out", bad.string()}).code == 1);
  CHECK_FALSE(fs::exists(bad));

  // sampled potential from a file
  const auto good_file = fs::temp_directory_path() / "spinv_cli_test_samples.txt";
  {
    std::ofstream f(good_file);
    f.precision(17);
    f << "# q(j/16) = 2 cos(2 pi j/16)\n";
    for (int j = 0; j < 16; ++j) f << 2 * std::cos(2 * pi * j / 16) << (j % 4 == 3 ? "\n" : ", ");
  }
  const auto s = scratch("hill_samples");
  REQUIRE(cli({"hill", "--potential", "samples", "--samples-file", good_file.string(), "--gaps", "2", "--out",
               s.string()})
              .code == 0);
  const auto sr = table(s / "spectrum.csv");
  for (std::size_t i = 1; i < sr.size(); ++i) CHECK(std::abs(std::stod(sr[i][1]) - oracle_ev[i - 1]) <= 1e-7);
}

TEST_CASE("kerr command") {
  const auto a = scratch("kerr_a");
  REQUIRE(cli({"kerr", "--coefficients", "g03", "g12", "--point", "0.45,0.3", "--point", "0.3,-0.2", "--jobs", "2",
               "--out", a.string()})
              .code == 0);
  const auto idx = table(a / "index_table.csv");
  REQUIRE(idx.size() == 11);
  const auto& expected = spinv::kerr_index_table();
  const int designated[10] = {12, 4, 4, 2, 2, 6, 6, 2, 6, 2};
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(std::stoi(idx[k + 1][5]) == designated[k]);
    CHECK(expected[k] == designated[k]);
  }
  CHECK(idx[1][2] == "g00");
  CHECK(idx[1][4] == "U1;U2");
  const auto pm = table(a / "period_matrix.csv");
  CHECK(pm.size() == 1 + 2 * 2 * 4);
  CHECK(fs::exists(a / "loci.csv"));
  CHECK(table(a / "spectrum.csv").size() > 1);
  const auto fits = table(a / "fits.csv");
  REQUIRE(fits.size() == 1 + 2 * 2);
  CHECK(fits[0][5] == "at_grid_edge");
  for (std::size_t i = 1; i < fits.size(); ++i) CHECK(std::stod(fits[i][3]) > 0);
  const auto manifest = slurp(a / "manifest.toml");
  CHECK(manifest.find("homology basis") != std::string::npos);
  CHECK(manifest.find("jobs") == std::string::npos);

  // identical config, different job count: byte-identical outputs
  const auto b = scratch("kerr_b");
  REQUIRE(cli({"--config", (a / "manifest.toml").string(), "--out", b.string()}).code == 0);
  CHECK(same_tree(a, b));

  const auto bad = scratch("kerr_bad");
  CHECK(cli({"kerr", "--a", "1", "--out", bad.string()}).code == 1);
  CHECK(cli({"kerr", "--a", "1.5", "--out", bad.string()}).code == 1);
  CHECK(cli({"kerr", "--coefficients", "g44", "--out", bad.string()}).code == 1);
  CHECK(cli({"kerr", "--point", "0.1", "--out", bad.string()}).code == 1);
  CHECK_FALSE(fs::exists(bad));
}

TEST_CASE("compare command") {
  const auto a = scratch("cmp_a"), a2 = scratch("cmp_a2"), other = scratch("cmp_other");
  REQUIRE(cli({"kerr", "--coefficients", "g03", "--out", a.string()}).code == 0);
  REQUIRE(cli({"kerr", "--coefficients", "g03", "--out", a2.string()}).code == 0);
  REQUIRE(cli({"kerr", "--coefficients", "g03", "--a", "0.6", "--out", other.string()}).code == 0);

  const auto self = cli({"compare", "--a", a.string(), "--b", a2.string()});
  CHECK(self.code == 0);
  CHECK(value_of(self.out, "verdict") == "equivalent");
  CHECK(value_of(self.out, "max_deviation") == "0");

  const auto diff = scratch("cmp_report");
  const auto r = cli({"compare", "--a", a.string(), "--b", other.string(), "--out", diff.string()});
  CHECK(r.code == 0);
  CHECK(value_of(r.out, "verdict") == "not equivalent");
  CHECK(value_of(r.out, "worst").rfind("g03 at (0.45, 0.3)", 0) == 0);
  CHECK(std::stod(value_of(r.out, "max_deviation")) > 1e-3);
  CHECK(slurp(diff / "report.txt") == r.out);
  CHECK(fs::exists(diff / "manifest.toml"));

  // zero-matrix bundles: the condition is vacuous
  const auto z1 = fs::temp_directory_path() / "spinv_cli_test_zero1.csv";
  const auto z2 = fs::temp_directory_path() / "spinv_cli_test_zero2.csv";
  for (const auto& z : {z1, z2}) {
    std::ofstream f(z);
    f << "label,x,y,m,genus,degenerate,row,col,re,im\n";
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) f << "g11,0.1,0.2,2,0,true," << i << "," << j << ",0,0\n";
  }
  const auto zz = cli({"compare", "--a", z1.string(), "--b", z2.string()});
  CHECK(zz.code == 0);
  CHECK(value_of(zz.out, "verdict") == "equivalent");
  CHECK(value_of(zz.out, "verdict") != "not equivalent");

  // a degenerate bundle against a genus-2 one never matches
  const auto mixed = cli({"compare", "--a", z1.string(), "--b", a.string()});
  CHECK(mixed.code == 2);   // labels differ: shape mismatch

  const auto two = scratch("cmp_two");
  REQUIRE(cli({"kerr", "--coefficients", "g03", "--point", "0.45,0.3", "--point", "0.2,0.1", "--out", two.string()})
              .code == 0);
  const auto shape = cli({"compare", "--a", a.string(), "--b", two.string()});
  CHECK(shape.code == 2);
  CHECK(shape.err.find("shape mismatch") != std::string::npos);
  CHECK(cli({"compare", "--a", "/nonexistent", "--b", a.string()}).code == 1);

  const auto cf = cli({"compare", "--mode", "coframe", "--coframe-b", "shifted", "--tol", "1e-6"});
  CHECK(cf.code == 0);
  CHECK(value_of(cf.out, "verdict") == "equivalent");
  CHECK(value_of(cf.out, "rank") == "4");
  const auto bent = cli({"compare", "--mode", "coframe", "--coframe-b", "bent", "--tol", "1e-6"});
  CHECK(value_of(bent.out, "verdict") != "equivalent");
}

TEST_CASE("collapse command") {
  const auto c = scratch("collapse_const");
  REQUIRE(cli({"collapse", "--out", c.string()}).code == 0);
  const auto rep = slurp(c / "report.txt");
  CHECK(std::stod(value_of(rep, "closed_form_max_error")) <= 1e-8);
  CHECK(std::stod(value_of(rep, "F0")) == doctest::Approx(0.2).epsilon(0.05));
  CHECK(value_of(rep, "verdict") == "accept");
  const auto traj = table(c / "trajectory.csv");
  CHECK(traj.size() == 4002);   // 40001 samples at stride 10 plus the header

  const auto r = scratch("collapse_reject");
  REQUIRE(cli({"collapse", "--candidate-scale", "1.5", "--out", r.string()}).code == 0);
  const auto rr = slurp(r / "report.txt");
  CHECK(value_of(rr, "verdict") == "reject");
  CHECK(value_of(rr, "mismatch_degree") == "0");

  const auto n1 = scratch("collapse_noise1"), n2 = scratch("collapse_noise2");
  REQUIRE(cli({"collapse", "--noise", "1e-4", "--seed", "7", "--out", n1.string()}).code == 0);
  REQUIRE(cli({"--config", (n1 / "manifest.toml").string(), "--out", n2.string()}).code == 0);
  CHECK(same_tree(n1, n2));
  CHECK(value_of(slurp(n1 / "report.txt"), "verdict") == "accept");
  CHECK(slurp(n1 / "manifest.toml").find("seed=7") != std::string::npos);

  const auto bad = scratch("collapse_bad");
  CHECK(cli({"collapse", "--t-max", "10", "--out", bad.string()}).code == 1);   // fewer than three periods
  CHECK(cli({"collapse", "--dt", "0.5", "--out", bad.string()}).code == 1);
  CHECK_FALSE(fs::exists(bad));
}

TEST_CASE("evaporate command") {
  const auto e = scratch("evap");
  REQUIRE(cli({"evaporate", "--out", e.string()}).code == 0);
  const auto rep = slurp(e / "report.txt");
  CHECK(std::stod(value_of(rep, "roundtrip_max_error")) <= 1e-8);
  CHECK(std::stod(value_of(rep, "sweep_fraction")) >= 0.95);
  CHECK(value_of(rep, "inverse_kind") == "absorption");
  const auto w = table(e / "widths.csv");
  REQUIRE(w.size() == 1 + 6 * 4);
  for (std::size_t step = 1; step <= 5; ++step)
    for (std::size_t g = 0; g < 4; ++g)
      CHECK(std::stod(w[1 + step * 4 + g][5]) < std::stod(w[1 + (step - 1) * 4 + g][5]));

  const auto sub = scratch("evap_sub");
  const auto r = cli({"evaporate", "--spacing", "5e-4", "--out", sub.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("Planck") != std::string::npos);
  CHECK_FALSE(fs::exists(sub));
  CHECK(cli({"evaporate", "--amplitude", "0", "--coupling", "0", "--out", sub.string()}).code == 1);
  CHECK_FALSE(fs::exists(sub));
}
