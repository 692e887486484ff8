#include <unistd.h>

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace fwmkv;
using namespace fwmkv::tools;

namespace {

struct Scratch {
  std::filesystem::path dir;
  Scratch() : dir(std::filesystem::temp_directory_path() / ("fwmkv_tools_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  ~Scratch() { std::filesystem::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "mkv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> csv_row(const std::string& text, int index) {
  std::istringstream in(text);
  std::string line;
  for (int i = 0; i <= index; ++i) std::getline(in, line);
  std::vector<std::string> cells;
  std::istringstream ls(line);
  for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
  return cells;
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("trig term grammar") {
  const auto t = parse_trig_terms("const=1 cos1=0.5 sin2=-0.25 cos(-3)=2", 1);
  REQUIRE(t.size() == 4u);
  CHECK(t[0].kind == TrigTerm::Kind::constant);
  CHECK(t[1].kind == TrigTerm::Kind::cosine);
  CHECK(t[1].k[0] == 1);
  CHECK(t[2].kind == TrigTerm::Kind::sine);
  CHECK(t[2].coef == -0.25);
  CHECK(t[3].k[0] == -3);
  const auto u = parse_trig_terms("cos(1,2)=1", 2);
  CHECK(u[0].k[0] == 1);
  CHECK(u[0].k[1] == 2);
  CHECK(parse_trig_terms("", 1).empty());
  CHECK_THROWS_AS(parse_trig_terms("cos1", 1), UsageError);
  CHECK_THROWS_AS(parse_trig_terms("tan1=1", 1), UsageError);
  CHECK_THROWS_AS(parse_trig_terms("cos1=abc", 1), UsageError);
  CHECK_THROWS_AS(parse_trig_terms("cos1=1", 2), UsageError);
  CHECK_THROWS_AS(parse_trig_terms("cos(1,2=1", 2), UsageError);

  const PeriodicFunction1D L = eikonal_running_cost("const=1 cos1=1");
  for (double y : {-3.0, 0.0, 1.3}) CHECK(L(y) == doctest::Approx(1.0 + std::cos(y)).epsilon(1e-5));
}

TEST_CASE("measure specs") {
  Scratch s;
  CHECK(load_measure_spec("dirac:0.25", 1).particles().coords()[0] == 0.25);
  CHECK(load_measure_spec("dirac:0.1,0.2", 2).dim() == 2);
  CHECK(load_measure_spec("uniform:16", 1).grid().cell_count() == 16u);
  CHECK_THROWS_AS(load_measure_spec("dirac:0.1", 2), UsageError);
  CHECK_THROWS_AS(load_measure_spec(s / "missing.txt", 1), UsageError);
  write_text(s / "bad.txt", "not a measure\n");
  CHECK_THROWS_AS(load_measure_spec(s / "bad.txt", 1), UsageError);
  write_measure(std::filesystem::path(s / "two.txt"), random_cloud(2, 3, 1));
  CHECK_THROWS_AS(load_measure_spec(s / "two.txt", 1), UsageError);
  CHECK(load_measure_spec(s / "two.txt", 2).dim() == 2);
}

TEST_CASE("families and dictionaries from specs") {
  FamilySpec f;
  CHECK(make_family(f).name == eikonal_family(PeriodicFunction1D::constant(1.0)).name);
  f.name = "kuramoto";
  CHECK(make_family(f).dim == 1);
  f.name = "fourier";
  f.dim = 2;
  f.drift = {"sin(1,0)=1", "cos(0,1)=1"};
  f.cost = "const=1";
  CHECK(make_family(f).dim == 2);
  f.drift = {"sin(1,0)=1"};
  CHECK_THROWS_AS(make_family(f), UsageError);
  f.name = "nope";
  CHECK_THROWS_AS(make_family(f), UsageError);

  DictionarySpec d;
  CHECK(d.build().size() == 9u);
  d.values = {0.5, -0.5};
  CHECK(d.build().size() == 2u);
  CHECK(d.build()[1].constant_value()[0] == -0.5);
  d.values.clear();
  d.count = 0;
  CHECK_THROWS_AS(d.build(), UsageError);
}

TEST_CASE("experiment config round trip") {
  ExperimentConfig c;
  c.id = "probe";
  c.family.name = "fourier";
  c.family.dim = 2;
  c.family.drift = {"sin(1,0)=0.3", "cos(0,1)=-1e-7"};
  c.family.cost = "const=0.1";
  c.family.sigma = 0.1 + 0.2;
  c.dictionary.values = {-1.0 / 3.0, 2.0};
  c.sim.particles = 123;
  c.sim.dt = 1.0 / 7.0;
  c.sim.seed = 18446744073709551557ull;
  c.budget = 77;
  c.lambda = 4.5;
  c.output = "some/dir";
  const KvConfig kv = c.to_kv();
  const ExperimentConfig back = ExperimentConfig::from_kv(KvConfig::parse(kv.dump()));
  CHECK(back == c);
  CHECK(back.sim.dt == c.sim.dt);
  CHECK(back.family.sigma == c.family.sigma);
  CHECK(back.sim.seed == c.sim.seed);
  CHECK(back.family.drift == c.family.drift);
  CHECK(ExperimentConfig::from_kv(KvConfig{}) == ExperimentConfig{});

  CHECK_THROWS_AS(ExperimentConfig::from_kv(KvConfig::parse("[family]\nbogus = 1\n")), UsageError);
  CHECK_THROWS_AS(ExperimentConfig::from_kv(KvConfig::parse("[nowhere]\nx = 1\n")), UsageError);
  CHECK_THROWS_AS(ExperimentConfig::from_kv(KvConfig::parse("[simulation]\ndt = fast\n")), UsageError);

  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("manifest, lock and value tables") {
  Scratch s;
  ExperimentConfig c;
  c.id = "m";
  RunManifest m;
  m.command = "value";
  m.config = c.to_kv();
  m.wall_clock = 1.5;
  m.checks = {{"a", true}, {"b", false}};
  m.artifacts = {"value.csv"};
  m.write(s.dir);
  const RunManifest r = RunManifest::read(s.dir);
  CHECK(r.command == "value");
  CHECK(r.tool_version == kToolVersion);
  CHECK(r.checks.size() == 2u);
  CHECK_FALSE(r.pass());
  CHECK(r.artifacts == m.artifacts);
  CHECK(ExperimentConfig::from_kv(r.config) == c);
  CHECK(ExperimentConfig::load(s.dir / kManifestName) == c);
  CHECK_THROWS_AS(RunManifest::read(s.dir / "nothing"), UsageError);

  {
    RunLock lock(s.dir / "run");
    CHECK(std::filesystem::exists(s.dir / "run" / ".lock"));
    CHECK_THROWS_AS(RunLock(s.dir / "run"), UsageError);
  }
  CHECK_NOTHROW(RunLock(s.dir / "run"));

  const ValueTable w = eikonal_solve(EikonalProblem{eikonal_running_cost("const=1 cos1=1"), 10, 12}, false);
  write_value_table(s.dir / "w.txt", w);
  const ValueTable back = read_value_table(s.dir / "w.txt");
  CHECK(back.scheme == w.scheme);
  CHECK(back.time_cells() == 10);
  CHECK(back.space_cells() == 12);
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j < 12; ++j) CHECK(back(i, j) == w(i, j));
}

TEST_CASE("cli: metric") {
  Scratch s;
  write_measure(std::filesystem::path(s / "a.txt"), TorusMeasure::dirac1(0.0));
  write_measure(std::filesystem::path(s / "b.txt"), TorusMeasure::dirac1(kPi));
  const CliResult same = run({"metric", s / "a.txt", s / "a.txt"});
  CHECK(same.code == 0);
  CHECK(same.out.rfind("0,", 0) == 0);

  const CliResult ab = run({"metric", s / "a.txt", s / "b.txt", "--lambda", "3", "--cutoff", "64"});
  CHECK(ab.code == 0);
  const MetricResult lib = rho_lambda(read_measure(std::filesystem::path(s / "a.txt")), read_measure(std::filesystem::path(s / "b.txt")), 3.0, 64);
  CHECK(ab.out == format_double(lib.value) + "," + format_double(lib.truncation_error) + ",64\n");

  CHECK(run({"metric", s / "missing.txt", s / "a.txt"}).code == 2);
  CHECK(run({"metric", s / "a.txt"}).code == 2);
  CHECK(run({"metric", s / "a.txt", s / "b.txt", "--bogus"}).code == 2);
  CHECK(run({"metric", "--help"}).code == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("cli: every subcommand has help") {
  for (const char* sub : {"metric", "hamiltonian", "simulate", "eikonal", "value", "dpp-check", "lipschitz", "acceptance", "export"}) {
    const CliResult r = run({sub, "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("Usage") != std::string::npos);
    CHECK(run({sub, "--no-such-flag"}).code == 2);
  }
}

TEST_CASE("cli: acceptance and export errors") {
  Scratch s;
  CHECK(run({"acceptance", "nope", "--out", s / "acc"}).code == 2);
  CHECK_FALSE(std::filesystem::exists(s / "acc"));
  CHECK(run({"export", s.dir.string()}).code == 2);
  CHECK(run({"export", s / "absent"}).code == 2);

  const CliResult calc = run({"acceptance", "calculus", "--out", s / "acc"});
  CHECK(calc.code == 0);
  CHECK(calc.out.find("criterion 2 PASS") != std::string::npos);
  CHECK(slurp(s.dir / "acc" / "acceptance_calculus.csv").rfind("criterion,check,value,relation,threshold,status\n", 0) == 0);
  CHECK(RunManifest::read(s.dir / "acc").pass());
}

TEST_CASE("cli: eikonal run and surface export") {
  Scratch s;
  const CliResult r = run({"eikonal", "--out", s / "eik", "--nt", "40", "--ny", "32"});
  REQUIRE(r.code == 0);
  REQUIRE(run({"export", s / "eik"}).code == 0);
  const ValueTable w = read_value_table(s.dir / "eik" / "w_table.txt");
  std::ifstream in(s.dir / "eik" / "w_surface.dat");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double t, y, v;
    ls >> t >> y >> v;
    const int i = rows / 32;
    const int j = rows % 32;
    CHECK(t == w.time(i));
    CHECK(y == w.space(j));
    CHECK(v == w(i, j));
    ++rows;
  }
  CHECK(rows == 41 * 32);
  CHECK(run({"eikonal", "--out", s / "eik2", "--L", "const=0.5", "--nt", "10", "--ny", "8", "--oracle"}).code == 0);
}

TEST_CASE("cli: simulate, value, dpp-check and lipschitz on a frozen unit-cost family") {
  Scratch s;
  write_text(s / "frozen.cfg",
             "[family]\nname = fourier\ngain = 0\nsigma = 0\ncost_control = 0\ncost = const=1\n"
             "[dictionary]\nvalues = -1 0 1\n[simulation]\nparticles = 20\ndt = 0.05\n[search]\ndepth = 2\nmc_reps = 2\n");

  const CliResult sim = run({"simulate", "--config", s / "frozen.cfg", "--out", s / "sim", "--signal", "0.5", "-0.5"});
  REQUIRE(sim.code == 0);
  REQUIRE(sim.out.rfind("payoff,", 0) == 0);
  CHECK(std::stod(sim.out.substr(7)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::filesystem::exists(s.dir / "sim" / "payoff.csv"));
  CHECK(std::filesystem::exists(s.dir / "sim" / "laws_0.txt"));
  CHECK_FALSE(std::filesystem::exists(s.dir / "sim" / ".lock"));
  // the manifest config reproduces the run
  const CliResult again = run({"simulate", "--config", s / "sim/manifest.txt", "--out", s / "sim2", "--signal", "0.5", "-0.5"});
  CHECK(again.out == sim.out);
  CHECK(slurp(s.dir / "sim" / "laws_20.txt") == slurp(s.dir / "sim2" / "laws_20.txt"));

  const CliResult val = run({"value", "--config", s / "frozen.cfg", "--out", s / "val"});
  REQUIRE(val.code == 0);
  const auto cells = csv_row(val.out, 1);
  REQUIRE(cells.size() >= 6u);
  CHECK(std::stod(cells[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::stod(cells[1]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cells[3] == "9");
  CHECK(cells[4] == "0");

  const CliResult dpp = run({"dpp-check", "--config", s / "frozen.cfg", "--out", s / "dpp", "--t", "0.2", "--tau", "0.6", "1"});
  CHECK(dpp.code == 0);
  REQUIRE(run({"export", s / "dpp"}).code == 0);
  std::istringstream dat(slurp(s.dir / "dpp" / "dpp.dat"));
  std::string header;
  std::getline(dat, header);
  std::vector<double> row(7);
  for (double& x : row) dat >> x;
  CHECK(row[0] == 0.2);
  CHECK(row[1] == 0.6);
  CHECK(row[2] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(std::abs(row[4]) <= 1e-12);
  CHECK(row[6] == 1.0);

  const CliResult lip = run({"lipschitz", "--config", s / "frozen.cfg", "--out", s / "lip", "--gaps", "0.4", "0.2", "0.1", "0.05"});
  CHECK(lip.code == 0);
  REQUIRE(run({"export", s / "lip"}).code == 0);
  std::ifstream in(s.dir / "lip" / "lipschitz.dat");
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> cols;
    for (double x; ls >> x;) cols.push_back(x);
    CHECK(cols.size() == 2u);
    CHECK(cols[1] == doctest::Approx(cols[0]).epsilon(1e-9));  // difference = h
    ++rows;
  }
  CHECK(rows == 4);

  const CliResult space = run({"lipschitz", "--config", s / "frozen.cfg", "--out", s / "lips", "--mode", "space", "--pairs", "3"});
  CHECK(space.code == 0);
  CHECK(space.out.find("skipped,") != std::string::npos);

  const CliResult ham = run({"hamiltonian", "--config", s / "frozen.cfg", "--gamma", "cos1=1", "--init", "dirac:0.3"});
  CHECK(ham.code == 0);
  CHECK(ham.out == "1,0,-1\n");
}
