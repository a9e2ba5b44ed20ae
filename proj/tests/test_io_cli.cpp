// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scattersim/cli.hpp"
#include "scattersim/io.hpp"

using namespace scattersim;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

namespace fs = std::filesystem;

// Fresh per-test scratch tree under the working directory.
fs::path scratch(const std::string& leaf) {
  const fs::path p = fs::path("io_cli_scratch") / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

io::Manifest parse(const std::string& text) {
  std::istringstream in(text);
  return io::parse_manifest(in, "conf");
}

// Shrunken classical job: one (E, T) point, short horizon, coarse guard.
io::Manifest tiny_classical(const std::string& dir) {
  io::Manifest m = parse(R"(
[ensemble]
n_traj = 60
workers = 1
[integrator]
theta = 0.04
t_final_ps = 12
record_interval_fs = 500
analysis_time_ps = 11
[fit]
window_lo_ps = 4
window_hi_ps = 11
[sweep]
energies_mev = 5
temperatures_k = 40
[output]
seed = 4242
)");
  m.out_dir = dir;
  return m;
}

// Elastic quantum box small enough to propagate in a couple of seconds.
io::Manifest tiny_quantum(const std::string& dir) {
  io::Manifest m = parse(R"(
[model]
h_au = 0
z0_au = 20
[ensemble]
z_i_au = 28
dz_au = 3
dx_au = 10
[sweep]
energies_mev = 5
[quantum]
grid_z_min_au = -10
grid_z_max_au = 120
grid_n_z = 216
grid_x_periods = 33
grid_n_x = 40
dt_au = 50
t_final_ps = 6.5
record_interval_fs = 650
analysis_time_ps = 6.3
snapshot_times_ps = 2
[output]
seed = 31
)");
  m.out_dir = dir;
  return m;
}

}  // namespace

TEST_CASE("manifest parser round-trips values and rejects malformed input") {
  const auto m = parse(R"(
# comment and blank lines are skipped
; either comment marker works
[model]
v0_mev = 10.5
[bath]
n_modes = 4
[sweep]
energies_mev = 2, 5, 7.25
temperatures_k = 0
[output]
seed = 91
dir = elsewhere
)");
  CHECK(m.v0_mev == 10.5);
  CHECK(m.n_modes == 4);
  CHECK(m.energies_mev == std::vector<double>{2.0, 5.0, 7.25});
  CHECK(m.temperatures_k == std::vector<double>{0.0});
  CHECK(m.seed == 91);
  CHECK(m.out_dir == "elsewhere");
  CHECK(m.alpha_inv_angstrom == 0.5);  // untouched keys keep their defaults

  SECTION("echo lines re-parse to the identical echo") {
    std::string text;
    for (const auto& line : io::manifest_echo(m)) {
      const auto dot = line.find('.');
      if (dot == std::string::npos || line.find(" = ") == std::string::npos) continue;
      std::string v = line.substr(line.find(" = ") + 3);
      if (v == "[]") continue;
      for (auto& c : v)
        if (c == '[' || c == ']') c = ' ';
      text += "[" + line.substr(0, dot) + "]\n";
      text += line.substr(dot + 1, line.find(" = ") - dot - 1) + " = " + v + "\n";
    }
    CHECK(io::manifest_echo(parse(text)) == io::manifest_echo(m));
  }

  SECTION("errors carry the source name and line number") {
    CHECK_THROWS_WITH(parse("[nonsense]\n"), ContainsSubstring("conf:1") &&
                                                 ContainsSubstring("unknown section"));
    CHECK_THROWS_WITH(parse("\n[model]\nv0_mevv = 1\n"),
                      ContainsSubstring("conf:3") && ContainsSubstring("unknown key"));
    CHECK_THROWS_WITH(parse("[model]\nv0_mev = ten\n"), ContainsSubstring("conf:2"));
    CHECK_THROWS_WITH(parse("[model]\nv0_mev 10\n"),
                      ContainsSubstring("expected 'key = value'"));
    CHECK_THROWS_WITH(parse("v0_mev = 10\n"), ContainsSubstring("before any [section]"));
    CHECK_THROWS_AS(parse("[model]\nv0_mev =\n"), ParseError);
  }

  SECTION("a missing manifest file is an io error") {
    CHECK_THROWS_AS(io::load_manifest("no/such/file.ini"), IoError);
  }
}

TEST_CASE("resolution converts units and expands the sweep") {
  io::Manifest m;
  const auto r = io::resolve(m);

  using units::Dimension;
  using units::to_atomic;
  CHECK_THAT(r.spec.morse.V0, WithinRel(to_atomic(34.85, Dimension::energy), 1e-14));
  CHECK_THAT(r.spec.corr.l, WithinRel(to_atomic(3.61, Dimension::length), 1e-14));
  CHECK_THAT(r.spec.mass, WithinRel(to_atomic(4.002602, Dimension::mass), 1e-14));
  CHECK_THAT(r.run.t_final,
             WithinRel(to_atomic(60000.0, Dimension::time), 1e-14));
  CHECK_THAT(r.fit_lo, WithinRel(to_atomic(40000.0, Dimension::time), 1e-14));

  // Default sweep: 2 energies x 5 temperatures, one quantum job per energy.
  REQUIRE(r.classical_jobs.size() == 10);
  REQUIRE(r.quantum_jobs.size() == 2);
  CHECK(r.classical_jobs.front().tag == "E2meV_T0K");
  CHECK(r.classical_jobs.back().tag == "E5meV_T80K");
  CHECK(r.quantum_jobs[1].tag == "E5meV");
  CHECK_THAT(r.classical_jobs.front().e_i,
             WithinRel(to_atomic(2.0, Dimension::energy), 1e-14));

  // The x extent spans the requested integer number of lattice periods.
  CHECK_THAT(r.grid.x_max - r.grid.x_min, WithinRel(147.0 * r.spec.corr.l, 1e-12));

  SECTION("fractional period counts are rejected") {
    m.grid_x_periods = 3.5;
    CHECK_THROWS_AS(io::resolve(m), ConfigError);
  }
}

TEST_CASE("job seeds depend on physical values, not sweep position") {
  io::Manifest a;
  a.energies_mev = {2.0, 5.0};
  a.temperatures_k = {0.0};
  io::Manifest b = a;
  b.energies_mev = {2.0, 5.0, 7.0};  // extending the sweep...
  const auto ra = io::resolve(a);
  const auto rb = io::resolve(b);
  CHECK(ra.classical_jobs[0].seed == rb.classical_jobs[0].seed);  // ...moves no seed
  CHECK(ra.classical_jobs[1].seed == rb.classical_jobs[1].seed);
  CHECK(ra.quantum_jobs[0].seed == rb.quantum_jobs[0].seed);

  // Distinct jobs get distinct streams, and the base seed shifts all of them.
  CHECK(ra.classical_jobs[0].seed != ra.classical_jobs[1].seed);
  CHECK(ra.classical_jobs[0].seed != ra.quantum_jobs[0].seed);
  io::Manifest c = a;
  c.seed = a.seed + 1;
  CHECK(io::resolve(c).classical_jobs[0].seed != ra.classical_jobs[0].seed);
}

TEST_CASE("csv writer and reader agree through the bytes") {
  const auto dir = scratch("csv");
  const auto path = (dir / "t.csv").string();
  const std::vector<std::vector<double>> rows = {{0.1, 1.0 / 3.0, -2.5e-13},
                                                 {4096.0, 5e22, 0.0}};
  io::write_csv(path, {"first preamble line", "second"}, "a,b,c", rows);

  const auto back = io::read_csv(path);
  CHECK(back.names == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(back.rows.size() == 2);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      CHECK(back.rows[i][j] == rows[i][j]);  // bitwise round trip

  SECTION("ragged rows fail with the line number") {
    std::ofstream(dir / "bad.csv") << "a,b\n1,2\n3\n";
    CHECK_THROWS_WITH(io::read_csv((dir / "bad.csv").string()),
                      ContainsSubstring("bad.csv:3"));
  }
  SECTION("the trapping reader names the columns it wanted") {
    std::ofstream(dir / "wrong.csv") << "time,value\n1,2\n";
    CHECK_THROWS_WITH(io::read_trapping_csv((dir / "wrong.csv").string()),
                      ContainsSubstring("t_ps,P_trap") && ContainsSubstring("time,value"));
    std::ofstream(dir / "bare.csv") << "t_ps,P_trap\n1,0.5\n";
    const auto ts = io::read_trapping_csv((dir / "bare.csv").string());
    CHECK(ts.stderrs == std::vector<double>{0.0});  // stderr column is optional
  }
  SECTION("an unwritable path is an io error") {
    CHECK_THROWS_AS(io::write_csv((dir / "no/dir.csv").string(), {}, "a", {}), IoError);
    std::ofstream(dir / "file") << "x";
    CHECK_THROWS_AS(io::ensure_dir((dir / "file").string()), IoError);
  }
}

TEST_CASE("classical pipeline emits a deterministic file set") {
  const auto base = scratch("classical");
  auto man = tiny_classical((base / "a").string());

  SECTION("dry run resolves without touching the filesystem") {
    std::ostringstream log;
    CHECK(cli::cmd_classical(man, log, {.dry_run = true}) == 0);
    CHECK_THAT(log.str(), ContainsSubstring("E5meV_T40K"));
    CHECK(!fs::exists(base / "a"));

    std::ostringstream log2;  // halving acts before the printout
    CHECK(cli::cmd_classical(man, log2, {.dry_run = true, .halve_dt = true}) == 0);
    CHECK_THAT(log2.str(), ContainsSubstring("dt 20.67"));
  }

  std::ostringstream log;
  REQUIRE(cli::cmd_classical(man, log) == 0);
  const char* kinds[] = {"trapping", "energy", "rho", "angular", "eloss"};
  for (const char* k : kinds)
    CHECK(fs::exists(base / "a" / (std::string("classical_E5meV_T40K_") + k + ".csv")));

  const auto summary = io::json::parse(slurp(base / "a" / "classical_summary.json"));
  CHECK(summary.at("schema") == io::k_schema);
  REQUIRE(summary.at("jobs").size() == 1);
  const auto& job = summary.at("jobs")[0];
  CHECK(job.at("tag") == "E5meV_T40K");
  CHECK(job.at("n_aborted") == 0);
  REQUIRE(!job.at("fit").is_null());

  const auto energy = io::read_csv((base / "a" / "classical_E5meV_T40K_energy.csv").string());
  CHECK(energy.names == std::vector<std::string>{"t_ps", "E_es_meV", "stderr",
                                                 "E_es_cond_meV", "stderr_cond"});

  SECTION("reruns and worker counts cannot move a byte") {
    auto again = tiny_classical((base / "b").string());
    auto threaded = tiny_classical((base / "c").string());
    threaded.workers = 3;
    std::ostringstream quiet;
    REQUIRE(cli::cmd_classical(again, quiet) == 0);
    REQUIRE(cli::cmd_classical(threaded, quiet) == 0);
    for (const char* k : kinds) {
      const std::string f = std::string("classical_E5meV_T40K_") + k + ".csv";
      CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));
      CHECK(slurp(base / "a" / f) == slurp(base / "c" / f));
    }
    CHECK(slurp(base / "a" / "classical_summary.json") ==
          slurp(base / "c" / "classical_summary.json"));
  }

  SECTION("a standalone refit reproduces the embedded fit") {
    std::ostringstream quiet;
    const auto refit = cli::cmd_fit_rate(
        (base / "a" / "classical_E5meV_T40K_trapping.csv").string(), 4.0, 11.0, quiet);
    CHECK_THAT(refit.c, WithinRel(job.at("fit").at("c").get<double>(), 1e-12));
    CHECK_THAT(refit.m, WithinRel(job.at("fit").at("m_per_fs").get<double>(), 1e-12));
  }
}

TEST_CASE("quantum pipeline emits consistent artifacts on an elastic box") {
  const auto base = scratch("quantum");
  auto man = tiny_quantum((base / "a").string());
  std::ostringstream log;
  REQUIRE(cli::cmd_quantum(man, log) == 0);

  const auto summary = io::json::parse(slurp(base / "a" / "quantum_summary.json"));
  REQUIRE(summary.at("jobs").size() == 1);
  const auto& job = summary.at("jobs")[0];
  CHECK(job.at("tag") == "E5meV");
  CHECK(job.at("norm_drift").get<double>() < 1e-10);

  // Elastic and flat: all escaped density sits in the specular channel, and
  // the channel energy equals the incident energy up to the packet width
  // offset of a few tenths of a meV.
  const auto rho = io::read_csv((base / "a" / "quantum_E5meV_rho.csv").string());
  REQUIRE(rho.rows.size() == 1);
  CHECK(rho.rows[0][0] == 0.0);
  CHECK(rho.rows[0][1] > 0.999);
  const auto eloss = io::read_csv((base / "a" / "quantum_E5meV_eloss.csv").string());
  REQUIRE(eloss.rows.size() == 1);
  CHECK(std::abs(eloss.rows[0][1]) < 0.5);

  const auto trapping = io::read_csv((base / "a" / "quantum_E5meV_trapping.csv").string());
  CHECK(trapping.rows.front()[1] < 0.02);  // packet starts beyond z0...
  CHECK(trapping.rows.back()[1] < 0.12);   // ...and has mostly reflected out

  SECTION("the snapshot header matches the grid") {
    std::ifstream snap(base / "a" / "quantum_E5meV_snap2ps.bin", std::ios::binary);
    REQUIRE(snap);
    char magic[8];
    std::int64_t dims[2];
    double meta[5];
    snap.read(magic, 8);
    snap.read(reinterpret_cast<char*>(dims), sizeof dims);
    snap.read(reinterpret_cast<char*>(meta), sizeof meta);
    CHECK(std::memcmp(magic, io::k_snapshot_magic, 8) == 0);
    CHECK(dims[0] == 216);
    CHECK(dims[1] == 40);
    CHECK(meta[0] == -10.0);
    CHECK(meta[1] == 120.0);
    const double t_want = units::to_atomic(2000.0, units::Dimension::time);
    CHECK(std::abs(meta[4] - t_want) <= 50.0);  // snapped to the step grid
    std::vector<double> payload(216 * 40);
    snap.read(reinterpret_cast<char*>(payload.data()),
              std::streamsize(payload.size() * sizeof(double)));
    CHECK(snap.gcount() == std::streamsize(payload.size() * sizeof(double)));
    snap.get();
    CHECK(snap.eof());
    double mass = 0.0;
    for (double d : payload) mass += d;
    CHECK(mass > 0.0);
  }

  SECTION("a rerun reproduces every byte") {
    auto again = tiny_quantum((base / "b").string());
    std::ostringstream quiet;
    REQUIRE(cli::cmd_quantum(again, quiet) == 0);
    for (const char* f : {"quantum_E5meV_rho.csv", "quantum_E5meV_trapping.csv",
                          "quantum_E5meV_energy.csv", "quantum_E5meV_snap2ps.bin",
                          "quantum_summary.json"})
      CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));
  }
}

TEST_CASE("bath spectrum lists the discretized modes") {
  io::Manifest m;
  std::ostringstream out;
  CHECK(cli::cmd_bath_spectrum(m, out) == 0);

  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK_THAT(line, ContainsSubstring("scattersim"));
  std::getline(in, line);
  CHECK_THAT(line, ContainsSubstring("N 8"));
  std::getline(in, line);
  CHECK(line == "j,omega_au,omega_mev,c_au");
  std::getline(in, line);
  CHECK_THAT(line, ContainsSubstring("1,0.000184647606002"));
  int rows = 1;
  while (std::getline(in, line) && !line.empty()) ++rows;
  CHECK(rows == 8);
}
