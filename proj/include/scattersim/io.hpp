// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scattersim/dynamics.hpp"
#include "scattersim/errors.hpp"
#include "scattersim/model.hpp"
#include "scattersim/observables.hpp"
#include "scattersim/qdynamics.hpp"
#include "scattersim/sampling.hpp"
#include "scattersim/units.hpp"
#include "scattersim/version.hpp"

// Run manifests and result emission.
//
// A manifest is flat sectioned key = value text; every physical input is in
// the unit its key name declares (meV, angstrom, amu, fs, ps, K, or atomic
// units where the literature quotes atomic units). Conversion to internal
// atomic units happens once, in resolve(). Every output file carries the
// full manifest echo, the seed, and the code version, so a result is
// reproducible from its own header.

namespace scattersim::io {

inline std::string version_string() { return std::string("scattersim ") + version; }
inline constexpr int k_schema = 1;

using json = nlohmann::ordered_json;

struct Manifest {
  // [model]
  double v0_mev = 34.85;
  double alpha_inv_angstrom = 0.5;
  double h_au = 0.1;
  double lattice_angstrom = 3.61;
  double mass_amu = 4.002602;
  double z0_au = 50.0;

  // [bath]
  int n_modes = 8;
  double gamma_tilde = 0.005;
  double cutoff_factor = 10.0;
  double gamma_au = 0.0;  // 0: derive from gamma_tilde

  // [ensemble]
  long n_traj = 10000;
  double z_i_au = 80.0;
  double dz_au = 5.0;
  double dx_au = 40.0;
  double p_xi_au = 0.0;
  double max_abort_fraction = 0.001;
  int workers = 0;  // 0: one per hardware thread

  // [integrator]
  double dt_fs = 1.0;
  double theta = 0.02;
  double t_final_ps = 60.0;
  double record_interval_fs = 500.0;
  double analysis_time_ps = 59.0;

  // [fit]
  double fit_lo_ps = 40.0;
  double fit_hi_ps = 60.0;

  // [sweep]
  std::vector<double> energies_mev = {2.0, 5.0};
  std::vector<double> temperatures_k = {0.0, 10.0, 20.0, 40.0, 80.0};

  // [quantum]
  double grid_z_min_au = -10.0;
  double grid_z_max_au = 1200.0;
  long grid_n_z = 3072;
  double grid_x_periods = 147.0;
  long grid_n_x = 1536;
  double q_dt_au = 12.5;
  double q_t_final_ps = 60.0;
  double q_record_interval_fs = 500.0;
  double q_analysis_time_ps = 59.0;
  std::vector<double> snapshot_times_ps;
  double absorber_length_au = 0.0;  // 0: no absorbing edge
  double absorber_strength_au = 2e-4;
  int absorber_order = 3;

  // [output]
  std::string out_dir = "out";
  std::uint64_t seed = 20260101;
  double bin_width = observables::default_n_bin_width;
  int angular_bins = 91;
};

// ---------------------------------------------------------------------------
// Manifest parsing

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Cursor {
  std::string source;
  long line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source + ":" + std::to_string(line) + ": " + what);
  }
};

inline double parse_double(const Cursor& c, const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    c.fail("value '" + v + "' for key '" + key + "' is not a number");
  }
  if (used != v.size()) c.fail("trailing text after number in key '" + key + "'");
  return out;
}

inline long parse_long(const Cursor& c, const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    c.fail("value '" + v + "' for key '" + key + "' is not an integer");
  }
  if (used != v.size()) c.fail("trailing text after integer in key '" + key + "'");
  return out;
}

inline std::uint64_t parse_u64(const Cursor& c, const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    c.fail("value '" + v + "' for key '" + key + "' is not an unsigned integer");
  }
  if (used != v.size()) c.fail("trailing text after integer in key '" + key + "'");
  return out;
}

inline std::vector<double> parse_list(const Cursor& c, const std::string& key,
                                      const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) c.fail("empty element in list '" + key + "'");
    out.push_back(parse_double(c, key, item));
  }
  if (out.empty()) c.fail("list '" + key + "' is empty");
  return out;
}

}  // namespace detail

inline Manifest parse_manifest(std::istream& in, const std::string& source_name) {
  Manifest m;
  detail::Cursor cur{source_name, 0};
  std::string section;
  std::string line;
  while (std::getline(in, line)) {
    ++cur.line;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') cur.fail("unterminated section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      if (section != "model" && section != "bath" && section != "ensemble" &&
          section != "integrator" && section != "fit" && section != "sweep" &&
          section != "quantum" && section != "output")
        cur.fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) cur.fail("expected 'key = value'");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string val = detail::trim(t.substr(eq + 1));
    if (key.empty()) cur.fail("empty key");
    if (val.empty()) cur.fail("empty value for key '" + key + "'");
    if (section.empty()) cur.fail("key '" + key + "' appears before any [section]");

    auto num = [&] { return detail::parse_double(cur, key, val); };
    auto integer = [&] { return detail::parse_long(cur, key, val); };
    auto list = [&] { return detail::parse_list(cur, key, val); };
    bool known = true;

    if (section == "model") {
      if (key == "v0_mev") m.v0_mev = num();
      else if (key == "alpha_inv_angstrom") m.alpha_inv_angstrom = num();
      else if (key == "h_au") m.h_au = num();
      else if (key == "lattice_angstrom") m.lattice_angstrom = num();
      else if (key == "mass_amu") m.mass_amu = num();
      else if (key == "z0_au") m.z0_au = num();
      else known = false;
    } else if (section == "bath") {
      if (key == "n_modes") m.n_modes = int(integer());
      else if (key == "gamma_tilde") m.gamma_tilde = num();
      else if (key == "cutoff_factor") m.cutoff_factor = num();
      else if (key == "gamma_au") m.gamma_au = num();
      else known = false;
    } else if (section == "ensemble") {
      if (key == "n_traj") m.n_traj = integer();
      else if (key == "z_i_au") m.z_i_au = num();
      else if (key == "dz_au") m.dz_au = num();
      else if (key == "dx_au") m.dx_au = num();
      else if (key == "p_xi_au") m.p_xi_au = num();
      else if (key == "max_abort_fraction") m.max_abort_fraction = num();
      else if (key == "workers") m.workers = int(integer());
      else known = false;
    } else if (section == "integrator") {
      if (key == "dt_fs") m.dt_fs = num();
      else if (key == "theta") m.theta = num();
      else if (key == "t_final_ps") m.t_final_ps = num();
      else if (key == "record_interval_fs") m.record_interval_fs = num();
      else if (key == "analysis_time_ps") m.analysis_time_ps = num();
      else known = false;
    } else if (section == "fit") {
      if (key == "window_lo_ps") m.fit_lo_ps = num();
      else if (key == "window_hi_ps") m.fit_hi_ps = num();
      else known = false;
    } else if (section == "sweep") {
      if (key == "energies_mev") m.energies_mev = list();
      else if (key == "temperatures_k") m.temperatures_k = list();
      else known = false;
    } else if (section == "quantum") {
      if (key == "grid_z_min_au") m.grid_z_min_au = num();
      else if (key == "grid_z_max_au") m.grid_z_max_au = num();
      else if (key == "grid_n_z") m.grid_n_z = integer();
      else if (key == "grid_x_periods") m.grid_x_periods = num();
      else if (key == "grid_n_x") m.grid_n_x = integer();
      else if (key == "dt_au") m.q_dt_au = num();
      else if (key == "t_final_ps") m.q_t_final_ps = num();
      else if (key == "record_interval_fs") m.q_record_interval_fs = num();
      else if (key == "analysis_time_ps") m.q_analysis_time_ps = num();
      else if (key == "snapshot_times_ps") m.snapshot_times_ps = list();
      else if (key == "absorber_length_au") m.absorber_length_au = num();
      else if (key == "absorber_strength_au") m.absorber_strength_au = num();
      else if (key == "absorber_order") m.absorber_order = int(integer());
      else known = false;
    } else if (section == "output") {
      if (key == "dir") m.out_dir = val;
      else if (key == "seed") m.seed = detail::parse_u64(cur, key, val);
      else if (key == "bin_width") m.bin_width = num();
      else if (key == "angular_bins") m.angular_bins = int(integer());
      else known = false;
    }
    if (!known) cur.fail("unknown key '" + key + "' in section [" + section + "]");
  }
  return m;
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  return parse_manifest(in, path);
}

// ---------------------------------------------------------------------------
// Manifest echo

// Everything that can influence emitted numbers, and nothing that cannot:
// ensemble.workers and output.dir are deliberately absent, so outputs are
// byte-comparable across worker counts and directory layouts.
inline json manifest_json(const Manifest& m) {
  json j;
  j["model"] = {{"v0_mev", m.v0_mev},
                {"alpha_inv_angstrom", m.alpha_inv_angstrom},
                {"h_au", m.h_au},
                {"lattice_angstrom", m.lattice_angstrom},
                {"mass_amu", m.mass_amu},
                {"z0_au", m.z0_au}};
  j["bath"] = {{"n_modes", m.n_modes},
               {"gamma_tilde", m.gamma_tilde},
               {"cutoff_factor", m.cutoff_factor},
               {"gamma_au", m.gamma_au}};
  j["ensemble"] = {{"n_traj", m.n_traj},
                   {"z_i_au", m.z_i_au},
                   {"dz_au", m.dz_au},
                   {"dx_au", m.dx_au},
                   {"p_xi_au", m.p_xi_au},
                   {"max_abort_fraction", m.max_abort_fraction}};
  j["integrator"] = {{"dt_fs", m.dt_fs},
                     {"theta", m.theta},
                     {"t_final_ps", m.t_final_ps},
                     {"record_interval_fs", m.record_interval_fs},
                     {"analysis_time_ps", m.analysis_time_ps}};
  j["fit"] = {{"window_lo_ps", m.fit_lo_ps}, {"window_hi_ps", m.fit_hi_ps}};
  j["sweep"] = {{"energies_mev", m.energies_mev}, {"temperatures_k", m.temperatures_k}};
  j["quantum"] = {{"grid_z_min_au", m.grid_z_min_au},
                  {"grid_z_max_au", m.grid_z_max_au},
                  {"grid_n_z", m.grid_n_z},
                  {"grid_x_periods", m.grid_x_periods},
                  {"grid_n_x", m.grid_n_x},
                  {"dt_au", m.q_dt_au},
                  {"t_final_ps", m.q_t_final_ps},
                  {"record_interval_fs", m.q_record_interval_fs},
                  {"analysis_time_ps", m.q_analysis_time_ps},
                  {"snapshot_times_ps", m.snapshot_times_ps},
                  {"absorber_length_au", m.absorber_length_au},
                  {"absorber_strength_au", m.absorber_strength_au},
                  {"absorber_order", m.absorber_order}};
  j["output"] = {{"seed", m.seed},
                 {"bin_width", m.bin_width},
                 {"angular_bins", m.angular_bins}};
  return j;
}

// '#'-prefixed echo lines for CSV headers: version, then section.key = value.
inline std::vector<std::string> manifest_echo(const Manifest& m) {
  std::vector<std::string> lines;
  lines.push_back(version_string());
  const json j = manifest_json(m);
  for (const auto& [section, body] : j.items())
    for (const auto& [key, value] : body.items())
      lines.push_back(section + "." + key + " = " + value.dump());
  return lines;
}

// ---------------------------------------------------------------------------
// Resolution to internal units

struct ClassicalJob {
  double e_mev = 0.0;
  double t_kelvin = 0.0;
  std::uint64_t seed = 0;
  std::string tag;
  double e_i = 0.0;          // atomic units
  double temperature = 0.0;  // k_B T, Hartree
};

struct QuantumJob {
  double e_mev = 0.0;
  std::uint64_t seed = 0;  // echoed for file parity; the dynamics is deterministic
  std::string tag;
  double e_i = 0.0;
};

struct Resolved {
  model::ModelSpec spec;
  sampling::InitialConditions ic;
  dynamics::RunConfig run;
  dynamics::EnsembleConfig ens;  // seed filled per job
  double fit_lo = 0.0, fit_hi = 0.0;
  double bin_width = 0.0;
  int angular_bins = 0;

  qdynamics::Grid2D grid;
  double q_dt = 0.0;
  double q_t_final = 0.0;
  double q_record_interval = 0.0;
  double q_analysis_time = 0.0;
  std::vector<double> snapshot_times;
  qdynamics::Absorber absorber;

  std::vector<ClassicalJob> classical_jobs;
  std::vector<QuantumJob> quantum_jobs;
};

namespace detail {

// splitmix64 finisher: the per-job seed must depend on the job's physical
// values, not its position in the sweep, so adding a temperature never
// reshuffles the other jobs.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t job_seed(std::uint64_t base, double e_mev, double t_kelvin) {
  const std::uint64_t he = mix64(std::bit_cast<std::uint64_t>(e_mev));
  const std::uint64_t ht = mix64(std::bit_cast<std::uint64_t>(t_kelvin));
  return base ^ mix64(he + 3u * ht);
}

inline std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

inline Resolved resolve(const Manifest& m) {
  using units::Dimension;
  Resolved r;

  r.spec.morse.V0 = units::to_atomic(m.v0_mev, Dimension::energy);
  r.spec.morse.alpha = m.alpha_inv_angstrom / units::to_atomic(1.0, Dimension::length);
  r.spec.corr.h = m.h_au;
  r.spec.corr.l = units::to_atomic(m.lattice_angstrom, Dimension::length);
  r.spec.mass = units::to_atomic(m.mass_amu, Dimension::mass);
  r.spec.z0 = m.z0_au;
  const double w0 = model::well_frequency(r.spec.morse, r.spec.mass);
  r.spec.bath =
      model::build_bath(m.gamma_tilde, w0, m.n_modes, m.cutoff_factor, m.gamma_au);

  r.ic.E_i = 0.0;  // per job
  r.ic.z_i = m.z_i_au;
  r.ic.p_xi = m.p_xi_au;
  r.ic.dz = m.dz_au;
  r.ic.dx = m.dx_au;

  r.run.dt = units::to_atomic(m.dt_fs, Dimension::time);
  r.run.t_final = units::to_atomic(m.t_final_ps * constants::fs_per_ps, Dimension::time);
  r.run.record_interval = units::to_atomic(m.record_interval_fs, Dimension::time);
  r.run.analysis_time =
      units::to_atomic(m.analysis_time_ps * constants::fs_per_ps, Dimension::time);
  r.run.theta = m.theta;

  r.ens.n_traj = m.n_traj;
  r.ens.n_workers = m.workers;
  r.ens.max_abort_fraction = m.max_abort_fraction;

  r.fit_lo = units::to_atomic(m.fit_lo_ps * constants::fs_per_ps, Dimension::time);
  r.fit_hi = units::to_atomic(m.fit_hi_ps * constants::fs_per_ps, Dimension::time);
  r.bin_width = m.bin_width;
  r.angular_bins = m.angular_bins;

  const double periods = m.grid_x_periods;
  if (!(periods > 0.0) || std::abs(periods - std::round(periods)) > 1e-9)
    throw ConfigError("quantum.grid_x_periods must be a positive integer");
  const double half_x = periods * r.spec.corr.l / 2.0;
  r.grid = qdynamics::make_grid(m.grid_z_min_au, m.grid_z_max_au, m.grid_n_z, -half_x,
                                half_x, m.grid_n_x);
  r.q_dt = m.q_dt_au;
  r.q_t_final = units::to_atomic(m.q_t_final_ps * constants::fs_per_ps, Dimension::time);
  r.q_record_interval = units::to_atomic(m.q_record_interval_fs, Dimension::time);
  r.q_analysis_time =
      units::to_atomic(m.q_analysis_time_ps * constants::fs_per_ps, Dimension::time);
  for (const double t_ps : m.snapshot_times_ps)
    r.snapshot_times.push_back(
        units::to_atomic(t_ps * constants::fs_per_ps, Dimension::time));
  if (m.absorber_length_au > 0.0)
    r.absorber = {m.absorber_length_au, m.absorber_strength_au, m.absorber_order};

  for (const double e : m.energies_mev) {
    for (const double t : m.temperatures_k) {
      ClassicalJob job;
      job.e_mev = e;
      job.t_kelvin = t;
      job.seed = detail::job_seed(m.seed, e, t);
      job.tag = "E" + detail::format_g(e) + "meV_T" + detail::format_g(t) + "K";
      job.e_i = units::to_atomic(e, Dimension::energy);
      job.temperature = units::to_atomic(t, Dimension::temperature);
      r.classical_jobs.push_back(std::move(job));
    }
    QuantumJob qj;
    qj.e_mev = e;
    qj.seed = detail::job_seed(m.seed, e, -1.0);
    qj.tag = "E" + detail::format_g(e) + "meV";
    qj.e_i = units::to_atomic(e, Dimension::energy);
    r.quantum_jobs.push_back(std::move(qj));
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV emission

// One CSV: '#'-prefixed preamble, one column-name header row, then numeric
// rows in the shortest form that parses back to the identical double, so a
// refit from the file reproduces the in-memory fit exactly. Streams open in
// binary so the bytes are the contract.
inline void write_csv(const std::string& path, const std::vector<std::string>& preamble,
                      const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const auto& line : preamble) out << "# " << line << "\n";
  out << header << "\n";
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof buf, row[i]);
      if (i) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed on '" + path + "'");
}

// Reads back a series CSV written by write_csv. The value column is looked
// up by name so a schema change fails loudly, not silently.
struct SeriesColumns {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
};

inline SeriesColumns read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  detail::Cursor cur{path, 0};
  SeriesColumns out;
  std::string line;
  while (std::getline(in, line)) {
    ++cur.line;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(t);
    while (std::getline(row, cell, ',')) cells.push_back(detail::trim(cell));
    if (out.names.empty()) {
      out.names = cells;
      continue;
    }
    if (cells.size() != out.names.size())
      cur.fail("row has " + std::to_string(cells.size()) + " cells, header has " +
               std::to_string(out.names.size()));
    std::vector<double> vals;
    vals.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
      vals.push_back(detail::parse_double(cur, out.names[i], cells[i]));
    out.rows.push_back(std::move(vals));
  }
  if (out.names.empty()) throw ParseError(path + ": no header row found");
  return out;
}

inline observables::TimeSeries read_trapping_csv(const std::string& path) {
  const SeriesColumns cols = read_csv(path);
  long it = -1, iv = -1, ie = -1;
  for (std::size_t i = 0; i < cols.names.size(); ++i) {
    if (cols.names[i] == "t_ps") it = long(i);
    else if (cols.names[i] == "P_trap") iv = long(i);
    else if (cols.names[i] == "stderr") ie = long(i);
  }
  if (it < 0 || iv < 0) {
    std::string have;
    for (const auto& n : cols.names) have += (have.empty() ? "" : ",") + n;
    throw ParseError(path + ": expected columns t_ps,P_trap[,stderr]; found " + have);
  }
  observables::TimeSeries ts;
  for (const auto& row : cols.rows) {
    ts.times.push_back(units::to_atomic(row[it] * constants::fs_per_ps,
                                        units::Dimension::time));
    ts.values.push_back(row[iv]);
    ts.stderrs.push_back(ie >= 0 ? row[ie] : 0.0);
  }
  if (ts.times.empty()) throw ParseError(path + ": no data rows");
  return ts;
}

// ---------------------------------------------------------------------------
// Snapshot emission: magic, n_z, n_x (int64), z/x extents and time (double),
// then n_z*n_x row-major probability densities (z outer), host-endian.

inline constexpr char k_snapshot_magic[8] = {'S', 'C', 'S', 'N', 'A', 'P', '0', '1'};

inline void write_snapshot(const std::string& path, const qdynamics::WaveState& ws) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(k_snapshot_magic, sizeof k_snapshot_magic);
  const std::int64_t dims[2] = {ws.grid.n_z, ws.grid.n_x};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  const double meta[5] = {ws.grid.z_min, ws.grid.z_max, ws.grid.x_min, ws.grid.x_max,
                          ws.time};
  out.write(reinterpret_cast<const char*>(meta), sizeof meta);
  std::vector<double> rho(ws.psi.size());
  for (std::size_t i = 0; i < ws.psi.size(); ++i) rho[i] = std::norm(ws.psi[i]);
  out.write(reinterpret_cast<const char*>(rho.data()),
            std::streamsize(rho.size() * sizeof(double)));
  if (!out) throw IoError("write failed on '" + path + "'");
}

// ---------------------------------------------------------------------------
// Helpers shared by the command layer

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed on '" + path + "'");
}

}  // namespace scattersim::io
