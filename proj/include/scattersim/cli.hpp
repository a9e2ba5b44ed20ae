// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "scattersim/io.hpp"

// Command layer: one function per subcommand, free of argument-vector
// concerns so the whole pipeline is callable from tests. Each (E_i, T) job
// runs to completion and lands in its own files; the orchestration loop is
// sequential because the trajectory loop inside a job already saturates the
// available cores, and per-job seeds are derived from the job's physical
// values, so run order can never leak into results.

namespace scattersim::cli {

struct Options {
  bool dry_run = false;
  bool halve_dt = false;
};

namespace detail {

inline double to_ps(double t_au) {
  return t_au / (constants::fs_per_ps * constants::atomic_time_per_fs);
}

inline double to_mev(double e_au) { return e_au * constants::mev_per_hartree; }

inline std::string job_path(const io::Manifest& man, const std::string& cmd,
                            const std::string& tag, const std::string& what) {
  return man.out_dir + "/" + cmd + "_" + tag + "_" + what;
}

inline void print_resolved(const io::Resolved& r, std::ostream& log) {
  const auto& s = r.spec;
  log << "model: V0 " << s.morse.V0 << " Ha, alpha " << s.morse.alpha
      << " 1/bohr, h " << s.corr.h << " bohr, l " << s.corr.l << " bohr, mass "
      << s.mass << " m_e, z0 " << s.z0 << " bohr\n";
  log << "bath: N " << s.bath.N << ", gamma " << s.bath.gamma << " au, omega_c "
      << s.bath.omega_c << " Ha\n";
  log << "packet: z_i " << r.ic.z_i << " bohr, dz " << r.ic.dz << ", dx " << r.ic.dx
      << ", p_xi " << r.ic.p_xi << "\n";
  log << "classical: dt " << r.run.dt << " au, t_final " << r.run.t_final
      << " au, theta " << r.run.theta << ", n_traj " << r.ens.n_traj << "\n";
  log << "quantum: grid " << r.grid.n_z << "x" << r.grid.n_x << ", z ["
      << r.grid.z_min << ", " << r.grid.z_max << "], x [" << r.grid.x_min << ", "
      << r.grid.x_max << "], dt " << r.q_dt << " au\n";
  log << "jobs:";
  for (const auto& j : r.classical_jobs) log << " " << j.tag;
  log << "\n";
}

}  // namespace detail

inline int cmd_classical(const io::Manifest& man, std::ostream& log,
                         const Options& opt = {}) {
  io::Resolved r = io::resolve(man);
  if (opt.halve_dt) r.run.dt *= 0.5;
  const model::Model m(r.spec);
  if (opt.dry_run) {
    detail::print_resolved(r, log);
    return 0;
  }
  io::ensure_dir(man.out_dir);
  const auto echo = io::manifest_echo(man);

  io::json summary;
  summary["schema"] = io::k_schema;
  summary["generator"] = io::version_string();
  summary["command"] = "classical";
  summary["seed"] = man.seed;
  summary["halve_dt"] = opt.halve_dt;
  summary["manifest"] = io::manifest_json(man);
  summary["jobs"] = io::json::array();

  for (const auto& job : r.classical_jobs) {
    sampling::InitialConditions ic = r.ic;
    ic.E_i = job.e_i;
    dynamics::EnsembleConfig ens = r.ens;
    ens.seed = job.seed;
    const auto result = dynamics::run_ensemble(m, ic, job.temperature, ens, r.run);

    const auto trap = observables::trapping_probability(result);
    const auto escape = observables::escape_probability(result);
    const auto e_es = observables::escaped_energy(result);
    const auto e_cond = observables::escaped_energy_conditional(result);

    // A bath-free (or fully sticking) run has no exponential tail to fit;
    // that degrades this job's fit to null instead of failing the sweep.
    io::json fit_json;
    observables::RateFit fit;
    bool fitted = true;
    try {
      fit = observables::fit_rate(trap, r.fit_lo, r.fit_hi);
      const double sigma_m =
          observables::bootstrap_rate_sigma(result, r.fit_lo, r.fit_hi);
      fit_json = {{"c", fit.c},
                  {"m_per_fs", fit.m},
                  {"fit_error_pct", fit.fit_error},
                  {"bootstrap_sigma_m", sigma_m},
                  {"window_ps", {detail::to_ps(fit.t_lo), detail::to_ps(fit.t_hi)}}};
    } catch (const FitDomainError& e) {
      fitted = false;
      fit_json = nullptr;
      log << job.tag << ": rate fit skipped (" << e.what() << ")\n";
    }

    observables::Histogram rho, ang;
    observables::EnergyLoss loss;
    bool scattered = true;
    try {
      rho = observables::density_vs_n(result, r.bin_width);
      ang = observables::angular_distribution(result, r.angular_bins);
      loss = observables::energy_loss_vs_n(result, r.bin_width);
    } catch (const EmptyResultError& e) {
      scattered = false;
      log << job.tag << ": scattering histograms skipped (" << e.what() << ")\n";
    }

    std::vector<std::vector<double>> rows;
    rows.reserve(trap.times.size());
    for (std::size_t i = 0; i < trap.times.size(); ++i)
      rows.push_back({detail::to_ps(trap.times[i]), trap.values[i], escape.values[i],
                      trap.stderrs[i]});
    io::write_csv(detail::job_path(man, "classical", job.tag, "trapping.csv"), echo,
                  "t_ps,P_trap,P_escape,stderr", rows);

    rows.clear();
    for (std::size_t i = 0; i < e_es.times.size(); ++i)
      rows.push_back({detail::to_ps(e_es.times[i]), detail::to_mev(e_es.values[i]),
                      detail::to_mev(e_es.stderrs[i]), detail::to_mev(e_cond.values[i]),
                      detail::to_mev(e_cond.stderrs[i])});
    io::write_csv(detail::job_path(man, "classical", job.tag, "energy.csv"), echo,
                  "t_ps,E_es_meV,stderr,E_es_cond_meV,stderr_cond", rows);

    if (scattered) {
      rows.clear();
      for (std::size_t i = 0; i < rho.counts.size(); ++i)
        rows.push_back({rho.center(i), rho.counts[i], rho.stderrs[i]});
      io::write_csv(detail::job_path(man, "classical", job.tag, "rho.csv"), echo,
                    "n,rho,stderr", rows);

      rows.clear();
      for (std::size_t i = 0; i < ang.counts.size(); ++i)
        rows.push_back({ang.center(i), ang.counts[i], ang.stderrs[i]});
      io::write_csv(detail::job_path(man, "classical", job.tag, "angular.csv"), echo,
                    "n,density,stderr", rows);

      rows.clear();
      for (std::size_t i = 0; i < loss.n.size(); ++i)
        rows.push_back({loss.n[i], detail::to_mev(loss.loss[i]),
                        detail::to_mev(loss.stderrs[i]), double(loss.count[i])});
      io::write_csv(detail::job_path(man, "classical", job.tag, "eloss.csv"), echo,
                    "n,E_loss_meV,stderr,count", rows);
    }

    io::json jj;
    jj["tag"] = job.tag;
    jj["E_mev"] = job.e_mev;
    jj["T_K"] = job.t_kelvin;
    jj["seed"] = job.seed;
    jj["n_traj"] = result.n_traj;
    jj["n_aborted"] = result.n_aborted;
    jj["max_drift"] = result.max_drift;
    jj["scattered"] = scattered;
    jj["fit"] = fit_json;
    jj["p_escape_end"] = escape.values.back();
    jj["e_escaped_end_mev"] = detail::to_mev(e_es.values.back());
    summary["jobs"].push_back(jj);

    log << job.tag << ":";
    if (fitted) log << " m " << fit.m << " 1/fs,";
    log << " P_escape " << escape.values.back() << ", aborted " << result.n_aborted
        << "\n";
  }

  io::write_json(man.out_dir + "/classical_summary.json", summary);
  return 0;
}

inline int cmd_quantum(const io::Manifest& man, std::ostream& log,
                       const Options& opt = {}) {
  io::Resolved r = io::resolve(man);
  if (opt.halve_dt) r.q_dt *= 0.5;
  const model::Model m(r.spec);
  if (opt.dry_run) {
    detail::print_resolved(r, log);
    return 0;
  }
  io::ensure_dir(man.out_dir);
  const auto echo = io::manifest_echo(man);

  io::json summary;
  summary["schema"] = io::k_schema;
  summary["generator"] = io::version_string();
  summary["command"] = "quantum";
  summary["seed"] = man.seed;
  summary["halve_dt"] = opt.halve_dt;
  summary["manifest"] = io::manifest_json(man);
  summary["jobs"] = io::json::array();

  for (const auto& job : r.quantum_jobs) {
    sampling::InitialConditions ic = r.ic;
    ic.E_i = job.e_i;
    auto ws = qdynamics::initial_packet(r.spec, ic, r.grid);
    qdynamics::Propagator prop(m, r.spec.mass, r.grid, r.q_dt, r.absorber);

    const long total_steps = std::lround(r.q_t_final / r.q_dt);
    const long per_record = std::max(1L, std::lround(r.q_record_interval / r.q_dt));
    const long analysis_step =
        std::clamp(std::lround(r.q_analysis_time / r.q_dt), 0L, total_steps);
    std::vector<long> snap_steps;
    for (const double t : r.snapshot_times)
      snap_steps.push_back(std::clamp(std::lround(t / r.q_dt), 0L, total_steps));

    std::vector<std::vector<double>> trap_rows, energy_rows;
    qdynamics::MomentumAnalysis analysis;
    bool analyzed = false;
    const double norm0 = ws.norm2();

    // March step by step between event points (records, snapshots, the
    // analysis time), recording at each.
    long step = 0;
    auto record = [&] {
      const double p_trap = qdynamics::quantum_trapping(ws, r.spec.z0);
      const auto e = prop.escaped_energy(ws, r.spec.z0);
      trap_rows.push_back({detail::to_ps(ws.time), p_trap, 0.0});
      energy_rows.push_back({detail::to_ps(ws.time), detail::to_mev(e.value),
                             detail::to_mev(e.ordering_gap)});
    };
    record();
    for (std::size_t k = 0; k < snap_steps.size(); ++k)
      if (snap_steps[k] == 0)
        io::write_snapshot(
            detail::job_path(man, "quantum", job.tag,
                             "snap" + io::detail::format_g(man.snapshot_times_ps[k]) +
                                 "ps.bin"),
            ws);
    if (analysis_step == 0) {
      analysis = qdynamics::momentum_analysis(ws, r.spec.corr.l, r.spec.mass, r.spec.z0,
                                              r.ic.p_xi);
      analyzed = true;
    }
    while (step < total_steps) {
      long next = std::min(total_steps, step + per_record - (step % per_record));
      if (analysis_step > step) next = std::min(next, analysis_step);
      for (const long s : snap_steps)
        if (s > step) next = std::min(next, s);
      prop.step(ws, next - step);
      step = next;
      if (step % per_record == 0 || step == total_steps) record();
      for (std::size_t k = 0; k < snap_steps.size(); ++k)
        if (snap_steps[k] == step)
          io::write_snapshot(
              detail::job_path(man, "quantum", job.tag,
                               "snap" + io::detail::format_g(man.snapshot_times_ps[k]) +
                                   "ps.bin"),
              ws);
      if (step == analysis_step) {
        analysis = qdynamics::momentum_analysis(ws, r.spec.corr.l, r.spec.mass,
                                                r.spec.z0, r.ic.p_xi);
        analyzed = true;
      }
    }
    if (!analyzed)
      analysis =
          qdynamics::momentum_analysis(ws, r.spec.corr.l, r.spec.mass, r.spec.z0,
                                       r.ic.p_xi);

    io::write_csv(detail::job_path(man, "quantum", job.tag, "trapping.csv"), echo,
                  "t_ps,P_trap,stderr", trap_rows);
    io::write_csv(detail::job_path(man, "quantum", job.tag, "energy.csv"), echo,
                  "t_ps,E_es_meV,ordering_gap_meV", energy_rows);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < analysis.n.size(); ++i)
      rows.push_back({double(analysis.n[i]), analysis.rho_n[i], 0.0});
    io::write_csv(detail::job_path(man, "quantum", job.tag, "rho.csv"), echo,
                  "n,rho,stderr", rows);

    rows.clear();
    for (std::size_t i = 0; i < analysis.n.size(); ++i)
      rows.push_back(
          {double(analysis.n[i]), detail::to_mev(job.e_i - analysis.e_n[i]), 0.0});
    io::write_csv(detail::job_path(man, "quantum", job.tag, "eloss.csv"), echo,
                  "n,E_loss_meV,stderr", rows);

    io::json jj;
    jj["tag"] = job.tag;
    jj["E_mev"] = job.e_mev;
    jj["seed"] = job.seed;
    jj["dt_au"] = r.q_dt;
    jj["grid"] = {{"n_z", r.grid.n_z},
                  {"n_x", r.grid.n_x},
                  {"z", {r.grid.z_min, r.grid.z_max}},
                  {"x", {r.grid.x_min, r.grid.x_max}}};
    jj["p_trap_end"] = trap_rows.back()[1];
    jj["e_escaped_end_mev"] = energy_rows.back()[1];
    jj["escaped_mass"] = analysis.escaped_mass;
    jj["norm_drift"] = std::abs(ws.norm2() - norm0);
    jj["theta_mean"] = analysis.theta_mean;
    jj["theta_var"] = analysis.theta_var;
    io::json channels = io::json::array();
    for (std::size_t i = 0; i < analysis.n.size(); ++i)
      channels.push_back({{"n", analysis.n[i]},
                          {"rho", analysis.rho_n[i]},
                          {"E_mev", detail::to_mev(analysis.e_n[i])}});
    jj["channels"] = channels;
    summary["jobs"].push_back(jj);

    log << job.tag << ": P_trap(end) " << trap_rows.back()[1] << ", escaped "
        << analysis.escaped_mass << ", channels " << analysis.n.size() << "\n";
  }

  io::write_json(man.out_dir + "/quantum_summary.json", summary);
  return 0;
}

inline int cmd_bath_spectrum(const io::Manifest& man, std::ostream& out) {
  const io::Resolved r = io::resolve(man);
  const auto& b = r.spec.bath;
  out << "# " << io::version_string() << "\n";
  out << "# gamma_tilde " << b.gamma_tilde << ", gamma " << b.gamma << " au, omega_c "
      << b.omega_c << " Ha, N " << b.N << "\n";
  out << "j,omega_au,omega_mev,c_au\n";
  char buf[128];
  for (int j = 0; j < b.N; ++j) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g\n", j + 1, b.omega[j],
                  detail::to_mev(b.omega[j]), b.c[j]);
    out << buf;
  }
  return 0;
}

inline observables::RateFit cmd_fit_rate(const std::string& csv_path, double lo_ps,
                                         double hi_ps, std::ostream& out) {
  const auto series = io::read_trapping_csv(csv_path);
  const double lo = units::to_atomic(lo_ps * constants::fs_per_ps, units::Dimension::time);
  const double hi = units::to_atomic(hi_ps * constants::fs_per_ps, units::Dimension::time);
  const auto fit = observables::fit_rate(series, lo, hi);
  io::json j;
  j["schema"] = io::k_schema;
  j["generator"] = io::version_string();
  j["file"] = csv_path;
  j["window_ps"] = {lo_ps, hi_ps};
  j["c"] = fit.c;
  j["m_per_fs"] = fit.m;
  j["fit_error_pct"] = fit.fit_error;
  out << j.dump(2) << "\n";
  return fit;
}

}  // namespace scattersim::cli
