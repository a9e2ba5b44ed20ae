// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "scattersim/errors.hpp"
#include "scattersim/model.hpp"
#include "scattersim/phase.hpp"
#include "scattersim/sampling.hpp"

// Time propagation. The production integrator splits the Hamiltonian into
// the anharmonic system part (advanced by velocity Verlet) and the shifted
// harmonic bath (advanced exactly as a rotation, including the closed-form
// momentum transfer to pz). With the bath exact, the step size is limited by
// the wall stiffness rather than the fastest bath mode, and the zero-point
// energy stored in stiff modes does not leak into the drift.
//
//   step = B(dt/2) o VV_A(dt) o B(dt/2)
//
// where B is the bath flow at frozen (z, x):
//   g_j' = g_j cos(w dt) + (p_j / w) sin(w dt)
//   p_j' = p_j cos(w dt) - w g_j sin(w dt)
//   pz  += V''(z) sum_j w_j [ g_j sin(w dt)/w + p_j (1 - cos(w dt))/w^2 ]
// with g_j = x_j - d_j V'(z). Both sub-flows are symplectic and the
// composition is symmetric, so the scheme is second order and reversible.

namespace scattersim::dynamics {

enum class IntegratorKind {
  split_exact_bath,  // production scheme above
  velocity_verlet,   // plain VV on the full Hamiltonian, for cross-checks
};

struct RunConfig {
  double dt = 0.0;               // requested step upper bound, atomic units
  double t_final = 0.0;          // horizon
  double record_interval = 0.0;  // observable sampling period
  double analysis_time = 0.0;    // snapshot used for scattering observables
  double theta = 0.02;           // step guard: dt * omega_max <= theta
  IntegratorKind kind = IntegratorKind::split_exact_bath;
};

struct StepPlan {
  double dt = 0.0;
  long steps_per_record = 0;
  long n_records = 0;  // including the t = 0 record
  long analysis_record = 0;
  double record_interval = 0.0;
  double omega_max = 0.0;
  double theta = 0.0;
  IntegratorKind kind = IntegratorKind::split_exact_bath;

  long total_steps() const { return steps_per_record * (n_records - 1); }
  double time_of(long record) const { return record * record_interval; }
};

// The hard stability ceiling for the bath sub-step; user thetas above this
// are clamped. The default RunConfig::theta sits well below it because the
// drift target (1e-6 over the full horizon) binds before stability does.
inline constexpr double max_stable_theta = 0.1;

inline StepPlan make_plan(const RunConfig& cfg, double omega_max) {
  if (!(cfg.dt > 0.0)) throw ConfigError("requested dt must be positive");
  if (!(cfg.t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (!(cfg.record_interval > 0.0) || cfg.record_interval > cfg.t_final)
    throw ConfigError("record interval must be positive and within the horizon");
  if (!(cfg.theta > 0.0)) throw ConfigError("step guard theta must be positive");

  const double n_rec_real = cfg.t_final / cfg.record_interval;
  const long n_intervals = std::lround(n_rec_real);
  if (std::abs(n_rec_real - double(n_intervals)) > 1e-6 * n_rec_real || n_intervals < 1)
    throw ConfigError("t_final must be an integer number of record intervals");
  const double ana_real = cfg.analysis_time / cfg.record_interval;
  const long ana = std::lround(ana_real);
  if (std::abs(ana_real - double(ana)) > 1e-6 * std::max(1.0, ana_real) || ana < 0 ||
      ana > n_intervals)
    throw ConfigError("analysis time must land on a record within the horizon");

  StepPlan plan;
  plan.kind = cfg.kind;
  plan.omega_max = omega_max;
  plan.theta = std::min(cfg.theta, max_stable_theta);
  double dt_allowed = cfg.dt;
  if (omega_max > 0.0) dt_allowed = std::min(dt_allowed, plan.theta / omega_max);
  plan.steps_per_record = long(std::ceil(cfg.record_interval / dt_allowed * (1.0 - 1e-12)));
  if (plan.steps_per_record < 1) plan.steps_per_record = 1;
  plan.dt = cfg.record_interval / double(plan.steps_per_record);
  plan.record_interval = cfg.record_interval;
  plan.n_records = n_intervals + 1;
  plan.analysis_record = ana;
  return plan;
}

// Propagates any potential that can evaluate itself and its wall derivatives
// at a point; model::Model is the production policy.
template <class Pot>
class IntegratorT {
 public:
  IntegratorT(const Pot& pot, double mass, const model::BathSpec& bath, double dt,
              IntegratorKind kind = IntegratorKind::split_exact_bath)
      : pot_(pot), bath_(bath), kind_(kind), dt_(dt), mass_(mass), inv_mass_(1.0 / mass) {
    const int N = bath.N;
    const double sqrt_mass = std::sqrt(mass);
    w_.resize(N);
    d_.resize(N);
    omega2_.resize(N);
    ch_.resize(N);
    ws_.resize(N);
    so_.resize(N);
    cc_.resize(N);
    const double h = 0.5 * dt;
    for (int j = 0; j < N; ++j) {
      const double om = bath.omega[j];
      omega2_[j] = om * om;
      w_[j] = bath.c[j] / sqrt_mass;
      d_[j] = bath.c[j] / (sqrt_mass * om * om);
      const double c = std::cos(om * h);
      const double s = std::sin(om * h);
      ch_[j] = c;
      ws_[j] = om * s;
      so_[j] = s / om;
      cc_[j] = (1.0 - c) / (om * om);
    }
  }

  double dt() const { return dt_; }

  void step(PhasePoint& p) {
    if (kind_ == IntegratorKind::split_exact_bath) {
      step_split(p);
    } else {
      step_vv(p);
    }
  }

  void energies(const PhasePoint& p, double& total, double& system) const {
    model::SystemEval e;
    pot_.eval(p.z, p.x, e);
    system = 0.5 * (p.pz * p.pz + p.px * p.px) * inv_mass_ + e.V;
    double bath = 0.0;
    for (int j = 0; j < bath_.N; ++j) {
      const double g = p.bath_x[j] - d_[j] * e.dV;
      bath += 0.5 * (p.bath_p[j] * p.bath_p[j] + omega2_[j] * g * g);
    }
    total = system + bath;
  }

 private:
  void refresh(const PhasePoint& p) {
    pot_.eval(p.z, p.x, eval_);
    cache_z_ = p.z;
    cache_x_ = p.x;
  }

  void bath_half(PhasePoint& p) {
    const int N = bath_.N;
    if (N == 0) return;
    const double dV = eval_.dV;
    double kick = 0.0;
    for (int j = 0; j < N; ++j) {
      const double g = p.bath_x[j] - d_[j] * dV;
      const double pj = p.bath_p[j];
      kick += w_[j] * (g * so_[j] + pj * cc_[j]);
      p.bath_x[j] = g * ch_[j] + pj * so_[j] + d_[j] * dV;
      p.bath_p[j] = pj * ch_[j] - g * ws_[j];
    }
    p.pz += eval_.d2V * kick;
  }

  void step_split(PhasePoint& p) {
    if (p.z != cache_z_ || p.x != cache_x_) refresh(p);
    bath_half(p);
    const double half_dt = 0.5 * dt_;
    p.pz += half_dt * eval_.Fz;
    p.px += half_dt * eval_.Fx;
    p.z += dt_ * p.pz * inv_mass_;
    p.x += dt_ * p.px * inv_mass_;
    refresh(p);
    p.pz += half_dt * eval_.Fz;
    p.px += half_dt * eval_.Fx;
    bath_half(p);
  }

  // Plain velocity Verlet on all coordinates; the bath oscillators are
  // mass-weighted, so their momenta integrate with unit mass.
  void step_vv(PhasePoint& p) {
    const int N = bath_.N;
    if (p.z != cache_z_ || p.x != cache_x_ || N > 0) refresh(p);
    const double half_dt = 0.5 * dt_;
    double pull = 0.0;
    for (int j = 0; j < N; ++j) pull += w_[j] * (p.bath_x[j] - d_[j] * eval_.dV);
    p.pz += half_dt * (eval_.Fz + eval_.d2V * pull);
    p.px += half_dt * eval_.Fx;
    for (int j = 0; j < N; ++j) {
      const double g = p.bath_x[j] - d_[j] * eval_.dV;
      p.bath_p[j] += -half_dt * omega2_[j] * g;
    }
    p.z += dt_ * p.pz * inv_mass_;
    p.x += dt_ * p.px * inv_mass_;
    for (int j = 0; j < N; ++j) p.bath_x[j] += dt_ * p.bath_p[j];
    refresh(p);
    pull = 0.0;
    for (int j = 0; j < N; ++j) pull += w_[j] * (p.bath_x[j] - d_[j] * eval_.dV);
    p.pz += half_dt * (eval_.Fz + eval_.d2V * pull);
    p.px += half_dt * eval_.Fx;
    for (int j = 0; j < N; ++j) {
      const double g = p.bath_x[j] - d_[j] * eval_.dV;
      p.bath_p[j] += -half_dt * omega2_[j] * g;
    }
  }

  const Pot& pot_;
  model::BathSpec bath_;
  IntegratorKind kind_;
  double dt_;
  double mass_;
  double inv_mass_;
  model::SystemEval eval_;
  double cache_z_ = std::numeric_limits<double>::quiet_NaN();
  double cache_x_ = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> w_, d_, omega2_;
  std::vector<double> ch_, ws_, so_, cc_;  // half-step rotation tables
};

using Integrator = IntegratorT<model::Model>;

// Drives an integrator through the record grid. The callback sees every
// record (including t = 0) and returns false to abort the trajectory.
template <class Pot, class RecordFn>
void propagate(IntegratorT<Pot>& integrator, PhasePoint& p, const StepPlan& plan,
               RecordFn&& record) {
  double etot = 0.0, esys = 0.0;
  integrator.energies(p, etot, esys);
  if (!record(0L, p, etot, esys)) return;
  for (long r = 1; r < plan.n_records; ++r) {
    for (long s = 0; s < plan.steps_per_record; ++s) integrator.step(p);
    integrator.energies(p, etot, esys);
    if (!record(r, p, etot, esys)) return;
  }
}

inline bool finite_state(const PhasePoint& p, double etot) {
  return std::isfinite(p.z) && std::isfinite(p.x) && std::isfinite(p.pz) &&
         std::isfinite(p.px) && std::isfinite(etot);
}

struct TrajectoryResult {
  std::vector<double> t;  // record times, atomic units
  std::vector<double> e_total, e_sys;
  std::vector<double> z, x, pz, px;
  std::vector<std::uint8_t> escaped;
  PhasePoint final_state;
  std::vector<double> final_mode_energies;
  double max_drift = 0.0;
  bool aborted = false;
  long abort_record = -1;
};

inline TrajectoryResult run_trajectory(const model::Model& m, const PhasePoint& start,
                                       const StepPlan& plan) {
  Integrator integrator(m, m.mass(), m.spec().bath, plan.dt, plan.kind);
  PhasePoint p = start;
  TrajectoryResult out;
  out.t.reserve(plan.n_records);
  double e0 = 0.0;
  double scale = 1.0;
  propagate(integrator, p, plan, [&](long r, const PhasePoint& q, double etot, double esys) {
    if (!finite_state(q, etot)) {
      out.aborted = true;
      out.abort_record = r;
      return false;
    }
    if (r == 0) {
      e0 = etot;
      scale = std::abs(e0) > 0.0 ? std::abs(e0) : 1.0;
    }
    out.t.push_back(plan.time_of(r));
    out.e_total.push_back(etot);
    out.e_sys.push_back(esys);
    out.z.push_back(q.z);
    out.x.push_back(q.x);
    out.pz.push_back(q.pz);
    out.px.push_back(q.px);
    out.escaped.push_back(q.z >= m.z0() ? 1 : 0);
    out.max_drift = std::max(out.max_drift, std::abs(etot - e0) / scale);
    return true;
  });
  out.final_state = p;
  out.final_mode_energies.resize(m.n_modes());
  for (int j = 0; j < m.n_modes(); ++j) out.final_mode_energies[j] = m.bath_mode_energy(p, j);
  return out;
}

// Escape indicator bits, one row per trajectory, one column per record.
// Rows own disjoint words, so worker threads never share a word.
struct BitMatrix {
  long rows = 0, cols = 0, words_per_row = 0;
  std::vector<std::uint64_t> bits;

  void resize(long r, long c) {
    rows = r;
    cols = c;
    words_per_row = (c + 63) / 64;
    bits.assign(std::size_t(r) * words_per_row, 0);
  }
  void set(long r, long c) { bits[r * words_per_row + (c >> 6)] |= 1ull << (c & 63); }
  bool get(long r, long c) const {
    return (bits[r * words_per_row + (c >> 6)] >> (c & 63)) & 1ull;
  }
  const std::uint64_t* row(long r) const { return bits.data() + r * words_per_row; }
};

struct EnsembleConfig {
  long n_traj = 0;
  std::uint64_t seed = 0;
  int n_workers = 0;  // 0: one worker per hardware thread
  double max_abort_fraction = 0.001;
};

// Per-trajectory end-state snapshot used by the scattering observables.
struct FinalState {
  double z = 0.0, x = 0.0, pz = 0.0, px = 0.0;
  double e_sys = 0.0, e_bath = 0.0;
  std::uint8_t escaped = 0;
};

struct EnsembleResult {
  // Run context the observables need.
  double mass = 0.0, E_i = 0.0, p_xi = 0.0, lattice_l = 0.0, z0 = 0.0;
  double temperature = 0.0;  // k_B T, Hartree
  StepPlan plan;
  std::uint64_t seed = 0;
  long n_traj = 0;
  long n_aborted = 0;

  std::vector<double> t;  // record times, atomic units
  BitMatrix escaped;
  std::vector<long> escaped_count;                 // per record, valid trajectories
  std::vector<double> sum_e_theta, sum_e2_theta;   // escaped system energy sums
  std::vector<FinalState> at_analysis, at_end;     // indexed by trajectory
  std::vector<double> e_init;                      // system energy at the first record
  std::vector<std::uint8_t> aborted;               // indexed by trajectory
  double max_drift = 0.0;

  long n_valid() const { return n_traj - n_aborted; }
};

namespace detail {

inline FinalState snapshot(const model::Model& m, const PhasePoint& p, double esys, double z0) {
  FinalState f;
  f.z = p.z;
  f.x = p.x;
  f.pz = p.pz;
  f.px = p.px;
  f.e_sys = esys;
  f.e_bath = m.bath_energy(p);
  f.escaped = p.z >= z0 ? 1 : 0;
  return f;
}

}  // namespace detail

// Runs the ensemble with deterministic work decomposition: trajectories are
// dealt to workers in fixed blocks of 64, every per-trajectory quantity
// lands in a slot owned by its index, and block partial sums are reduced in
// block order after the join. The result is bitwise independent of the
// worker count.
inline EnsembleResult run_ensemble(const model::Model& m, const sampling::InitialConditions& ic,
                                   double temperature, const EnsembleConfig& ens,
                                   const RunConfig& run) {
  if (ens.n_traj <= 0) throw ConfigError("ensemble size must be positive");
  sampling::validate(ic);
  const double omega_max = m.n_modes() > 0 ? m.spec().bath.omega.back() : 0.0;
  const StepPlan plan = make_plan(run, omega_max);

  EnsembleResult out;
  out.mass = m.mass();
  out.E_i = ic.E_i;
  out.p_xi = ic.p_xi;
  out.lattice_l = m.spec().corr.l;
  out.z0 = m.z0();
  out.temperature = temperature;
  out.plan = plan;
  out.seed = ens.seed;
  out.n_traj = ens.n_traj;
  out.t.resize(plan.n_records);
  for (long r = 0; r < plan.n_records; ++r) out.t[r] = plan.time_of(r);
  out.escaped.resize(ens.n_traj, plan.n_records);
  out.at_analysis.assign(ens.n_traj, {});
  out.at_end.assign(ens.n_traj, {});
  out.e_init.assign(ens.n_traj, 0.0);
  out.aborted.assign(ens.n_traj, 0);

  constexpr long block_size = 64;
  const long n_blocks = (ens.n_traj + block_size - 1) / block_size;
  std::vector<double> block_e(std::size_t(n_blocks) * plan.n_records, 0.0);
  std::vector<double> block_e2(std::size_t(n_blocks) * plan.n_records, 0.0);
  std::vector<double> block_drift(n_blocks, 0.0);

  std::atomic<long> next_block{0};
  auto worker = [&]() {
    Integrator integrator(m, m.mass(), m.spec().bath, plan.dt, plan.kind);
    std::vector<double> traj_e(plan.n_records), traj_e2(plan.n_records);
    std::vector<std::uint8_t> traj_bits(plan.n_records);
    FinalState f_ana, f_end;
    for (;;) {
      const long b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      double* be = block_e.data() + std::size_t(b) * plan.n_records;
      double* be2 = block_e2.data() + std::size_t(b) * plan.n_records;
      const long k_end = std::min(ens.n_traj, (b + 1) * block_size);
      for (long k = b * block_size; k < k_end; ++k) {
        PhasePoint p = sampling::sample_point(m, ic, temperature, ens.seed, std::uint64_t(k));
        std::fill(traj_e.begin(), traj_e.end(), 0.0);
        std::fill(traj_e2.begin(), traj_e2.end(), 0.0);
        std::fill(traj_bits.begin(), traj_bits.end(), 0);
        bool aborted = false;
        double e0 = 0.0, scale = 1.0, drift = 0.0, e_sys0 = 0.0;
        propagate(integrator, p, plan,
                  [&](long r, const PhasePoint& q, double etot, double esys) {
                    if (!finite_state(q, etot)) {
                      aborted = true;
                      return false;
                    }
                    if (r == 0) {
                      e0 = etot;
                      scale = std::abs(e0) > 0.0 ? std::abs(e0) : 1.0;
                      e_sys0 = esys;
                    }
                    drift = std::max(drift, std::abs(etot - e0) / scale);
                    if (q.z >= m.z0()) {
                      traj_bits[r] = 1;
                      traj_e[r] = esys;
                      traj_e2[r] = esys * esys;
                    }
                    if (r == plan.analysis_record)
                      f_ana = detail::snapshot(m, q, esys, m.z0());
                    if (r == plan.n_records - 1)
                      f_end = detail::snapshot(m, q, esys, m.z0());
                    return true;
                  });
        if (aborted) {
          out.aborted[k] = 1;
          continue;
        }
        for (long r = 0; r < plan.n_records; ++r) {
          if (traj_bits[r]) {
            out.escaped.set(k, r);
            be[r] += traj_e[r];
            be2[r] += traj_e2[r];
          }
        }
        out.at_analysis[k] = f_ana;
        out.at_end[k] = f_end;
        out.e_init[k] = e_sys0;
        block_drift[b] = std::max(block_drift[b], drift);
      }
    }
  };

  int n_workers = ens.n_workers > 0 ? ens.n_workers
                                    : int(std::max(1u, std::thread::hardware_concurrency()));
  if (n_workers > 1) {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  } else {
    worker();
  }

  out.sum_e_theta.assign(plan.n_records, 0.0);
  out.sum_e2_theta.assign(plan.n_records, 0.0);
  for (long b = 0; b < n_blocks; ++b) {
    const double* be = block_e.data() + std::size_t(b) * plan.n_records;
    const double* be2 = block_e2.data() + std::size_t(b) * plan.n_records;
    for (long r = 0; r < plan.n_records; ++r) {
      out.sum_e_theta[r] += be[r];
      out.sum_e2_theta[r] += be2[r];
    }
    out.max_drift = std::max(out.max_drift, block_drift[b]);
  }
  out.escaped_count.assign(plan.n_records, 0);
  for (long k = 0; k < ens.n_traj; ++k) {
    if (out.aborted[k]) {
      ++out.n_aborted;
      continue;
    }
    for (long r = 0; r < plan.n_records; ++r)
      if (out.escaped.get(k, r)) ++out.escaped_count[r];
  }
  if (out.n_aborted > ens.max_abort_fraction * ens.n_traj) {
    throw NumericalError("aborted trajectory fraction " + std::to_string(out.n_aborted) + "/" +
                         std::to_string(ens.n_traj) + " exceeds the configured limit");
  }
  return out;
}

}  // namespace scattersim::dynamics
