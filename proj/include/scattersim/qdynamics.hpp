// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scattersim/errors.hpp"
#include "scattersim/model.hpp"
#include "scattersim/sampling.hpp"
#include "scattersim/units.hpp"

// Grid-based wavepacket propagation for the bath-decoupled system: the
// particle moves in the corrugated wall potential V(z, x) alone, with a
// periodic x boundary and a symmetric kinetic/potential split per step,
//
//   psi <- e^{-i V dt/2} F^-1 e^{-i p^2 dt / 2M} F e^{-i V dt/2} psi.
//
// The x extent must span an integer number of lattice periods so the p_x
// grid columns land exactly on the Bragg channels p_xi + 2 pi n / l; the
// channel analysis then reduces to summing grid columns per Brillouin zone.

namespace scattersim::qdynamics {

struct Grid2D {
  double z_min = 0.0, z_max = 0.0;
  long n_z = 0;
  double x_min = 0.0, x_max = 0.0;
  long n_x = 0;

  double dz() const { return (z_max - z_min) / double(n_z); }
  double dx() const { return (x_max - x_min) / double(n_x); }
  double cell() const { return dz() * dx(); }
  long size() const { return n_z * n_x; }
  double z(long i) const { return z_min + dz() * double(i); }
  double x(long j) const { return x_min + dx() * double(j); }
  // FFT-ordered momenta: non-negative frequencies first, then negative.
  double pz(long i) const {
    const long k = (2 * i < n_z) ? i : i - n_z;
    return constants::two_pi * double(k) / (z_max - z_min);
  }
  double px(long j) const {
    const long k = (2 * j < n_x) ? j : j - n_x;
    return constants::two_pi * double(k) / (x_max - x_min);
  }
};

namespace detail {

inline bool smooth(long n) {
  if (n < 1) return false;
  for (long p : {2L, 3L, 5L, 7L})
    while (n % p == 0) n /= p;
  return n == 1;
}

// Owning in-place 2D transform pair. FFTW_ESTIMATE keeps planning
// deterministic (measured plans depend on timings, and a different plan
// changes results in the last bits between runs).
struct FftPlan2D {
  long n_z, n_x;
  fftw_complex* data;
  fftw_plan fwd, bwd;

  FftPlan2D(long nz, long nx) : n_z(nz), n_x(nx) {
    data = fftw_alloc_complex(std::size_t(nz) * std::size_t(nx));
    if (!data) throw std::bad_alloc();
    fwd = fftw_plan_dft_2d(int(nz), int(nx), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_2d(int(nz), int(nx), data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd || !bwd) {
      fftw_free(data);
      throw NumericalError("FFT planning failed for a " + std::to_string(nz) + " x " +
                           std::to_string(nx) + " grid");
    }
  }
  FftPlan2D(const FftPlan2D&) = delete;
  FftPlan2D& operator=(const FftPlan2D&) = delete;
  ~FftPlan2D() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(data);
  }

  std::complex<double>* buf() { return reinterpret_cast<std::complex<double>*>(data); }

  double sum_norm2() const {
    long double acc = 0.0L;
    const long n = n_z * n_x;
    for (long i = 0; i < n; ++i)
      acc += data[i][0] * data[i][0] + data[i][1] * data[i][1];
    return double(acc);
  }
};

}  // namespace detail

inline Grid2D make_grid(double z_min, double z_max, long n_z, double x_min, double x_max,
                        long n_x) {
  if (!(z_max > z_min) || !(x_max > x_min))
    throw GridError("grid extents must satisfy z_max > z_min and x_max > x_min");
  if (n_z < 8) throw GridError("n_z must be at least 8");
  if (n_x < 1) throw GridError("n_x must be at least 1");
  if (!detail::smooth(n_z) || !detail::smooth(n_x))
    throw GridError("grid sizes must factor into primes <= 7 for the spectral transforms");
  return Grid2D{z_min, z_max, n_z, x_min, x_max, n_x};
}

// Production default: tall z box, x spanning 147 lattice periods. 147 periods
// is the closest commensurate cover of a 1000 bohr box (146.6 periods), which
// a Bragg-aligned momentum grid cannot use directly.
inline Grid2D default_grid(const model::ModelSpec& s) {
  const double half_x = 147.0 * s.corr.l / 2.0;
  return make_grid(-10.0, 1200.0, 3072, -half_x, half_x, 1536);
}

struct WaveState {
  Grid2D grid;
  std::vector<std::complex<double>> psi;  // row-major, z index outer
  double time = 0.0;

  double norm2() const {
    long double acc = 0.0L;
    for (const auto& a : psi) acc += std::norm(a);
    return double(acc) * grid.cell();
  }
  double norm() const { return std::sqrt(norm2()); }
};

inline std::vector<double> density(const WaveState& ws) {
  std::vector<double> d(ws.psi.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(ws.psi[i]);
  return d;
}

// Product Gaussian with spatial widths dz, dx (standard deviations) around
// (z_i, 0), carrying the incoming momentum -sqrt(2 M E_i) along z and p_xi
// along x. Unit norm by grid quadrature.
inline WaveState initial_packet(const model::ModelSpec& s, const sampling::InitialConditions& ic,
                                const Grid2D& g) {
  sampling::validate(ic);
  const double periods = (g.x_max - g.x_min) / s.corr.l;
  if (g.n_x > 1 && std::abs(periods - std::round(periods)) > 1e-6)
    throw GridError("x extent must span an integer number of lattice periods; got " +
                    std::to_string(periods));

  const double p_zi = -std::sqrt(2.0 * s.mass * ic.E_i);
  // Support guards: position tails below 1e-12 amplitude at every edge, and
  // momentum extents covering both the packet tails and the classically
  // allowed |p| = sqrt(2M(E_i + V0)) reachable inside the well (p_z always;
  // p_x only when corrugation couples the axes).
  auto edge = [](double c, double w, double lo, double hi) {
    const double d = std::min(std::abs(lo - c), std::abs(hi - c));
    return std::exp(-d * d / (4.0 * w * w));
  };
  if (edge(ic.z_i, ic.dz, g.z_min, g.z_max) > 1e-12)
    throw GridError("packet tail exceeds 1e-12 at a z boundary");
  if (g.n_x > 1 && edge(0.0, ic.dx, g.x_min, g.x_max) > 1e-12)
    throw GridError("packet tail exceeds 1e-12 at an x boundary");
  const double p_well = std::sqrt(2.0 * s.mass * (ic.E_i + s.morse.V0));
  const double pz_need = std::max(std::abs(p_zi) + 10.5 / (2.0 * ic.dz), p_well);
  if (constants::pi / g.dz() <= pz_need)
    throw GridError("p_z grid does not cover the scattering momenta (need > " +
                    std::to_string(pz_need) + ")");
  if (g.n_x > 1) {
    // With corrugation on, Bragg ladders can climb until the transverse
    // kinetic energy exhausts the well-bottom budget, so the p_x axis must
    // reach p_well too. Without it p_x is conserved up to the packet width.
    const double px_pack = std::abs(ic.p_xi) + 10.5 / (2.0 * ic.dx);
    const double px_need = s.corr.h != 0.0 ? std::max(px_pack, p_well) : px_pack;
    if (constants::pi / g.dx() <= px_need)
      throw GridError("p_x grid does not cover the scattering momenta (need > " +
                      std::to_string(px_need) + ")");
  }

  WaveState ws;
  ws.grid = g;
  ws.psi.resize(std::size_t(g.size()));
  for (long i = 0; i < g.n_z; ++i) {
    const double uz = (g.z(i) - ic.z_i) / (2.0 * ic.dz);
    const double az = std::exp(-uz * uz);
    const double phz = p_zi * (g.z(i) - ic.z_i);
    for (long j = 0; j < g.n_x; ++j) {
      const double ux = g.x(j) / (2.0 * ic.dx);
      ws.psi[std::size_t(i * g.n_x + j)] =
          std::polar(az * std::exp(-ux * ux), phz + ic.p_xi * g.x(j));
    }
  }
  const double n = ws.norm();
  for (auto& a : ws.psi) a /= n;
  return ws;
}

inline double quantum_trapping(const WaveState& ws, double z0) {
  long double out = 0.0L, all = 0.0L;
  for (long i = 0; i < ws.grid.n_z; ++i) {
    long double row = 0.0L;
    const std::size_t base = std::size_t(i * ws.grid.n_x);
    for (long j = 0; j < ws.grid.n_x; ++j) row += std::norm(ws.psi[base + std::size_t(j)]);
    all += row;
    if (ws.grid.z(i) >= z0) out += row;
  }
  if (all == 0.0L) throw NumericalError("trapping probability of a null wavefunction");
  return double(1.0L - out / all);
}

// Polynomial damping strip at the outgoing z edge: amplitude factor
// exp(-strength ((z - z_on) / length)^order dt) per step for z past
// z_max - length. length = 0 disables it.
struct Absorber {
  double length = 0.0;
  double strength = 0.0;
  int order = 3;
};

struct EscapedEnergy {
  double value = 0.0;         // Re <psi| H Theta |psi> / <psi|psi>
  double ordering_gap = 0.0;  // |Im ...|, the Hermitian-ordering discrepancy
};

template <class Pot>
class PropagatorT {
 public:
  PropagatorT(const Pot& pot, double mass, const Grid2D& grid, double dt, Absorber ab = {})
      : grid_(grid), dt_(dt), plan_(grid.n_z, grid.n_x) {
    if (dt == 0.0 || !std::isfinite(dt)) throw ConfigError("time step must be finite and nonzero");
    if (mass <= 0.0) throw ConfigError("mass must be positive");
    if (ab.length < 0.0 || ab.strength < 0.0 || ab.order < 1)
      throw ConfigError("absorber needs length >= 0, strength >= 0, order >= 1");
    if (ab.length > 0.0 && ab.strength > 0.0 && dt < 0.0)
      throw ConfigError("an absorbing cap cannot run backward in time");

    const long nz = grid.n_z, nx = grid.n_x;
    vtab_.resize(std::size_t(nz * nx));
    vhalf_.resize(vtab_.size());
    model::SystemEval ev;
    for (long i = 0; i < nz; ++i)
      for (long j = 0; j < nx; ++j) {
        pot.eval(grid.z(i), grid.x(j), ev);
        vtab_[std::size_t(i * nx + j)] = ev.V;
        vhalf_[std::size_t(i * nx + j)] = std::polar(1.0, -0.5 * ev.V * dt);
      }
    kz_.resize(std::size_t(nz));
    kx_.resize(std::size_t(nx));
    const double scale = 1.0 / double(nz * nx);
    for (long i = 0; i < nz; ++i)
      kz_[std::size_t(i)] = std::polar(scale, -grid.pz(i) * grid.pz(i) * dt / (2.0 * mass));
    for (long j = 0; j < nx; ++j)
      kx_[std::size_t(j)] = std::polar(1.0, -grid.px(j) * grid.px(j) * dt / (2.0 * mass));
    kin_.resize(vtab_.size());
    for (long i = 0; i < nz; ++i)
      for (long j = 0; j < nx; ++j)
        kin_[std::size_t(i * nx + j)] =
            (grid.pz(i) * grid.pz(i) + grid.px(j) * grid.px(j)) / (2.0 * mass);

    absorb_on_ = ab.length > 0.0 && ab.strength > 0.0;
    if (absorb_on_) {
      damp_.assign(std::size_t(nz), 1.0);
      const double z_on = grid.z_max - ab.length;
      for (long i = 0; i < nz; ++i)
        if (grid.z(i) > z_on) {
          const double u = (grid.z(i) - z_on) / ab.length;
          damp_[std::size_t(i)] = std::exp(-ab.strength * std::pow(u, ab.order) * dt);
        }
    }
  }

  double dt() const { return dt_; }
  const Grid2D& grid() const { return grid_; }
  double absorbed() const { return absorbed_; }

  void step(WaveState& ws, long n_steps = 1) {
    check_grid(ws);
    if (n_steps < 1) throw ConfigError("step count must be positive");
    auto* b = plan_.buf();
    std::copy(ws.psi.begin(), ws.psi.end(), b);
    const double cell = grid_.cell();
    const double n_entry = cell * plan_.sum_norm2();
    double absorbed_call = 0.0;
    const long nz = grid_.n_z, nx = grid_.n_x;
    auto* raw = reinterpret_cast<double*>(plan_.data);
    for (long s = 0; s < n_steps; ++s) {
      mul_table(raw, vhalf_);
      fftw_execute(plan_.fwd);
      for (long i = 0; i < nz; ++i) {
        const std::complex<double> kzi = kz_[std::size_t(i)];
        double* row = raw + 2 * i * nx;
        for (long j = 0; j < nx; ++j) {
          const std::complex<double> f = kzi * kx_[std::size_t(j)];
          const double re = row[2 * j], im = row[2 * j + 1];
          row[2 * j] = re * f.real() - im * f.imag();
          row[2 * j + 1] = re * f.imag() + im * f.real();
        }
      }
      fftw_execute(plan_.bwd);
      mul_table(raw, vhalf_);
      if (absorb_on_) {
        const double before = plan_.sum_norm2();
        for (long i = 0; i < nz; ++i) {
          const double d = damp_[std::size_t(i)];
          if (d == 1.0) continue;
          double* row = raw + 2 * i * nx;
          for (long j = 0; j < 2 * nx; ++j) row[j] *= d;
        }
        absorbed_call += cell * (before - plan_.sum_norm2());
      }
    }
    const double n_exit = cell * plan_.sum_norm2();
    const double drift = std::abs(n_exit - (n_entry - absorbed_call));
    const double tol = (1e-8 * double(n_steps) / 1000.0 + 1e-12) * n_entry;
    if (drift > tol) {
      std::ostringstream os;
      os << "norm drifted by " << drift / n_entry << " over " << n_steps
         << " steps (unitarity budget 1e-8 per 1000 steps)";
      throw NumericalError(os.str());
    }
    absorbed_ += absorbed_call;
    std::copy(b, b + grid_.size(), ws.psi.begin());
    ws.time += dt_ * double(n_steps);
  }

  // <H> over the full grid, or restricted by Theta(z >= z0) in the
  // symmetrized ordering; the imaginary remainder of the one-sided product
  // is returned as a diagnostic rather than silently dropped.
  double energy(const WaveState& ws) { return projected(ws, grid_.z_min - 1.0).value; }

  EscapedEnergy escaped_energy(const WaveState& ws, double z0) { return projected(ws, z0); }

 private:
  void check_grid(const WaveState& ws) const {
    const Grid2D& g = ws.grid;
    if (g.n_z != grid_.n_z || g.n_x != grid_.n_x || g.z_min != grid_.z_min ||
        g.z_max != grid_.z_max || g.x_min != grid_.x_min || g.x_max != grid_.x_max)
      throw ConfigError("wavefunction grid does not match the propagator grid");
    if (ws.psi.size() != std::size_t(grid_.size()))
      throw ConfigError("wavefunction storage does not match its grid");
  }

  void mul_table(double* raw, const std::vector<std::complex<double>>& t) const {
    const long n = grid_.size();
    for (long i = 0; i < n; ++i) {
      const double re = raw[2 * i], im = raw[2 * i + 1];
      const double tr = t[std::size_t(i)].real(), ti = t[std::size_t(i)].imag();
      raw[2 * i] = re * tr - im * ti;
      raw[2 * i + 1] = re * ti + im * tr;
    }
  }

  EscapedEnergy projected(const WaveState& ws, double z0) {
    check_grid(ws);
    auto* b = plan_.buf();
    const long nz = grid_.n_z, nx = grid_.n_x;
    long i0 = 0;
    while (i0 < nz && grid_.z(i0) < z0) ++i0;
    std::fill(b, b + i0 * nx, std::complex<double>(0.0, 0.0));
    std::copy(ws.psi.begin() + i0 * nx, ws.psi.end(), b + i0 * nx);
    fftw_execute(plan_.fwd);
    const double scale = 1.0 / double(nz * nx);
    for (long i = 0; i < nz * nx; ++i) b[std::size_t(i)] *= kin_[std::size_t(i)] * scale;
    fftw_execute(plan_.bwd);
    // b now holds T [Theta psi]; the potential term lives on the masked rows.
    long double acc_re = 0.0L, acc_im = 0.0L, nrm = 0.0L;
    for (long i = 0; i < nz; ++i)
      for (long j = 0; j < nx; ++j) {
        const std::size_t k = std::size_t(i * nx + j);
        const std::complex<double> p = ws.psi[k];
        nrm += std::norm(p);
        std::complex<double> h = b[k];
        if (i >= i0) h += vtab_[k] * p;
        const std::complex<double> term = std::conj(p) * h;
        acc_re += term.real();
        acc_im += term.imag();
      }
    if (nrm == 0.0L) throw NumericalError("energy of a null wavefunction");
    EscapedEnergy out;
    out.value = double(acc_re / nrm);
    out.ordering_gap = std::abs(double(acc_im / nrm));
    return out;
  }

  Grid2D grid_;
  double dt_ = 0.0;
  detail::FftPlan2D plan_;
  std::vector<double> vtab_, kin_, damp_;
  std::vector<std::complex<double>> vhalf_, kz_, kx_;
  bool absorb_on_ = false;
  double absorbed_ = 0.0;
};

using Propagator = PropagatorT<model::Model>;

struct PacketMoments {
  double z = 0.0, x = 0.0, pz = 0.0, px = 0.0;
  double var_z = 0.0, var_x = 0.0, var_pz = 0.0, var_px = 0.0;
};

inline PacketMoments packet_moments(const WaveState& ws) {
  const Grid2D& g = ws.grid;
  long double m = 0.0L, sz = 0.0L, sz2 = 0.0L, sx = 0.0L, sx2 = 0.0L;
  for (long i = 0; i < g.n_z; ++i)
    for (long j = 0; j < g.n_x; ++j) {
      const double w = std::norm(ws.psi[std::size_t(i * g.n_x + j)]);
      m += w;
      sz += w * g.z(i);
      sz2 += w * g.z(i) * g.z(i);
      sx += w * g.x(j);
      sx2 += w * g.x(j) * g.x(j);
    }
  if (m == 0.0L) throw NumericalError("moments of a null wavefunction");
  PacketMoments out;
  out.z = double(sz / m);
  out.x = double(sx / m);
  out.var_z = double(sz2 / m) - out.z * out.z;
  out.var_x = double(sx2 / m) - out.x * out.x;

  detail::FftPlan2D plan(g.n_z, g.n_x);
  std::copy(ws.psi.begin(), ws.psi.end(), plan.buf());
  fftw_execute(plan.fwd);
  long double mp = 0.0L, spz = 0.0L, spz2 = 0.0L, spx = 0.0L, spx2 = 0.0L;
  for (long i = 0; i < g.n_z; ++i)
    for (long j = 0; j < g.n_x; ++j) {
      const double w = std::norm(plan.buf()[std::size_t(i * g.n_x + j)]);
      mp += w;
      spz += w * g.pz(i);
      spz2 += w * g.pz(i) * g.pz(i);
      spx += w * g.px(j);
      spx2 += w * g.px(j) * g.px(j);
    }
  out.pz = double(spz / mp);
  out.px = double(spx / mp);
  out.var_pz = double(spz2 / mp) - out.pz * out.pz;
  out.var_px = double(spx2 / mp) - out.px * out.px;
  return out;
}

// Momentum content of the escaped portion Theta(z >= z0) psi: the 2D density
// (axes ascending), its Brillouin-zone reduction rho(n) with the per-channel
// mean energies, and the angular moments used by the width diagnostics.
struct MomentumAnalysis {
  std::vector<double> pz, px;  // ascending axes
  std::vector<double> density;  // row-major pz x px, sums to escaped_mass
  double escaped_mass = 0.0;
  std::vector<long> n;
  std::vector<double> rho_n;  // sums to 1
  std::vector<double> e_n;
  double theta_mean = 0.0, theta_var = 0.0;
};

inline MomentumAnalysis momentum_analysis(const WaveState& ws, double lattice_l, double mass,
                                          double z0, double p_xi = 0.0) {
  const Grid2D& g = ws.grid;
  if (!(lattice_l > 0.0)) throw ConfigError("lattice period must be positive");
  if (g.n_x > 1) {
    const double periods = (g.x_max - g.x_min) / lattice_l;
    if (std::abs(periods - std::round(periods)) > 1e-6)
      throw GridError("x extent must span an integer number of lattice periods; got " +
                      std::to_string(periods));
  }

  detail::FftPlan2D plan(g.n_z, g.n_x);
  auto* b = plan.buf();
  long i0 = 0;
  while (i0 < g.n_z && g.z(i0) < z0) ++i0;
  std::fill(b, b + i0 * g.n_x, std::complex<double>(0.0, 0.0));
  std::copy(ws.psi.begin() + i0 * g.n_x, ws.psi.end(), b + i0 * g.n_x);
  fftw_execute(plan.fwd);

  const double w = g.cell() / double(g.size());
  long double total = 0.0L, th1 = 0.0L, th2 = 0.0L;
  std::vector<long double> col_mass(std::size_t(g.n_x), 0.0L);
  std::vector<long double> col_e(std::size_t(g.n_x), 0.0L);
  std::vector<double> dens(std::size_t(g.size()));
  for (long i = 0; i < g.n_z; ++i) {
    const double pzv = g.pz(i);
    for (long j = 0; j < g.n_x; ++j) {
      const double p = w * std::norm(b[std::size_t(i * g.n_x + j)]);
      dens[std::size_t(i * g.n_x + j)] = p;
      total += p;
      col_mass[std::size_t(j)] += p;
      col_e[std::size_t(j)] += p * (pzv * pzv + g.px(j) * g.px(j)) / (2.0 * mass);
      const double th = std::atan2(g.px(j), std::abs(pzv));
      th1 += p * th;
      th2 += p * th * th;
    }
  }
  MomentumAnalysis out;
  out.escaped_mass = double(total / std::max(1e-300L, (long double)(ws.norm2())));
  if (double(total) < 1e-12)
    throw EmptyResultError("no wavefunction mass beyond z0 to analyze");

  out.theta_mean = double(th1 / total);
  out.theta_var = double(th2 / total) - out.theta_mean * out.theta_mean;

  std::map<long, std::pair<long double, long double>> chan;
  for (long j = 0; j < g.n_x; ++j) {
    const long nn = std::lround(lattice_l * (g.px(j) - p_xi) / constants::two_pi);
    auto& c = chan[nn];
    c.first += col_mass[std::size_t(j)];
    c.second += col_e[std::size_t(j)];
  }
  for (const auto& [nn, c] : chan) {
    if (c.first <= 0.0L) continue;
    out.n.push_back(nn);
    out.rho_n.push_back(double(c.first / total));
    out.e_n.push_back(double(c.second / c.first));
  }

  // Ascending axes with the density rows/columns permuted to match.
  std::vector<long> zi(std::size_t(g.n_z)), xi(std::size_t(g.n_x));
  for (long i = 0; i < g.n_z; ++i) zi[std::size_t(i)] = (i + (g.n_z + 1) / 2) % g.n_z;
  for (long j = 0; j < g.n_x; ++j) xi[std::size_t(j)] = (j + (g.n_x + 1) / 2) % g.n_x;
  out.pz.resize(std::size_t(g.n_z));
  out.px.resize(std::size_t(g.n_x));
  out.density.resize(dens.size());
  for (long i = 0; i < g.n_z; ++i) {
    out.pz[std::size_t(i)] = g.pz(zi[std::size_t(i)]);
    for (long j = 0; j < g.n_x; ++j)
      out.density[std::size_t(i * g.n_x + j)] =
          dens[std::size_t(zi[std::size_t(i)] * g.n_x + xi[std::size_t(j)])];
  }
  for (long j = 0; j < g.n_x; ++j) out.px[std::size_t(j)] = g.px(xi[std::size_t(j)]);
  return out;
}

inline MomentumAnalysis momentum_analysis(const WaveState& ws, const model::ModelSpec& s,
                                          double p_xi = 0.0) {
  return momentum_analysis(ws, s.corr.l, s.mass, s.z0, p_xi);
}

struct SpectrumPeak {
  double energy = 0.0;
  double weight = 0.0;
};

// Hann-windowed line spectrum of an autocorrelation record sampled every
// dt_sample: S(w) = |sum_k hann_k c_k e^{i w t_k}|, scanned on a grid
// oversampled relative to the 2 pi / T resolution, with quadratic
// interpolation of each local maximum above rel_threshold of the strongest.
inline std::vector<SpectrumPeak> autocorrelation_spectrum(
    const std::vector<std::complex<double>>& c, double dt_sample, double e_min, double e_max,
    long oversample = 8, double rel_threshold = 1e-3) {
  if (c.size() < 16) throw ConfigError("autocorrelation record too short for a spectrum");
  if (!(dt_sample > 0.0)) throw ConfigError("sample spacing must be positive");
  if (!(e_max > e_min)) throw ConfigError("energy window must be increasing");
  if (oversample < 2) throw ConfigError("oversample factor must be at least 2");

  const std::size_t K = c.size();
  std::vector<std::complex<double>> wc(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double hann =
        0.5 - 0.5 * std::cos(constants::two_pi * double(k) / double(K - 1));
    wc[k] = hann * c[k];
  }
  const double T = dt_sample * double(K - 1);
  const double dw = constants::two_pi / (T * double(oversample));
  const long nw = long((e_max - e_min) / dw) + 1;
  std::vector<double> S(static_cast<std::size_t>(nw));
  for (long m = 0; m < nw; ++m) {
    const double wv = e_min + dw * double(m);
    // Direct sum with a rotating phase; the recurrence roundoff over a
    // few-thousand-sample record sits far below the Hann sidelobes.
    const double rr = std::cos(wv * dt_sample), ri = std::sin(wv * dt_sample);
    double pr = 1.0, pim = 0.0, ar = 0.0, ai = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double cr = wc[k].real(), ci = wc[k].imag();
      ar += cr * pr - ci * pim;
      ai += cr * pim + ci * pr;
      const double npr = pr * rr - pim * ri;
      pim = pr * ri + pim * rr;
      pr = npr;
    }
    S[std::size_t(m)] = std::hypot(ar, ai);
  }
  double s_max = 0.0;
  for (double v : S) s_max = std::max(s_max, v);
  std::vector<SpectrumPeak> peaks;
  for (long m = 1; m + 1 < nw; ++m) {
    const double a = S[std::size_t(m - 1)], bb = S[std::size_t(m)], cc = S[std::size_t(m + 1)];
    if (bb <= a || bb <= cc || bb < rel_threshold * s_max) continue;
    const double denom = a - 2.0 * bb + cc;
    const double shift = denom == 0.0 ? 0.0 : 0.5 * (a - cc) / denom;
    peaks.push_back({e_min + dw * (double(m) + shift), bb});
  }
  return peaks;
}

}  // namespace scattersim::qdynamics
