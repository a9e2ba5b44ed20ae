// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "scattersim/constants.hpp"
#include "scattersim/errors.hpp"
#include "scattersim/phase.hpp"

// The physical model: a Morse wall in z, a sinusoidal corrugation along x
// entering through the wall derivative, and a discretized Ohmic bath of
// harmonic modes whose equilibria shift with V'(z).
//
//   V(z)    = V0 (1 - exp(-alpha z))^2 - V0
//   V(z,x)  = V(z) + h sin(2 pi x / l) V'(z)
//   H       = (pz^2 + px^2)/2M + V(z,x)
//           + 1/2 sum_j [ p_j^2 + w_j^2 ( x_j - (c_j / (sqrt(M) w_j^2)) V'(z) )^2 ]
//
// The corrugated term is the first order of V(z + h sin(2 pi x / l)) in the
// corrugation amplitude h, so h carries a length. All quantities are atomic
// units here; unit conversion happens at the manifest boundary.

namespace scattersim::model {

struct MorseParams {
  double V0 = 0.0;     // well depth
  double alpha = 0.0;  // inverse stiffness length
};

struct CorrugationParams {
  double h = 0.0;  // corrugation amplitude (length)
  double l = 1.0;  // lattice period
};

// Discrete Ohmic bath: J(w) = gamma w exp(-w / w_c) sampled at N frequencies
//   w_j = -w_c ln(1 - j/(N+1)),   c_j = w_j sqrt(2 gamma w_c / (pi (N+1))).
struct BathSpec {
  int N = 0;
  double gamma_tilde = 0.0;  // dimensionless friction strength
  double omega_c = 0.0;      // exponential cutoff
  double gamma = 0.0;        // friction kernel prefactor, [time]^3
  std::vector<double> omega;
  std::vector<double> c;
};

// Near the well bottom the reduced dynamics damps at Gamma = gamma w0^4
// (V''(0) = M w0^2 enters the friction kernel squared). gamma_tilde is the
// damping rate in units of w0, so gamma = gamma_tilde / w0^3. A nonzero
// gamma_override replaces that inference with an explicit kernel prefactor.
inline BathSpec build_bath(double gamma_tilde, double omega0, int N,
                           double cutoff_factor = 10.0, double gamma_override = 0.0) {
  if (N < 0) throw ConfigError("bath mode count must be non-negative");
  if (gamma_tilde < 0.0) throw ConfigError("gamma_tilde must be non-negative");
  if (omega0 <= 0.0) throw ConfigError("well frequency must be positive");
  if (cutoff_factor <= 0.0) throw ConfigError("bath cutoff factor must be positive");
  BathSpec b;
  b.N = N;
  b.gamma_tilde = gamma_tilde;
  b.omega_c = cutoff_factor * omega0;
  b.gamma = gamma_override > 0.0 ? gamma_override : gamma_tilde / (omega0 * omega0 * omega0);
  b.omega.resize(N);
  b.c.resize(N);
  const double pref = std::sqrt(2.0 * b.gamma * b.omega_c / (constants::pi * (N + 1)));
  for (int j = 1; j <= N; ++j) {
    const double w = -b.omega_c * std::log(1.0 - double(j) / (N + 1));
    b.omega[j - 1] = w;
    b.c[j - 1] = gamma_tilde > 0.0 || gamma_override > 0.0 ? pref * w : 0.0;
  }
  return b;
}

struct ModelSpec {
  MorseParams morse;
  CorrugationParams corr;
  BathSpec bath;
  double mass = 1.0;
  double z0 = 0.0;  // escape dividing surface
};

inline double well_frequency(const MorseParams& m, double mass) {
  return m.alpha * std::sqrt(2.0 * m.V0 / mass);
}

inline double morse_V(const MorseParams& m, double z) {
  const double e = std::exp(-m.alpha * z);
  return m.V0 * e * (e - 2.0);
}

inline double morse_dV(const MorseParams& m, double z) {
  const double e = std::exp(-m.alpha * z);
  return 2.0 * m.V0 * m.alpha * e * (1.0 - e);
}

inline double morse_d2V(const MorseParams& m, double z) {
  const double e = std::exp(-m.alpha * z);
  return 2.0 * m.V0 * m.alpha * m.alpha * e * (2.0 * e - 1.0);
}

// Everything the propagator needs at one system configuration.
struct SystemEval {
  double V = 0.0;    // corrugated potential
  double Fz = 0.0;   // -dV/dz of the corrugated potential (no bath term)
  double Fx = 0.0;   // -dV/dx
  double dV = 0.0;   // uncorrugated wall derivative V'(z): bath coupling
  double d2V = 0.0;  // V''(z)
};

struct Forces {
  double fz = 0.0;
  double fx = 0.0;
  std::vector<double> bath;
};

inline std::vector<std::string> validate(const ModelSpec& s) {
  if (!(s.morse.V0 > 0.0)) throw ConfigError("Morse depth V0 must be positive");
  if (!(s.morse.alpha > 0.0)) throw ConfigError("Morse alpha must be positive");
  if (!(s.mass > 0.0)) throw ConfigError("mass must be positive");
  if (!(s.corr.l > 0.0)) throw ConfigError("lattice period must be positive");
  if (s.corr.h < 0.0) throw ConfigError("corrugation amplitude must be non-negative");
  if (s.bath.N > 0 && int(s.bath.omega.size()) != s.bath.N)
    throw ConfigError("bath arrays do not match the declared mode count");
  std::vector<std::string> warnings;
  if (s.corr.h * s.morse.alpha > 0.2)
    warnings.push_back("corrugation amplitude is large for the first-order form (h*alpha > 0.2)");
  if (s.bath.gamma_tilde > 0.0 && s.bath.N > 0 && s.bath.N < 8)
    warnings.push_back("fewer than 8 bath modes poorly resolves the Ohmic spectrum");
  return warnings;
}

class Model {
 public:
  explicit Model(const ModelSpec& spec) : spec_(spec) {
    validate(spec);
    const int N = spec.bath.N;
    sqrt_mass_ = std::sqrt(spec.mass);
    inv_mass_ = 1.0 / spec.mass;
    two_pi_over_l_ = constants::two_pi / spec.corr.l;
    omega2_.resize(N);
    w_.resize(N);
    d_.resize(N);
    for (int j = 0; j < N; ++j) {
      const double om = spec.bath.omega[j];
      omega2_[j] = om * om;
      w_[j] = spec.bath.c[j] / sqrt_mass_;
      d_[j] = spec.bath.c[j] / (sqrt_mass_ * om * om);
    }
  }

  const ModelSpec& spec() const { return spec_; }
  double mass() const { return spec_.mass; }
  double inv_mass() const { return inv_mass_; }
  double z0() const { return spec_.z0; }
  double omega0() const { return well_frequency(spec_.morse, spec_.mass); }
  int n_modes() const { return spec_.bath.N; }
  const std::vector<double>& bath_omega() const { return spec_.bath.omega; }
  const std::vector<double>& bath_omega2() const { return omega2_; }
  // w_j = c_j / sqrt(M): converts mode displacement into a z-force scale.
  const std::vector<double>& bath_w() const { return w_; }
  // d_j = c_j / (sqrt(M) w_j^2): equilibrium shift per unit of V'(z).
  const std::vector<double>& bath_d() const { return d_; }

  // System potential and in-plane forces at (z, x): one exp, one sin/cos.
  void eval(double z, double x, SystemEval& out) const {
    const auto& m = spec_.morse;
    const double e = std::exp(-m.alpha * z);
    const double V = m.V0 * e * (e - 2.0);
    const double dV = 2.0 * m.V0 * m.alpha * e * (1.0 - e);
    const double d2V = 2.0 * m.V0 * m.alpha * m.alpha * e * (2.0 * e - 1.0);
    const double u = x / spec_.corr.l;
    const double phase = constants::two_pi * (u - std::floor(u));
    const double s = std::sin(phase);
    const double c = std::cos(phase);
    const double h = spec_.corr.h;
    out.V = V + h * s * dV;
    out.Fz = -(dV + h * s * d2V);
    out.Fx = -h * two_pi_over_l_ * c * dV;
    out.dV = dV;
    out.d2V = d2V;
  }

  double potential(double z, double x) const {
    SystemEval e;
    eval(z, x, e);
    return e.V;
  }

  // Full gradient including bath coordinates. The analytic-bath propagator
  // does not call this; it exists as the plain Hamiltonian contract (and so
  // a generic integrator and the finite-difference tests can use it).
  void forces(const PhasePoint& p, Forces& f) const {
    SystemEval e;
    eval(p.z, p.x, e);
    const int N = spec_.bath.N;
    f.bath.resize(N);
    double bath_pull = 0.0;
    for (int j = 0; j < N; ++j) {
      const double g = p.bath_x[j] - d_[j] * e.dV;
      bath_pull += w_[j] * g;
      f.bath[j] = -omega2_[j] * g;
    }
    f.fz = e.Fz + e.d2V * bath_pull;
    f.fx = e.Fx;
  }

  double system_energy(const PhasePoint& p) const {
    return 0.5 * (p.pz * p.pz + p.px * p.px) * inv_mass_ + potential(p.z, p.x);
  }

  double bath_mode_energy(const PhasePoint& p, int j) const {
    const double dV = morse_dV(spec_.morse, p.z);
    const double g = p.bath_x[j] - d_[j] * dV;
    return 0.5 * (p.bath_p[j] * p.bath_p[j] + omega2_[j] * g * g);
  }

  double bath_energy(const PhasePoint& p) const {
    const double dV = morse_dV(spec_.morse, p.z);
    double sum = 0.0;
    for (int j = 0; j < spec_.bath.N; ++j) {
      const double g = p.bath_x[j] - d_[j] * dV;
      sum += 0.5 * (p.bath_p[j] * p.bath_p[j] + omega2_[j] * g * g);
    }
    return sum;
  }

  double total_energy(const PhasePoint& p) const {
    return system_energy(p) + bath_energy(p);
  }

 private:
  ModelSpec spec_;
  double sqrt_mass_ = 1.0;
  double inv_mass_ = 1.0;
  double two_pi_over_l_ = 0.0;
  std::vector<double> omega2_;
  std::vector<double> w_;
  std::vector<double> d_;
};

}  // namespace scattersim::model
