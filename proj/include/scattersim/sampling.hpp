// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "scattersim/errors.hpp"
#include "scattersim/model.hpp"
#include "scattersim/phase.hpp"
#include "scattersim/rng.hpp"

// Initial conditions: Wigner transform of a Gaussian wavepacket aimed at the
// surface, times a thermal (Wigner) distribution of the bath oscillators.
// The packet is minimal-uncertainty: position spread dz pairs with momentum
// spread hbar/(2 dz), and the Wigner function is the product of independent
// Gaussians, so sampling is a fixed sequence of normal draws.

namespace scattersim::sampling {

struct InitialConditions {
  double E_i = 0.0;   // incidence energy, atomic units
  double z_i = 0.0;   // mean starting height
  double p_xi = 0.0;  // mean transverse momentum
  double dz = 1.0;    // packet width along z
  double dx = 1.0;    // packet width along x
};

inline void validate(const InitialConditions& ic) {
  if (!(ic.E_i > 0.0)) throw ConfigError("incidence energy must be positive");
  if (!(ic.dz > 0.0)) throw ConfigError("packet width dz must be positive");
  if (!(ic.dx > 0.0)) throw ConfigError("packet width dx must be positive");
  if (!(ic.z_i > 0.0)) throw ConfigError("starting height must be positive");
}

// The packet must start in the asymptotic region, otherwise E_i does not
// mean the incidence energy.
inline std::vector<std::string> check_start(const model::Model& m, const InitialConditions& ic) {
  std::vector<std::string> warnings;
  const double v = std::abs(model::morse_V(m.spec().morse, ic.z_i));
  if (v > 1e-4 * ic.E_i)
    warnings.push_back("potential at the starting height is not negligible against E_i");
  if (ic.z_i < m.z0())
    warnings.push_back("packet starts inside the escape surface z0");
  return warnings;
}

// Thermal Wigner width parameter: nu_j = tanh(hbar w_j / 2 k_B T), with the
// T = 0 limit handled exactly. temperature is k_B T in Hartree.
inline double thermal_nu(double omega, double temperature) {
  return temperature > 0.0 ? std::tanh(0.5 * omega / temperature) : 1.0;
}

// Draw one phase-space point. The draw order is part of the reproducibility
// contract: z, x, pz, px, then (x_j, p_j) for each mode in ascending j.
// temperature is k_B T in Hartree.
inline PhasePoint sample_point(const model::BathSpec& bath, const InitialConditions& ic,
                               double mass, double temperature, std::uint64_t seed,
                               std::uint64_t trajectory_index) {
  rng::Stream s(seed, rng::StreamFamily::trajectory, trajectory_index);
  PhasePoint p;
  p.z = ic.z_i + ic.dz * s.gaussian();
  p.x = ic.dx * s.gaussian();
  p.pz = -std::sqrt(2.0 * mass * ic.E_i) + s.gaussian() / (2.0 * ic.dz);
  p.px = ic.p_xi + s.gaussian() / (2.0 * ic.dx);
  p.bath_x.resize(bath.N);
  p.bath_p.resize(bath.N);
  for (int j = 0; j < bath.N; ++j) {
    const double om = bath.omega[j];
    const double nu = thermal_nu(om, temperature);
    p.bath_x[j] = std::sqrt(1.0 / (2.0 * om * nu)) * s.gaussian();
    p.bath_p[j] = std::sqrt(om / (2.0 * nu)) * s.gaussian();
  }
  return p;
}

inline PhasePoint sample_point(const model::Model& m, const InitialConditions& ic,
                               double temperature, std::uint64_t seed,
                               std::uint64_t trajectory_index) {
  return sample_point(m.spec().bath, ic, m.mass(), temperature, seed, trajectory_index);
}

}  // namespace scattersim::sampling
