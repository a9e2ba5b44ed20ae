// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>

#include "scattersim/constants.hpp"
#include "scattersim/errors.hpp"

// Unit handling. Internally everything is Hartree atomic units
// (hbar = m_e = e = 1). User-facing quantities use one fixed unit per
// dimension: meV, angstrom, amu, fs, 1/fs, kelvin, amu*angstrom/fs.
// Temperature converts through k_B, so its atomic value is an energy in
// Hartree and 1/T is directly a Boltzmann factor argument.

namespace scattersim::units {

enum class Dimension {
  energy,         // meV
  length,         // angstrom
  mass,           // amu
  time,           // fs
  frequency,      // 1/fs
  temperature,    // kelvin
  momentum,       // amu*angstrom/fs
  dimensionless,  // 1
};

struct Quantity {
  double value = 0.0;
  Dimension dim = Dimension::dimensionless;
};

// Atomic units per one user unit of the given dimension.
inline constexpr double atomic_per_user(Dimension d) {
  using namespace scattersim::constants;
  switch (d) {
    case Dimension::energy:
      return 1.0 / mev_per_hartree;
    case Dimension::length:
      return bohr_per_angstrom;
    case Dimension::mass:
      return electron_mass_per_amu;
    case Dimension::time:
      return atomic_time_per_fs;
    case Dimension::frequency:
      return 1.0 / atomic_time_per_fs;
    case Dimension::temperature:
      return boltzmann_au_per_kelvin;
    case Dimension::momentum:
      return electron_mass_per_amu * bohr_per_angstrom / atomic_time_per_fs;
    case Dimension::dimensionless:
      return 1.0;
  }
  return 1.0;
}

inline const char* unit_name(Dimension d) {
  switch (d) {
    case Dimension::energy: return "meV";
    case Dimension::length: return "angstrom";
    case Dimension::mass: return "amu";
    case Dimension::time: return "fs";
    case Dimension::frequency: return "1/fs";
    case Dimension::temperature: return "K";
    case Dimension::momentum: return "amu*angstrom/fs";
    case Dimension::dimensionless: return "1";
  }
  return "?";
}

inline double to_atomic(Quantity q) {
  if (!std::isfinite(q.value)) {
    throw ConfigError(std::string("non-finite value for dimension ") + unit_name(q.dim));
  }
  return q.value * atomic_per_user(q.dim);
}

inline Quantity from_atomic(double value, Dimension d) {
  if (!std::isfinite(value)) {
    throw ConfigError(std::string("non-finite atomic value for dimension ") + unit_name(d));
  }
  return {value / atomic_per_user(d), d};
}

inline double to_atomic(double value, Dimension d) { return to_atomic({value, d}); }

}  // namespace scattersim::units
