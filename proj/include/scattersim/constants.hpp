// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Physical constants (CODATA 2018). This header is the only place numeric
// conversion factors may appear; everything else converts through units.hpp.

namespace scattersim::constants {

inline constexpr double bohr_per_angstrom = 1.8897261246257702;
inline constexpr double mev_per_hartree = 27211.386245988;
inline constexpr double electron_mass_per_amu = 1822.888486209;
inline constexpr double atomic_time_per_fs = 41.341373335182114;
inline constexpr double boltzmann_au_per_kelvin = 3.1668115634556e-6;
inline constexpr double fs_per_ps = 1000.0;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double two_pi = 2.0 * pi;

}  // namespace scattersim::constants
