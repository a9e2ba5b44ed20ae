// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace scattersim {

// Full classical state: the scattering atom (z perpendicular to the surface,
// x along it) plus the mass-weighted bath oscillators. Atomic units.
struct PhasePoint {
  double z = 0.0;
  double x = 0.0;
  double pz = 0.0;
  double px = 0.0;
  std::vector<double> bath_x;
  std::vector<double> bath_p;
};

}  // namespace scattersim
