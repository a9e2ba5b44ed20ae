// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace scattersim {

// Base class for every failure this library raises on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rejected parameter values: non-finite inputs, negative widths, empty
// ensembles, windows outside the simulated horizon.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed text input (run manifests, CSV files).
struct ParseError : Error {
  using Error::Error;
};

// A grid that cannot represent the requested physics (momentum range too
// small, transverse extent not commensurate with the lattice).
struct GridError : Error {
  using Error::Error;
};

// A fit requested on data that cannot support it (empty window, zero or
// negative probabilities under the log).
struct FitDomainError : Error {
  using Error::Error;
};

// Propagation produced non-finite state on too many trajectories, or a
// wavefunction lost normalization beyond tolerance.
struct NumericalError : Error {
  using Error::Error;
};

// An observable was requested over an empty population (for example a
// scattering histogram when no trajectory has escaped).
struct EmptyResultError : Error {
  using Error::Error;
};

// Filesystem failure: output path cannot be created, opened, or written.
struct IoError : Error {
  using Error::Error;
};

}  // namespace scattersim
