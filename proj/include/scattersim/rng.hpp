// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

#include "scattersim/constants.hpp"

// Counter-based random numbers (Philox 4x64, 10 rounds). Every draw is a
// pure function of (seed, stream id, draw counter), so any trajectory or
// bootstrap replica can be regenerated in isolation and results do not
// depend on thread scheduling.

namespace scattersim::rng {

struct U64x4 {
  std::uint64_t v[4];
};

namespace detail {

inline constexpr std::uint64_t philox_m0 = 0xD2E7470EE14C6C93ull;
inline constexpr std::uint64_t philox_m1 = 0xCA5A826395121157ull;
inline constexpr std::uint64_t weyl0 = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t weyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

inline U64x4 philox4x64(U64x4 ctr, std::uint64_t key0, std::uint64_t key1) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    detail::mulhilo(detail::philox_m0, ctr.v[0], hi0, lo0);
    detail::mulhilo(detail::philox_m1, ctr.v[2], hi1, lo1);
    ctr = U64x4{{hi1 ^ ctr.v[1] ^ key0, lo1, hi0 ^ ctr.v[3] ^ key1, lo0}};
    key0 += detail::weyl0;
    key1 += detail::weyl1;
  }
  return ctr;
}

// Reserved stream families. The family tag sits in the top byte of the
// stream id; the low 56 bits index within the family.
enum class StreamFamily : std::uint64_t {
  trajectory = 1,  // one stream per classical trajectory
  bootstrap = 2,   // one stream per bootstrap replica
  job = 3,         // per-job seed derivation
};

inline std::uint64_t stream_id(StreamFamily family, std::uint64_t index) {
  return (static_cast<std::uint64_t>(family) << 56) | (index & 0x00FFFFFFFFFFFFFFull);
}

// One independent stream of uniforms / gaussians.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t id) : seed_(seed), id_(id) {}

  Stream(std::uint64_t seed, StreamFamily family, std::uint64_t index)
      : Stream(seed, stream_id(family, index)) {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      buf_ = philox4x64(U64x4{{counter_++, 0, 0, 0}}, seed_, id_);
      pos_ = 0;
    }
    return buf_.v[pos_++];
  }

  // Uniform on (0, 1]: never zero, so log(uniform()) is always finite.
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; generates pairs, caches the second.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = constants::two_pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n). Bias is O(n / 2^64), negligible for the
  // ensemble sizes this code handles.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t counter_ = 0;
  U64x4 buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Deterministic per-job seed for a (seed, energy, temperature) work item.
// Hashing through Philox keeps distinct jobs on distinct trajectory streams
// even when parameter values collide in their low bits.
inline std::uint64_t derive_job_seed(std::uint64_t seed, double energy_mev, double temperature_kelvin) {
  const U64x4 out = philox4x64(
      U64x4{{std::bit_cast<std::uint64_t>(energy_mev),
             std::bit_cast<std::uint64_t>(temperature_kelvin), 0, 0}},
      seed, stream_id(StreamFamily::job, 0));
  return out.v[0];
}

}  // namespace scattersim::rng
