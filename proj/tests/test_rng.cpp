// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "scattersim/rng.hpp"

using scattersim::rng::philox4x64;
using scattersim::rng::Stream;
using scattersim::rng::StreamFamily;
using scattersim::rng::U64x4;

TEST_CASE("identical keys and counters give identical blocks") {
  const U64x4 a = philox4x64(U64x4{{12, 34, 56, 78}}, 9001, 42);
  const U64x4 b = philox4x64(U64x4{{12, 34, 56, 78}}, 9001, 42);
  for (int i = 0; i < 4; ++i) CHECK(a.v[i] == b.v[i]);
}

TEST_CASE("single-bit changes decorrelate the whole block") {
  const U64x4 base = philox4x64(U64x4{{12, 34, 56, 78}}, 9001, 42);
  const U64x4 ctr_flip = philox4x64(U64x4{{13, 34, 56, 78}}, 9001, 42);
  const U64x4 key_flip = philox4x64(U64x4{{12, 34, 56, 78}}, 9000, 42);
  int differing = 0;
  for (int i = 0; i < 4; ++i) {
    if (base.v[i] != ctr_flip.v[i]) ++differing;
    if (base.v[i] != key_flip.v[i]) ++differing;
  }
  CHECK(differing == 8);
  // Avalanche: around half of the 256 output bits should flip.
  int flipped_bits = 0;
  for (int i = 0; i < 4; ++i) flipped_bits += std::popcount(base.v[i] ^ ctr_flip.v[i]);
  CHECK(flipped_bits > 128 - 45);
  CHECK(flipped_bits < 128 + 45);
}

TEST_CASE("streams are reproducible and order-independent") {
  Stream s1(777, StreamFamily::trajectory, 5);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 100; ++i) first.push_back(s1.next_u64());

  Stream s2(777, StreamFamily::trajectory, 5);
  for (int i = 0; i < 100; ++i) CHECK(first[i] == s2.next_u64());

  // A stream built after other streams were consumed sees the same values.
  Stream noise(777, StreamFamily::trajectory, 6);
  for (int i = 0; i < 17; ++i) (void)noise.next_u64();
  Stream s3(777, StreamFamily::trajectory, 5);
  for (int i = 0; i < 100; ++i) CHECK(first[i] == s3.next_u64());
}

TEST_CASE("distinct streams do not collide") {
  std::vector<std::uint64_t> draws;
  draws.reserve(1000 * 100);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    Stream s(123456789, StreamFamily::trajectory, k);
    for (int i = 0; i < 100; ++i) draws.push_back(s.next_u64());
  }
  std::sort(draws.begin(), draws.end());
  CHECK(std::adjacent_find(draws.begin(), draws.end()) == draws.end());
}

TEST_CASE("family tags separate stream index spaces") {
  Stream t(11, StreamFamily::trajectory, 0);
  Stream b(11, StreamFamily::bootstrap, 0);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (t.next_u64() == b.next_u64());
  CHECK(same == 0);
}

TEST_CASE("uniform lies in (0, 1] and never underflows the log") {
  Stream s(42, StreamFamily::trajectory, 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 2000000; ++i) {
    const double u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
  }
  CHECK(lo < 1e-5);
  CHECK(hi > 1.0 - 1e-5);
}

TEST_CASE("uniform moments match the flat distribution") {
  Stream s(2024, StreamFamily::trajectory, 3);
  const int n = 4000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // Standard error of the mean is 1/sqrt(12 n) ~ 1.4e-4; allow 5 sigma.
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.5, 7.5e-4));
  CHECK_THAT(var, Catch::Matchers::WithinRel(1.0 / 12.0, 5e-3));
}

TEST_CASE("gaussian moments match the standard normal") {
  Stream s(7, StreamFamily::trajectory, 1);
  const int n = 4000000;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = s.gaussian();
    m1 += g;
    m2 += g * g;
    m3 += g * g * g;
    m4 += g * g * g * g;
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  CHECK_THAT(m1, Catch::Matchers::WithinAbs(0.0, 5.0 / std::sqrt(double(n))));
  CHECK_THAT(m2, Catch::Matchers::WithinRel(1.0, 5e-3));
  CHECK_THAT(m3, Catch::Matchers::WithinAbs(0.0, 15.0 / std::sqrt(double(n))));
  CHECK_THAT(m4, Catch::Matchers::WithinRel(3.0, 2e-2));
}

TEST_CASE("below(n) is uniform over residues") {
  Stream s(5150, StreamFamily::bootstrap, 9);
  const int n = 1000000;
  std::vector<int> counts(10, 0);
  for (int i = 0; i < n; ++i) counts[s.below(10)]++;
  for (int c : counts) CHECK_THAT(double(c), Catch::Matchers::WithinAbs(n / 10.0, 5 * std::sqrt(n / 10.0)));
}

TEST_CASE("job seeds separate on energy and temperature") {
  using scattersim::rng::derive_job_seed;
  const std::uint64_t a = derive_job_seed(1, 2.0, 0.0);
  CHECK(a == derive_job_seed(1, 2.0, 0.0));
  CHECK(a != derive_job_seed(1, 5.0, 0.0));
  CHECK(a != derive_job_seed(1, 2.0, 10.0));
  CHECK(a != derive_job_seed(2, 2.0, 0.0));
}
