// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstring>
#include <vector>

#include "scattersim/model.hpp"
#include "scattersim/qdynamics.hpp"
#include "scattersim/units.hpp"

using namespace scattersim;
using namespace scattersim::qdynamics;
using scattersim::units::Dimension;
using scattersim::units::to_atomic;

namespace {

struct FreePot {
  void eval(double, double, model::SystemEval& out) const { out = {}; }
};

constexpr double he_mass = 7296.297100677116;

model::ModelSpec surface_spec() {
  model::ModelSpec s;
  s.morse.V0 = to_atomic(34.85, Dimension::energy);
  s.morse.alpha = 0.5 / to_atomic(1.0, Dimension::length);
  s.corr.h = 0.1;
  s.corr.l = to_atomic(3.61, Dimension::length);
  s.mass = he_mass;
  s.z0 = 50.0;
  s.bath = model::build_bath(0.0, model::well_frequency(s.morse, s.mass), 0);
  return s;
}

model::ModelSpec free_spec(double lattice_l) {
  model::ModelSpec s;
  s.corr.l = lattice_l;
  s.mass = he_mass;
  s.z0 = -50.0;
  return s;
}

sampling::InitialConditions beam(double E_mev, double z_i, double dz, double dx) {
  sampling::InitialConditions ic;
  ic.E_i = to_atomic(E_mev, Dimension::energy);
  ic.z_i = z_i;
  ic.dz = dz;
  ic.dx = dx;
  return ic;
}

double max_amp_diff(const std::vector<std::complex<double>>& a,
                    const std::vector<std::complex<double>>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("grid construction enforces the transform invariants") {
  CHECK_THROWS_AS(make_grid(0.0, 0.0, 64, -1.0, 1.0, 8), GridError);
  CHECK_THROWS_AS(make_grid(-10.0, 100.0, 4, -1.0, 1.0, 8), GridError);
  CHECK_THROWS_AS(make_grid(-10.0, 100.0, 416, -1.0, 1.0, 8), GridError);  // 416 = 2^5 * 13
  CHECK_THROWS_AS(make_grid(-10.0, 100.0, 64, -1.0, 1.0, 22), GridError);  // 22 = 2 * 11
  const auto g = make_grid(-10.0, 100.0, 64, -1.0, 1.0, 1);
  CHECK(g.n_x == 1);
  CHECK_THAT(g.dz(), Catch::Matchers::WithinRel(110.0 / 64.0, 1e-15));

  const auto d = default_grid(surface_spec());
  const double periods = (d.x_max - d.x_min) / surface_spec().corr.l;
  CHECK_THAT(periods, Catch::Matchers::WithinAbs(147.0, 1e-9));
  CHECK(d.n_z == 3072);
  // FFT frequency layout: index n/2 is the most negative momentum.
  CHECK(g.pz(0) == 0.0);
  CHECK(g.pz(32) < 0.0);
  CHECK_THAT(g.pz(63), Catch::Matchers::WithinRel(-constants::two_pi / 110.0, 1e-12));
}

TEST_CASE("initial packet has the advertised moments") {
  const auto s = free_spec(15.0);
  const auto g = make_grid(-60.0, 60.0, 256, -30.0, 30.0, 64);
  const auto ic = beam(5.0, 30.0, 2.8, 2.5);
  const auto ws = initial_packet(s, ic, g);

  CHECK_THAT(ws.norm2(), Catch::Matchers::WithinAbs(1.0, 1e-12));
  const auto m = packet_moments(ws);
  const double p_zi = -std::sqrt(2.0 * s.mass * ic.E_i);
  CHECK_THAT(m.z, Catch::Matchers::WithinAbs(ic.z_i, 1e-10));
  CHECK_THAT(m.x, Catch::Matchers::WithinAbs(0.0, 1e-10));
  CHECK_THAT(m.pz, Catch::Matchers::WithinAbs(p_zi, 1e-10));
  CHECK_THAT(m.px, Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(m.var_z, Catch::Matchers::WithinRel(ic.dz * ic.dz, 1e-8));
  CHECK_THAT(m.var_x, Catch::Matchers::WithinRel(ic.dx * ic.dx, 1e-8));
  CHECK_THAT(m.var_pz, Catch::Matchers::WithinRel(1.0 / (4.0 * ic.dz * ic.dz), 1e-8));

  SECTION("support guards reject a cramped box") {
    auto close = ic;
    close.z_i = 55.0;  // tail pressed against z_max
    CHECK_THROWS_AS(initial_packet(s, close, g), GridError);
    auto wide = ic;
    wide.dx = 12.0;
    CHECK_THROWS_AS(initial_packet(s, wide, g), GridError);
    auto hot = ic;
    hot.E_i = to_atomic(4000.0, Dimension::energy);  // p beyond the momentum box
    CHECK_THROWS_AS(initial_packet(s, hot, g), GridError);
  }
  SECTION("incommensurate x extent is rejected") {
    CHECK_THROWS_AS(initial_packet(free_spec(17.0), ic, g), GridError);
  }
}

TEST_CASE("free packet follows the analytic drift and spread") {
  const auto s = free_spec(15.0);
  const auto g = make_grid(-60.0, 60.0, 256, -30.0, 30.0, 64);
  const auto ic = beam(5.0, 30.0, 2.8, 2.5);
  auto ws = initial_packet(s, ic, g);

  const FreePot pot;
  const double dt = 500.0;
  const long n = 178;
  PropagatorT<FreePot> prop(pot, s.mass, g, dt);
  prop.step(ws, n);

  const double t = dt * double(n);
  const double p_zi = -std::sqrt(2.0 * s.mass * ic.E_i);
  const auto m = packet_moments(ws);
  const double z_exp = ic.z_i + p_zi / s.mass * t;
  const double var_exp = ic.dz * ic.dz + std::pow(t / (2.0 * s.mass * ic.dz), 2);
  CHECK_THAT(m.z, Catch::Matchers::WithinRel(z_exp, 1e-6));
  CHECK_THAT(m.var_z, Catch::Matchers::WithinRel(var_exp, 1e-6));
  CHECK_THAT(m.var_x, Catch::Matchers::WithinRel(ic.dx * ic.dx + std::pow(t / (2.0 * s.mass * ic.dx), 2), 1e-6));
  CHECK_THAT(ws.time, Catch::Matchers::WithinRel(t, 1e-15));
}

TEST_CASE("propagation is unitary and time reversible") {
  const auto s = surface_spec();
  const model::Model mod(s);
  const auto g = make_grid(-10.0, 110.0, 192, -2.0 * s.corr.l, 2.0 * s.corr.l, 48);
  const auto ic = beam(5.0, 30.0, 2.5, 1.2);
  auto ws = initial_packet(s, ic, g);
  const auto psi0 = ws.psi;

  Propagator fwd(mod, s.mass, g, 20.0);
  Propagator bwd(mod, s.mass, g, -20.0);
  fwd.step(ws, 400);
  CHECK_THAT(ws.norm2(), Catch::Matchers::WithinAbs(1.0, 1e-10));
  bwd.step(ws, 400);
  CHECK(max_amp_diff(ws.psi, psi0) < 1e-8);
  CHECK_THAT(ws.time, Catch::Matchers::WithinAbs(0.0, 1e-9));
}

TEST_CASE("energy expectation is constant through the collision") {
  auto s = surface_spec();
  const model::Model mod(s);
  const auto g = make_grid(-10.0, 110.0, 192, -1.0, 1.0, 1);
  auto ic = beam(5.0, 12.0, 1.8, 1.0);
  auto ws = initial_packet(s, ic, g);

  // The deviation is the symmetric-split commutator error, shrinking as
  // dt^2; dt = 0.35 puts the collision against the repulsive wall within
  // the 1e-8 budget.
  Propagator prop(mod, s.mass, g, 0.35);
  const double e0 = prop.energy(ws);
  double dev = 0.0;
  for (int chunk = 0; chunk < 12; ++chunk) {
    prop.step(ws, 14300);
    dev = std::max(dev, std::abs(prop.energy(ws) - e0));
  }
  INFO("relative energy deviation " << dev / std::abs(e0));
  CHECK(dev / std::abs(e0) < 1e-8);
  CHECK_THAT(ws.norm2(), Catch::Matchers::WithinAbs(1.0, 1.8e-8));
}

TEST_CASE("trapping projector counts mass below the dividing surface") {
  const auto s = free_spec(15.0);
  const auto g = make_grid(-60.0, 60.0, 256, -30.0, 30.0, 64);
  const auto ws = initial_packet(s, beam(5.0, 30.0, 2.8, 2.5), g);
  CHECK(quantum_trapping(ws, 0.0) < 1e-12);   // packet fully beyond z0
  CHECK(quantum_trapping(ws, 58.0) > 1.0 - 1e-12);  // z0 above the packet
  // Center the packet between grid lines so the theta sum splits the mass
  // symmetrically about z0 = z_i.
  const double z_mid = 30.0 + 0.5 * g.dz();
  const auto mid = initial_packet(s, beam(5.0, z_mid, 2.8, 2.5), g);
  CHECK_THAT(quantum_trapping(mid, z_mid), Catch::Matchers::WithinAbs(0.5, 1e-9));
}

TEST_CASE("projected energy matches the Gaussian oracle") {
  const auto s = free_spec(15.0);
  const auto g = make_grid(-60.0, 60.0, 256, -30.0, 30.0, 64);
  const auto ic = beam(5.0, 30.0, 2.8, 2.5);
  auto ws = initial_packet(s, ic, g);

  const FreePot pot;
  PropagatorT<FreePot> prop(pot, s.mass, g, 100.0);
  const double oracle = ic.E_i + 1.0 / (8.0 * s.mass * ic.dz * ic.dz) +
                        1.0 / (8.0 * s.mass * ic.dx * ic.dx);
  const auto es = prop.escaped_energy(ws, -50.0);
  CHECK_THAT(es.value, Catch::Matchers::WithinRel(oracle, 1e-6));
  CHECK(es.ordering_gap < 1e-12 * oracle);
  CHECK(prop.energy(ws) == es.value);

  const auto trapped = prop.escaped_energy(ws, 58.0);
  CHECK(std::abs(trapped.value) < 1e-15);
}

TEST_CASE("Morse slice autocorrelation finds the analytic bound levels") {
  auto s = surface_spec();
  s.corr.h = 0.0;
  const model::Model mod(s);
  const auto g = make_grid(-10.0, 130.0, 512, -1.0, 1.0, 1);
  auto ic = beam(1e-6, 6.0, 1.5, 1.0);
  auto ws = initial_packet(s, ic, g);
  const auto psi0 = ws.psi;

  const double dt = 5.0;
  const long stride = 10, n_samples = 40000;
  Propagator prop(mod, s.mass, g, dt);
  std::vector<std::complex<double>> corr(n_samples + 1);
  auto overlap = [&] {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < psi0.size(); ++i) acc += std::conj(psi0[i]) * ws.psi[i];
    return acc * g.cell();
  };
  corr[0] = overlap();
  for (long k = 1; k <= n_samples; ++k) {
    prop.step(ws, stride);
    corr[std::size_t(k)] = overlap();
  }

  const double t_total = dt * double(stride * n_samples);
  const double resolution = constants::two_pi / t_total;
  // The 4% floor sits above the Hann sidelobes (2.7% of a mainlobe), so
  // every reported peak is a real line.
  const auto peaks =
      autocorrelation_spectrum(corr, dt * double(stride), -1.3e-3, -1e-6, 8, 0.04);

  const double w0 = model::well_frequency(s.morse, s.mass);
  const double lambda = std::sqrt(2.0 * s.mass * s.morse.V0) / s.morse.alpha;
  std::vector<double> levels;
  for (int v = 0; v + 0.5 < lambda; ++v) {
    const double q = w0 * (v + 0.5);
    levels.push_back(-s.morse.V0 + q - q * q / (4.0 * s.morse.V0));
  }
  REQUIRE(levels.size() == 16);

  INFO("found " << peaks.size() << " peaks, resolution " << resolution);
  CHECK(peaks.size() >= 8);
  for (const auto& p : peaks) {
    double best = 1e9;
    for (double lv : levels) best = std::min(best, std::abs(p.energy - lv));
    INFO("peak at " << p.energy << " off by " << best);
    CHECK(best < resolution);
  }
}

TEST_CASE("propagator rejects mismatched input") {
  const auto s = free_spec(15.0);
  const auto g = make_grid(-60.0, 60.0, 256, -30.0, 30.0, 64);
  const auto g2 = make_grid(-60.0, 60.0, 128, -30.0, 30.0, 64);
  auto ws = initial_packet(s, beam(5.0, 30.0, 2.8, 2.5), g);
  const FreePot pot;
  PropagatorT<FreePot> prop(pot, s.mass, g2, 10.0);
  CHECK_THROWS_AS(prop.step(ws, 1), ConfigError);
  CHECK_THROWS_AS((PropagatorT<FreePot>(pot, s.mass, g, 0.0)), ConfigError);
  CHECK_THROWS_AS((PropagatorT<FreePot>(pot, s.mass, g, -5.0, Absorber{40.0, 1e-4, 3})),
                  ConfigError);
  PropagatorT<FreePot> ok(pot, s.mass, g, 10.0);
  CHECK_THROWS_AS(ok.step(ws, 0), ConfigError);
}

TEST_CASE("absorbing cap removes an outgoing packet without artifacts") {
  const auto s = free_spec(25.0);
  const auto g = make_grid(-100.0, 150.0, 512, -1.0, 1.0, 1);
  const auto ic = beam(5.0, 10.0, 5.0, 1.0);
  auto ws = initial_packet(s, ic, g);
  for (auto& a : ws.psi) a = std::conj(a);  // flip to +z motion

  const FreePot pot;
  const Absorber cap{60.0, 2e-4, 3};
  PropagatorT<FreePot> prop(pot, s.mass, g, 200.0, cap);
  prop.step(ws, 6000);

  const double remaining = ws.norm2();
  INFO("remaining mass " << remaining << " absorbed " << prop.absorbed());
  CHECK(remaining < 1e-6);
  CHECK_THAT(remaining + prop.absorbed(), Catch::Matchers::WithinAbs(1.0, 1e-8));
}

TEST_CASE("momentum analysis of a free escaped packet is specular") {
  auto s = free_spec(52.5);
  const auto g = make_grid(-60.0, 60.0, 256, -472.5, 472.5, 576);
  const auto ic = beam(5.0, 30.0, 2.8, 40.0);
  const auto ws = initial_packet(s, ic, g);

  const auto ma = momentum_analysis(ws, s.corr.l, s.mass, -50.0);
  CHECK_THAT(ma.escaped_mass, Catch::Matchers::WithinAbs(1.0, 1e-12));
  double sum = 0.0;
  double rho0 = 0.0, e0 = 0.0;
  for (std::size_t i = 0; i < ma.n.size(); ++i) {
    sum += ma.rho_n[i];
    if (ma.n[i] == 0) {
      rho0 = ma.rho_n[i];
      e0 = ma.e_n[i];
    }
  }
  CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK(rho0 > 1.0 - 1e-5);
  const double oracle = ic.E_i + 1.0 / (8.0 * s.mass * ic.dz * ic.dz) +
                        1.0 / (8.0 * s.mass * ic.dx * ic.dx);
  CHECK_THAT(e0, Catch::Matchers::WithinRel(oracle, 1e-5));
  // Angular spread of the beam: sigma_px / |p| plus the pz-spread correction.
  const double p_zi = std::sqrt(2.0 * s.mass * ic.E_i);
  INFO("theta_var " << ma.theta_var);
  CHECK_THAT(ma.theta_var,
             Catch::Matchers::WithinRel(std::pow(1.0 / (2.0 * ic.dx * p_zi), 2), 0.05));
  CHECK(std::abs(ma.theta_mean) < 1e-10);

  SECTION("fully trapped state is an empty result") {
    CHECK_THROWS_AS(momentum_analysis(ws, s.corr.l, s.mass, 58.0), EmptyResultError);
  }
  SECTION("incommensurate lattice is rejected") {
    CHECK_THROWS_AS(momentum_analysis(ws, 17.0, s.mass, -50.0), GridError);
  }
}

TEST_CASE("propagation is bitwise deterministic") {
  const auto s = surface_spec();
  const model::Model mod(s);
  const auto g = make_grid(-10.0, 110.0, 192, -2.0 * s.corr.l, 2.0 * s.corr.l, 48);
  const auto ic = beam(5.0, 30.0, 2.5, 1.2);

  auto run = [&] {
    auto ws = initial_packet(s, ic, g);
    Propagator prop(mod, s.mass, g, 10.0);
    prop.step(ws, 100);
    return ws.psi;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(a[0])) == 0);
}

TEST_CASE("spectrum helper resolves synthetic lines") {
  const double dt = 1.0;
  const std::vector<double> energies = {-0.9, -0.5004, -0.1};
  const std::vector<double> weights = {1.0, 0.6, 0.3};
  std::vector<std::complex<double>> c(4096);
  for (std::size_t k = 0; k < c.size(); ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t v = 0; v < energies.size(); ++v)
      acc += weights[v] * std::polar(1.0, -energies[v] * dt * double(k));
    c[k] = acc;
  }
  const auto peaks = autocorrelation_spectrum(c, dt, -1.1, 0.0, 8, 0.05);
  REQUIRE(peaks.size() == 3);
  const double res = constants::two_pi / (dt * 4095.0);
  for (std::size_t v = 0; v < 3; ++v) {
    CHECK_THAT(peaks[v].energy, Catch::Matchers::WithinAbs(energies[v], 0.5 * res));
  }
  CHECK(peaks[0].weight > peaks[1].weight);
  CHECK(peaks[1].weight > peaks[2].weight);

  CHECK_THROWS_AS(autocorrelation_spectrum({}, dt, -1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(autocorrelation_spectrum(c, -1.0, -1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(autocorrelation_spectrum(c, dt, 0.0, -1.0), ConfigError);
  CHECK_THROWS_AS(autocorrelation_spectrum(c, dt, -1.0, 0.0, 1), ConfigError);
}
