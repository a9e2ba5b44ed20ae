// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "scattersim/constants.hpp"
#include "scattersim/dynamics.hpp"
#include "scattersim/errors.hpp"
#include "scattersim/rng.hpp"

// Reductions from ensemble results to the reported observables: escape and
// trapping probabilities, the average escaped energy, the exponential rate
// fit with its bootstrap error, and the scattering distributions over the
// diffraction number n.
//
// All quantities stay in atomic units here; only the fitted rate m is in
// inverse femtoseconds, because that is the unit the reference data uses.

namespace scattersim::observables {

struct TimeSeries {
  std::vector<double> times;  // atomic units
  std::vector<double> values;
  std::vector<double> stderrs;
};

enum class Normalization { probability, density };

struct Histogram {
  std::vector<double> edges;   // size counts.size() + 1, increasing
  std::vector<double> counts;  // probability mass or density per bin
  std::vector<double> stderrs;
  Normalization normalization = Normalization::probability;

  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
};

struct RateFit {
  double c = 0.0;          // prefactor of c * exp(-m t)
  double m = 0.0;          // decay rate, 1/fs
  double fit_error = 0.0;  // RMS relative residual, percent
  double t_lo = 0.0;       // fit window, atomic units
  double t_hi = 0.0;
};

struct EnergyLoss {
  std::vector<double> n;       // occupied bin centers only
  std::vector<double> loss;    // <E_init - E_f>(n), atomic units
  std::vector<double> stderrs;
  std::vector<long> count;
};

inline constexpr double default_fit_lo = 40000.0 * constants::atomic_time_per_fs;
inline constexpr double default_fit_hi = 60000.0 * constants::atomic_time_per_fs;
inline constexpr double default_n_bin_width = 0.1;
inline constexpr int default_bootstrap_resamples = 200;

inline TimeSeries escape_probability(const dynamics::EnsembleResult& ens) {
  if (ens.n_valid() <= 0) throw ConfigError("ensemble holds no valid trajectories");
  const double N = double(ens.n_valid());
  TimeSeries ts;
  ts.times = ens.t;
  ts.values.resize(ens.t.size());
  ts.stderrs.resize(ens.t.size());
  for (std::size_t r = 0; r < ens.t.size(); ++r) {
    const double P = double(ens.escaped_count[r]) / N;
    ts.values[r] = P;
    ts.stderrs[r] = std::sqrt(P * (1.0 - P) / N);
  }
  return ts;
}

inline TimeSeries trapping_probability(const dynamics::EnsembleResult& ens) {
  TimeSeries ts = escape_probability(ens);
  for (auto& v : ts.values) v = 1.0 - v;
  return ts;
}

// Average escaped energy with the ensemble-size normalization: the sum of
// system energies over escaped trajectories divided by the total count, not
// by the escaped count. The quantity therefore tends to zero when nothing
// has escaped, and to the mean final energy once everything has.
inline TimeSeries escaped_energy(const dynamics::EnsembleResult& ens) {
  if (ens.n_valid() <= 0) throw ConfigError("ensemble holds no valid trajectories");
  const double N = double(ens.n_valid());
  TimeSeries ts;
  ts.times = ens.t;
  ts.values.resize(ens.t.size());
  ts.stderrs.resize(ens.t.size());
  for (std::size_t r = 0; r < ens.t.size(); ++r) {
    const double mean = ens.sum_e_theta[r] / N;
    const double var = std::max(0.0, ens.sum_e2_theta[r] / N - mean * mean);
    ts.values[r] = mean;
    ts.stderrs[r] = std::sqrt(var / N);
  }
  return ts;
}

// Conditional variant: mean energy among the escaped trajectories only.
// Records where nothing has escaped report zero with zero error.
inline TimeSeries escaped_energy_conditional(const dynamics::EnsembleResult& ens) {
  if (ens.n_valid() <= 0) throw ConfigError("ensemble holds no valid trajectories");
  TimeSeries ts;
  ts.times = ens.t;
  ts.values.resize(ens.t.size());
  ts.stderrs.resize(ens.t.size());
  for (std::size_t r = 0; r < ens.t.size(); ++r) {
    const long n_esc = ens.escaped_count[r];
    if (n_esc <= 0) {
      ts.values[r] = 0.0;
      ts.stderrs[r] = 0.0;
      continue;
    }
    const double mean = ens.sum_e_theta[r] / double(n_esc);
    const double var = std::max(0.0, ens.sum_e2_theta[r] / double(n_esc) - mean * mean);
    ts.values[r] = mean;
    ts.stderrs[r] = std::sqrt(var / double(n_esc));
  }
  return ts;
}

// Least-squares line through (t_fs, ln P) over the window. The slope is the
// escape rate in 1/fs; the reported error is the RMS relative residual of
// the reconstructed exponential against the data, in percent.
inline RateFit fit_rate(const TimeSeries& trap, double t_lo = default_fit_lo,
                        double t_hi = default_fit_hi) {
  if (!(t_lo < t_hi)) throw ConfigError("rate-fit window is empty");
  if (trap.times.empty() || t_lo < trap.times.front() - 1e-9 ||
      t_hi > trap.times.back() + 1e-9)
    throw ConfigError("rate-fit window extends beyond the recorded times");

  std::vector<double> ts, ps;
  for (std::size_t r = 0; r < trap.times.size(); ++r) {
    const double t = trap.times[r];
    if (t < t_lo - 1e-9 || t > t_hi + 1e-9) continue;
    const double P = trap.values[r];
    if (!(P > 0.0))
      throw FitDomainError("trapping probability is not positive inside the fit window");
    ts.push_back(t / constants::atomic_time_per_fs);
    ps.push_back(P);
  }
  if (ts.size() < 10) throw ConfigError("rate fit needs at least 10 records in the window");

  const double n = double(ts.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double y = std::log(ps[i]);
    sx += ts[i];
    sy += y;
    sxx += ts[i] * ts[i];
    sxy += ts[i] * y;
  }
  const double denom = n * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw FitDomainError("degenerate time axis in rate fit");
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;

  RateFit fit;
  fit.m = -slope;
  fit.c = std::exp(intercept);
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  double ss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double model = fit.c * std::exp(-fit.m * ts[i]);
    const double rel = (ps[i] - model) / ps[i];
    ss += rel * rel;
  }
  fit.fit_error = 100.0 * std::sqrt(ss / n);
  return fit;
}

inline RateFit fit_rate(const dynamics::EnsembleResult& ens, double t_lo = default_fit_lo,
                        double t_hi = default_fit_hi) {
  return fit_rate(trapping_probability(ens), t_lo, t_hi);
}

namespace detail {

// Escape histories restricted to the fit window collapse to a handful of
// distinct bit patterns (essentially "escaped at record r" plus rare
// recrossers), so bootstrap resampling runs over pattern counts instead of
// trajectories.
struct PatternTable {
  std::vector<std::vector<std::uint64_t>> patterns;
  std::vector<long> counts;
  long n_total = 0;
};

inline PatternTable compress_window(const dynamics::EnsembleResult& ens, long r_lo, long r_hi) {
  const long n_cols = r_hi - r_lo + 1;
  const long words = (n_cols + 63) / 64;
  std::map<std::vector<std::uint64_t>, long> hist;
  std::vector<std::uint64_t> key(words);
  for (long k = 0; k < ens.n_traj; ++k) {
    if (ens.aborted[k]) continue;
    std::fill(key.begin(), key.end(), 0);
    for (long r = r_lo; r <= r_hi; ++r)
      if (ens.escaped.get(k, r)) key[(r - r_lo) >> 6] |= 1ull << ((r - r_lo) & 63);
    ++hist[key];
  }
  PatternTable table;
  for (auto& [pattern, count] : hist) {
    table.patterns.push_back(pattern);
    table.counts.push_back(count);
    table.n_total += count;
  }
  return table;
}

// Walker alias table for sampling pattern indices proportionally to count.
struct AliasTable {
  std::vector<double> accept;
  std::vector<std::uint32_t> alias;

  explicit AliasTable(const std::vector<long>& counts, long total) {
    const std::size_t K = counts.size();
    accept.assign(K, 1.0);
    alias.assign(K, 0);
    std::vector<double> scaled(K);
    for (std::size_t i = 0; i < K; ++i)
      scaled[i] = double(counts[i]) * double(K) / double(total);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < K; ++i)
      (scaled[i] < 1.0 ? small : large).push_back(std::uint32_t(i));
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      const std::uint32_t l = large.back();
      small.pop_back();
      accept[s] = scaled[s];
      alias[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
  }

  std::uint32_t draw(rng::Stream& stream) const {
    const std::uint32_t i = std::uint32_t(stream.below(std::uint64_t(accept.size())));
    return stream.uniform() <= accept[i] ? i : alias[i];
  }
};

}  // namespace detail

// Bootstrap standard error of the fitted rate: trajectories are resampled
// with replacement (via their window escape patterns) and the fit repeated;
// the spread of the refitted rates is the error. Deterministic given the
// ensemble seed.
inline double bootstrap_rate_sigma(const dynamics::EnsembleResult& ens,
                                   double t_lo = default_fit_lo, double t_hi = default_fit_hi,
                                   int n_resamples = default_bootstrap_resamples) {
  if (ens.n_valid() <= 0) throw ConfigError("ensemble holds no valid trajectories");
  if (n_resamples < 2) throw ConfigError("bootstrap needs at least 2 resamples");
  long r_lo = -1, r_hi = -1;
  for (std::size_t r = 0; r < ens.t.size(); ++r) {
    if (ens.t[r] >= t_lo - 1e-9 && r_lo < 0) r_lo = long(r);
    if (ens.t[r] <= t_hi + 1e-9) r_hi = long(r);
  }
  if (r_lo < 0 || r_hi < r_lo + 9)
    throw ConfigError("bootstrap window needs at least 10 records");

  const auto table = detail::compress_window(ens, r_lo, r_hi);
  const detail::AliasTable alias(table.counts, table.n_total);
  const long n_cols = r_hi - r_lo + 1;

  // Per-pattern escaped-count contribution columns.
  std::vector<double> t_fs(n_cols);
  for (long c = 0; c < n_cols; ++c)
    t_fs[c] = ens.t[r_lo + c] / constants::atomic_time_per_fs;

  std::vector<long> resampled(table.patterns.size());
  std::vector<long> esc(n_cols);
  std::vector<double> rates;
  rates.reserve(n_resamples);
  int degenerate = 0;
  for (int b = 0; b < n_resamples; ++b) {
    rng::Stream stream(ens.seed, rng::StreamFamily::bootstrap, std::uint64_t(b));
    std::fill(resampled.begin(), resampled.end(), 0L);
    for (long k = 0; k < table.n_total; ++k) ++resampled[alias.draw(stream)];
    std::fill(esc.begin(), esc.end(), 0L);
    for (std::size_t p = 0; p < table.patterns.size(); ++p) {
      if (resampled[p] == 0) continue;
      const auto& bits = table.patterns[p];
      for (long c = 0; c < n_cols; ++c)
        if ((bits[c >> 6] >> (c & 63)) & 1ull) esc[c] += resampled[p];
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    bool ok = true;
    for (long c = 0; c < n_cols; ++c) {
      const double P = 1.0 - double(esc[c]) / double(table.n_total);
      if (!(P > 0.0)) {
        ok = false;
        break;
      }
      const double y = std::log(P);
      sx += t_fs[c];
      sy += y;
      sxx += t_fs[c] * t_fs[c];
      sxy += t_fs[c] * y;
    }
    if (!ok) {
      ++degenerate;
      continue;
    }
    const double n = double(n_cols);
    rates.push_back(-(n * sxy - sx * sy) / (n * sxx - sx * sx));
  }
  if (degenerate > n_resamples / 10)
    throw FitDomainError("too many bootstrap resamples left the fit domain");
  if (rates.size() < 2) throw FitDomainError("bootstrap produced fewer than 2 usable fits");

  double mean = 0.0;
  for (double m : rates) mean += m;
  mean /= double(rates.size());
  double ss = 0.0;
  for (double m : rates) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / double(rates.size() - 1));
}

inline double diffraction_number(double p_x_final, double p_x_initial, double lattice_l) {
  return lattice_l * (p_x_final - p_x_initial) / constants::two_pi;
}

namespace detail {

struct BinnedN {
  long k_min = 0;
  std::vector<long> counts;  // indexed by k - k_min
  std::vector<std::vector<long>> members;  // trajectory indices per bin
  long n_escaped = 0;
};

inline BinnedN bin_diffraction_numbers(const dynamics::EnsembleResult& ens, double bin_width,
                                       bool keep_members) {
  if (!(bin_width > 0.0)) throw ConfigError("bin width must be positive");
  std::vector<std::pair<long, long>> hits;  // (bin index k, trajectory)
  for (long k = 0; k < ens.n_traj; ++k) {
    if (ens.aborted[k] || !ens.at_analysis[k].escaped) continue;
    const double n = diffraction_number(ens.at_analysis[k].px, ens.p_xi, ens.lattice_l);
    hits.emplace_back(std::lround(n / bin_width), k);
  }
  if (hits.empty())
    throw EmptyResultError("no trajectory has escaped by the analysis time");
  BinnedN out;
  out.n_escaped = long(hits.size());
  long k_max = hits.front().first;
  out.k_min = k_max;
  for (const auto& [bin, traj] : hits) {
    out.k_min = std::min(out.k_min, bin);
    k_max = std::max(k_max, bin);
  }
  out.counts.assign(k_max - out.k_min + 1, 0);
  if (keep_members) out.members.assign(out.counts.size(), {});
  for (const auto& [bin, traj] : hits) {
    ++out.counts[bin - out.k_min];
    if (keep_members) out.members[bin - out.k_min].push_back(traj);
  }
  return out;
}

}  // namespace detail

// Probability distribution of the diffraction number over the trajectories
// escaped at the analysis record, on bins of the given width centered at
// integer multiples of it.
inline Histogram density_vs_n(const dynamics::EnsembleResult& ens,
                              double bin_width = default_n_bin_width) {
  const auto binned = detail::bin_diffraction_numbers(ens, bin_width, false);
  Histogram h;
  h.normalization = Normalization::probability;
  const std::size_t n_bins = binned.counts.size();
  h.edges.resize(n_bins + 1);
  h.counts.resize(n_bins);
  h.stderrs.resize(n_bins);
  const double N = double(binned.n_escaped);
  for (std::size_t i = 0; i <= n_bins; ++i)
    h.edges[i] = (double(binned.k_min + long(i)) - 0.5) * bin_width;
  for (std::size_t i = 0; i < n_bins; ++i) {
    const double p = double(binned.counts[i]) / N;
    h.counts[i] = p;
    h.stderrs[i] = std::sqrt(p * (1.0 - p) / N);
  }
  return h;
}

// Distribution of the deflection angle theta = atan(px / |pz|), binned
// uniformly in angle and reported as a density over n through the elastic
// mapping n(theta) = l (|p| sin(theta) - p_xi) / (2 pi) with |p| fixed by
// the incident energy. Bin masses divided by the n-width of each bin make
// the histogram integrate to one.
inline Histogram angular_distribution(const dynamics::EnsembleResult& ens, int n_bins = 91) {
  if (n_bins < 1) throw ConfigError("angular distribution needs at least one bin");
  const double p_elastic = std::sqrt(2.0 * ens.mass * ens.E_i);
  std::vector<long> counts(n_bins, 0);
  long n_escaped = 0;
  for (long k = 0; k < ens.n_traj; ++k) {
    if (ens.aborted[k] || !ens.at_analysis[k].escaped) continue;
    const auto& f = ens.at_analysis[k];
    const double theta = std::atan2(f.px, std::abs(f.pz));
    long bin = long((theta + 0.5 * constants::pi) / constants::pi * n_bins);
    bin = std::clamp(bin, 0L, long(n_bins - 1));
    ++counts[bin];
    ++n_escaped;
  }
  if (n_escaped == 0)
    throw EmptyResultError("no trajectory has escaped by the analysis time");

  Histogram h;
  h.normalization = Normalization::density;
  h.edges.resize(n_bins + 1);
  h.counts.resize(n_bins);
  h.stderrs.resize(n_bins);
  for (int i = 0; i <= n_bins; ++i) {
    const double theta = -0.5 * constants::pi + double(i) * constants::pi / n_bins;
    h.edges[i] =
        ens.lattice_l * (p_elastic * std::sin(theta) - ens.p_xi) / constants::two_pi;
  }
  for (int i = 0; i < n_bins; ++i) {
    const double width = h.edges[i + 1] - h.edges[i];
    const double p = double(counts[i]) / double(n_escaped);
    h.counts[i] = p / width;
    h.stderrs[i] = std::sqrt(p * (1.0 - p) / double(n_escaped)) / width;
  }
  return h;
}

// Energy loss per diffraction channel: mean system energy surrendered by the
// escaped trajectories in each occupied n bin, each trajectory referenced to
// its own initial energy so the incident Wigner spread cancels and a bath-free
// run reports zero to integrator accuracy. Empty bins are omitted. Errors are
// bootstrap estimates over the bin members.
inline EnergyLoss energy_loss_vs_n(const dynamics::EnsembleResult& ens,
                                   double bin_width = default_n_bin_width,
                                   int n_resamples = default_bootstrap_resamples) {
  const auto binned = detail::bin_diffraction_numbers(ens, bin_width, true);
  EnergyLoss out;
  std::vector<double> losses;
  for (std::size_t i = 0; i < binned.counts.size(); ++i) {
    const long c = binned.counts[i];
    if (c == 0) continue;
    losses.clear();
    double mean = 0.0;
    for (long traj : binned.members[i]) {
      const double d = ens.e_init[traj] - ens.at_analysis[traj].e_sys;
      losses.push_back(d);
      mean += d;
    }
    mean /= double(c);

    double sigma = 0.0;
    if (c > 1) {
      rng::Stream stream(ens.seed, rng::StreamFamily::bootstrap,
                         (std::uint64_t(i + 1) << 32));
      double bs_sum = 0.0, bs_sum2 = 0.0;
      for (int b = 0; b < n_resamples; ++b) {
        double acc = 0.0;
        for (long d = 0; d < c; ++d) acc += losses[stream.below(std::uint64_t(c))];
        acc /= double(c);
        bs_sum += acc;
        bs_sum2 += acc * acc;
      }
      const double bs_mean = bs_sum / n_resamples;
      sigma = std::sqrt(std::max(0.0, bs_sum2 / n_resamples - bs_mean * bs_mean) *
                        double(n_resamples) / double(n_resamples - 1));
    }

    out.n.push_back(double(binned.k_min + long(i)) * bin_width);
    out.loss.push_back(mean);
    out.stderrs.push_back(sigma);
    out.count.push_back(c);
  }
  return out;
}

}  // namespace scattersim::observables
