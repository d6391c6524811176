#ifndef QKD_MC_ORACLE_HPP
#define QKD_MC_ORACLE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "qkd/detection_model.hpp"
#include "qkd/errors.hpp"
#include "qkd/photon_statistics.hpp"
#include "qkd/source_optics.hpp"

namespace qkd {

// Small, fast, splittable stream generator (period 2^64).  The generator
// name is recorded in every report for reproducibility.
struct splitmix64 {
  std::uint64_t state;
  explicit splitmix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }
};

struct McEstimate {
  double value = 0.0;
  double se = 0.0; // binomial standard error of the recorded counts
};

struct McReport {
  static constexpr int hist_max = 15; // photon histogram cap (overflow lumped)

  long n_samples = 0;
  std::uint64_t seed = 0;
  std::string generator = "splitmix64";

  long n_accepted = 0;
  McEstimate p_acc_hat;
  // Interval classification frequencies, measured over all samples.
  std::array<McEstimate, 2> interval_prob_hat; // [signal, decoy]
  // Conditional photon-number histograms over accepted samples.
  std::array<long, 2> accepted_per_interval{};
  std::array<std::array<McEstimate, hist_max + 1>, 2> pn_hat;

  bool has_detection = false;
  std::array<McEstimate, 2> q_hat; // clicks / accepted, per interval
  std::array<McEstimate, 2> e_hat; // errors / clicks, per interval
};

namespace detail {

inline McEstimate binomial_estimate(long k, long n) {
  if (n <= 0) return {0.0, 0.0};
  const double p = double(k) / double(n);
  return {p, std::sqrt(std::max(p * (1.0 - p), 0.0) / double(n))};
}

inline int poisson_draw(double mean, splitmix64& rng) {
  // Inversion by sequential search; fine for the small means used here.
  if (mean <= 0.0) return 0;
  const double u = rng.uniform01();
  double p = std::exp(-mean);
  double cdf = p;
  int k = 0;
  while (u > cdf && k < 400) {
    ++k;
    p *= mean / k;
    cdf += p;
  }
  return k;
}

inline int binomial_draw(int n, double p, splitmix64& rng) {
  int k = 0;
  for (int i = 0; i < n; ++i)
    if (rng.uniform01() < p) ++k;
  return k;
}

struct ClickOutcome {
  bool click = false;
  bool error = false;
};

// Threshold detection of k photons split between the correct and wrong arm
// with probability p_correct, each surviving with probability eta, plus
// independent dark counts; double clicks become errors with probability 1/2.
inline ClickOutcome detect_photons(int k, double p_correct, double eta,
                                   double eps, splitmix64& rng) {
  const int n_correct = binomial_draw(k, p_correct, rng);
  const int n_wrong = k - n_correct;
  const bool surv_c = binomial_draw(n_correct, eta, rng) > 0;
  const bool surv_w = binomial_draw(n_wrong, eta, rng) > 0;
  const bool click_c = surv_c || (rng.uniform01() < eps);
  const bool click_w = surv_w || (rng.uniform01() < eps);
  ClickOutcome out;
  if (click_c && click_w) {
    out.click = true;
    out.error = rng.uniform01() < 0.5;
  } else if (click_w) {
    out.click = true;
    out.error = true;
  } else if (click_c) {
    out.click = true;
  }
  return out;
}

struct McCounts {
  long interval_count[2] = {0, 0}; // over all samples
  long accepted = 0;
  long accepted_interval[2] = {0, 0};
  long pn_count[2][McReport::hist_max + 1] = {};
  long clicks[2] = {0, 0};
  long errors[2] = {0, 0};
};

inline double wrap_angle(double x) {
  const double two_pi = 2.0 * pi;
  double r = std::fmod(x, two_pi);
  if (r < 0.0) r += two_pi;
  return r;
}

// One logical shard of the simulation.  detection=false stops after the
// photon-number draw.  force_psi >= 0 pins the polarization angle (used by
// the POVM cross-check); the acceptance test still applies to the drawn psi
// geometry, so forced runs use psi values inside an arc.
inline void run_shard(const SourceConfig& cfg, const ChannelConfig* ch,
                      long n, splitmix64 rng, double force_psi,
                      McCounts& acc) {
  const double two_pi = 2.0 * pi;
  const double hw = pi / 4.0 - cfg.omega;
  const double quarter = pi / 2.0;
  const double eta = ch ? eta_sys(*ch) : 0.0;
  const double eps = ch ? ch->epsilon_B : 0.0;

  for (long s = 0; s < n; ++s) {
    const double th1 = two_pi * rng.uniform01();
    const double th2 = two_pi * rng.uniform01();
    const double th3 = two_pi * rng.uniform01();
    const double th4 = two_pi * rng.uniform01();
    const double theta = th2 - th1;
    const double zeta_val = 2.0 * cfg.mu * (1.0 + std::cos(theta));
    const int itv = ((1.0 - cfg.t) * zeta_val >= cfg.lambda_threshold) ? 0 : 1;
    ++acc.interval_count[itv];

    const double psi = (force_psi >= 0.0) ? force_psi : wrap_angle(th4 - th3);
    const double folded = std::fmod(psi, quarter);
    const bool accepted = (hw > 0.0) && (folded <= hw || folded >= quarter - hw);
    if (!accepted) continue;
    ++acc.accepted;
    ++acc.accepted_interval[itv];

    const double gamma_val = cfg.t * zeta_val;
    const int k = poisson_draw(gamma_val, rng);
    ++acc.pn_count[itv][k > McReport::hist_max ? McReport::hist_max : k];

    if (!ch) continue;
    // Angle relative to the nearest acceptance-arc center; the correct arm
    // collects each photon with probability (1 + cos delta)/2.
    const double center = quarter * std::round(psi / quarter);
    const double delta = psi - center;
    const double p_correct = 0.5 * (1.0 + std::cos(delta));
    const ClickOutcome o = detect_photons(k, p_correct, eta, eps, rng);
    if (o.click) {
      ++acc.clicks[itv];
      if (o.error) ++acc.errors[itv];
    }
  }
}

inline McReport run_mc(const SourceConfig& cfg, const ChannelConfig* ch,
                       long n, std::uint64_t seed, double force_psi) {
  if (n < 1) throw config_error("monte carlo: sample count must be >= 1");
  validate(cfg);
  if (ch) validate(*ch);

  // Sixteen fixed logical shards with seeds derived from the master seed;
  // results are independent of any physical thread count by construction.
  constexpr int n_shards = 16;
  splitmix64 seeder(seed);
  McCounts acc;
  const long base = n / n_shards;
  long assigned = 0;
  for (int sh = 0; sh < n_shards; ++sh) {
    const long this_n = (sh == n_shards - 1) ? (n - assigned) : base;
    assigned += this_n;
    splitmix64 rng(seeder.next());
    run_shard(cfg, ch, this_n, rng, force_psi, acc);
  }

  McReport rep;
  rep.n_samples = n;
  rep.seed = seed;
  rep.n_accepted = acc.accepted;
  rep.p_acc_hat = binomial_estimate(acc.accepted, n);
  for (int i = 0; i < 2; ++i) {
    rep.interval_prob_hat[i] = binomial_estimate(acc.interval_count[i], n);
    rep.accepted_per_interval[i] = acc.accepted_interval[i];
    for (int k = 0; k <= McReport::hist_max; ++k)
      rep.pn_hat[i][k] =
          binomial_estimate(acc.pn_count[i][k], acc.accepted_interval[i]);
  }
  if (ch) {
    rep.has_detection = true;
    for (int i = 0; i < 2; ++i) {
      rep.q_hat[i] = binomial_estimate(acc.clicks[i], acc.accepted_interval[i]);
      rep.e_hat[i] = binomial_estimate(acc.errors[i], acc.clicks[i]);
    }
  }
  return rep;
}

} // namespace detail

// Source-only simulation: phase draws, classification, acceptance, photon
// number.  Validates p_s, p_acc and the p_n^i distributions.
inline McReport run_source_mc(const SourceConfig& cfg, long n,
                              std::uint64_t seed) {
  return detail::run_mc(cfg, nullptr, n, seed, -1.0);
}

// Full simulation including channel loss, detector thinning, dark counts and
// double-click assignment.  Validates Q^i and E^i.
inline McReport run_detection_mc(const SourceConfig& cfg,
                                 const ChannelConfig& ch, long n,
                                 std::uint64_t seed) {
  return detail::run_mc(cfg, &ch, n, seed, -1.0);
}

// Detection run with the polarization angle pinned to a fixed psi (must lie
// inside an acceptance arc to produce accepted samples).  e_hat then
// estimates E_psi, comparable against qber_psi.
inline McReport run_detection_mc_fixed_psi(const SourceConfig& cfg,
                                           const ChannelConfig& ch, double psi,
                                           long n, std::uint64_t seed) {
  if (!(psi >= 0.0 && psi < 2.0 * pi))
    throw config_error("run_detection_mc_fixed_psi: psi outside [0, 2*pi)");
  return detail::run_mc(cfg, &ch, n, seed, psi);
}

// Repeated threshold detection of the Fock input |n, m> (n photons to the
// correct arm, m to the wrong arm); frequencies compare directly against
// click_probabilities.
struct FockClickCounts {
  long n_runs = 0;
  long vac = 0, det0 = 0, det1 = 0, dc = 0;
};

inline FockClickCounts run_fock_detection_mc(int n, int m,
                                             const ChannelConfig& ch,
                                             long runs, std::uint64_t seed) {
  if (runs < 1) throw config_error("monte carlo: sample count must be >= 1");
  if (n < 0 || m < 0)
    throw config_error("run_fock_detection_mc: photon numbers must be >= 0");
  validate(ch);
  const double eta = eta_sys(ch);
  const double eps = ch.epsilon_B;
  splitmix64 rng(seed);
  FockClickCounts c;
  c.n_runs = runs;
  for (long s = 0; s < runs; ++s) {
    const bool surv_c = detail::binomial_draw(n, eta, rng) > 0;
    const bool surv_w = detail::binomial_draw(m, eta, rng) > 0;
    const bool click_c = surv_c || (rng.uniform01() < eps);
    const bool click_w = surv_w || (rng.uniform01() < eps);
    if (click_c && click_w)
      ++c.dc;
    else if (click_c)
      ++c.det0;
    else if (click_w)
      ++c.det1;
    else
      ++c.vac;
  }
  return c;
}

} // namespace qkd

#endif
