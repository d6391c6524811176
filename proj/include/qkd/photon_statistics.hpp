#ifndef QKD_PHOTON_STATISTICS_HPP
#define QKD_PHOTON_STATISTICS_HPP

#include <cmath>
#include <vector>

#include "qkd/errors.hpp"
#include "qkd/quadrature.hpp"
#include "qkd/source_optics.hpp"
#include "qkd/special_functions.hpp"

namespace qkd {

enum class Interval { signal, decoy };

// Conditional photon-number distributions of the pulses sent to Bob, per
// intensity interval, truncated at n_max with a rigorous Poisson tail bound.
struct PhotonStats {
  std::vector<double> p_signal; // p_n^s, n = 0..n_max
  std::vector<double> p_decoy;  // p_n^d
  int n_max = 0;
  double tail_bound = 0.0; // upper bound on sum_{n>n_max} p_n, either interval
  double p_s = 0.0;        // probability of the signal interval, theta_L/pi
  double p_d = 0.0;
  double theta_lambda = 0.0;
  double mu_t = 0.0;
};

namespace detail {

// e^{-g} g^n / n! for modest n and g; safe for g in [0, ~8], n <= ~40.
inline double poisson_pmf(int n, double g) {
  if (g == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-g) * std::pow(g, n) / std::tgamma(n + 1.0);
}

} // namespace detail

// Photon-number probability by phase-averaged quadrature over the interval.
inline double pn_numeric(int n, Interval itv, const SourceConfig& cfg) {
  if (n < 0) throw config_error("pn_numeric: n must be >= 0");
  const double th_l = theta_lambda(cfg);
  const double lo = (itv == Interval::signal) ? 0.0 : th_l;
  const double hi = (itv == Interval::signal) ? th_l : pi;
  const auto integrand = [&](double th) {
    return detail::poisson_pmf(n, gamma(th, cfg));
  };
  // Tight absolute floor so the truncated-distribution bookkeeping (the
  // n_max-term normalization deficit is ~1e-13) is not quadrature-limited.
  return integrate_value(integrand, lo, hi, 1e-14, 1e-12) / (hi - lo);
}

// Closed forms for n <= 2 at theta_lambda = pi/2, where zeta_val = 2*mu*t is
// the intensity sent to Bob at the threshold angle.  Callers are responsible
// for only using these when theta_lambda is pi/2.
inline double pn_closed_form(int n, Interval itv, double zeta_val) {
  if (n < 0 || n > 2)
    throw numeric_error("pn_closed_form: closed forms exist for n in {0,1,2}");
  if (!(zeta_val >= 0.0))
    throw numeric_error("pn_closed_form: zeta must be >= 0");
  const double z = zeta_val;
  // s = -1 selects the signal-interval (bright) combination, +1 the decoy one.
  const double s = (itv == Interval::signal) ? -1.0 : 1.0;
  const double a = (itv == Interval::signal) ? a_minus(z) : a_plus(z);
  if (n == 0) return a;
  const double i1 = bessel_I(1, z);
  const double lm1 = struve_L(-1, z);
  if (n == 1) return z * (a - std::exp(-z) * (i1 + s * lm1));
  const double i2 = bessel_I(2, z);
  const double l2 = struve_L(2, z);
  return 0.5 * z *
         (z * a + std::exp(-z) * (-s * (2.0 / pi) * (1.0 - z * z / 3.0) +
                                  (1.0 - 2.0 * z) * (i1 + s * lm1) +
                                  z * (i2 + s * l2)));
}

// Probability that the measured polarization angle falls in one of the four
// acceptance arcs of half-width pi/4 - omega.
inline double p_acc(double omega) {
  if (!(omega >= 0.0 && omega <= pi / 4.0))
    throw config_error("p_acc: omega outside [0, pi/4]");
  return 1.0 - 4.0 * omega / pi;
}

// Builds the truncated distributions.  Uses the closed forms for n <= 2 when
// theta_lambda = pi/2 and quadrature otherwise.  The tail bound is the
// Poisson tail at the maximal intensity gamma_max = 4*mu*t, which dominates
// the tail of every mixture component.
inline PhotonStats build_stats(const SourceConfig& cfg, int n_max = 12) {
  if (n_max < 2) throw config_error("build_stats: n_max must be >= 2");
  validate(cfg);
  PhotonStats st;
  st.n_max = n_max;
  st.theta_lambda = theta_lambda(cfg);
  st.p_s = st.theta_lambda / pi;
  st.p_d = 1.0 - st.p_s;
  st.mu_t = cfg.mu_t();
  st.p_signal.resize(n_max + 1);
  st.p_decoy.resize(n_max + 1);

  const bool at_pi2 = std::abs(st.theta_lambda - pi / 2.0) <= 1e-12;
  const double z = 2.0 * cfg.mu_t();
  for (int n = 0; n <= n_max; ++n) {
    if (at_pi2 && n <= 2) {
      st.p_signal[n] = pn_closed_form(n, Interval::signal, z);
      st.p_decoy[n] = pn_closed_form(n, Interval::decoy, z);
    } else {
      st.p_signal[n] = pn_numeric(n, Interval::signal, cfg);
      st.p_decoy[n] = pn_numeric(n, Interval::decoy, cfg);
    }
  }

  // Tail of Poisson(g_max) beyond n_max: first omitted term times a
  // geometric majorant (term ratio <= g/(n_max+2) < 1 here).
  const double g_max = 4.0 * cfg.mu_t();
  const double first = detail::poisson_pmf(n_max + 1, g_max);
  const double ratio = g_max / (n_max + 2.0);
  st.tail_bound = (ratio < 1.0) ? first / (1.0 - ratio)
                                : 1.0; // conservative fallback, not reachable
                                       // for the supported mu*t <= 1
  return st;
}

} // namespace qkd

#endif
