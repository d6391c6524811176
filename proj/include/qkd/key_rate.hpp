#ifndef QKD_KEY_RATE_HPP
#define QKD_KEY_RATE_HPP

#include <cmath>

#include "qkd/decoy_bounds.hpp"
#include "qkd/detection_model.hpp"
#include "qkd/errors.hpp"
#include "qkd/photon_statistics.hpp"
#include "qkd/quadrature.hpp"
#include "qkd/source_optics.hpp"
#include "qkd/special_functions.hpp"

namespace qkd {

struct RateResult {
  double rate_total = 0.0;  // secret key bits per pulse
  double rate_signal = 0.0; // per-interval R^i before clamping
  double rate_decoy = 0.0;
  DecoyBounds bounds_used;
  ObservedStats observed;
};

inline double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0))
    throw numeric_error("binary_entropy: argument outside [0,1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

namespace detail {

// Privacy-amplification credit per single-photon bit.  1 - H(e1) for
// e1 < 1/2; an estimated error rate at or beyond 1/2 earns nothing (the
// formula's 1 - H(e1) would turn positive again for e1 > 1/2, which has no
// operational meaning for one-way post-processing).
inline double single_photon_credit(double e1_upper) {
  if (e1_upper >= 0.5) return 0.0;
  return 1.0 - binary_entropy(e1_upper);
}

} // namespace detail

// Bound-based per-interval rate:
//   q p_acc { -Q^i f(E^i) H(E^i) + combined^i [1 - H(e1^U)] }.
// May be negative; clamping happens in total_rate.
inline double rate_interval_bounds(Interval itv, const PhotonStats& st,
                                   const ObservedStats& obs,
                                   const DecoyBounds& bounds,
                                   const ChannelConfig& ch, double omega) {
  const double q_i = (itv == Interval::signal) ? obs.q_signal : obs.q_decoy;
  const double e_i = (itv == Interval::signal) ? obs.e_signal : obs.e_decoy;
  const double comb = (itv == Interval::signal) ? bounds.combined_signal
                                                : bounds.combined_decoy;
  (void)st;
  const double pa = p_acc(omega);
  return ch.q_eff * pa *
         (-q_i * ch.f_ec * binary_entropy(e_i) +
          comb * detail::single_photon_credit(bounds.e1_upper));
}

// Total rate R = sum_i p_i max{R^i, 0}.
inline RateResult total_rate(const PhotonStats& st, const ObservedStats& obs,
                             const DecoyBounds& bounds, const ChannelConfig& ch,
                             double omega) {
  RateResult r;
  r.bounds_used = bounds;
  r.observed = obs;
  r.rate_signal =
      rate_interval_bounds(Interval::signal, st, obs, bounds, ch, omega);
  r.rate_decoy =
      rate_interval_bounds(Interval::decoy, st, obs, bounds, ch, omega);
  r.rate_total =
      st.p_s * std::max(r.rate_signal, 0.0) + st.p_d * std::max(r.rate_decoy, 0.0);
  return r;
}

// Full two-interval pipeline at one parameter point.  n_max = 2 suffices for
// the rate itself (the estimation uses p_0..p_2 only) and skips the
// higher-order quadratures on the optimizer's hot path; reporting paths use
// the default 12.
inline RateResult evaluate_passive2(const SourceConfig& src,
                                    const ChannelConfig& ch, int n_max = 12) {
  const PhotonStats st = build_stats(src, n_max);
  if (p_acc(src.omega) <= 0.0) {
    // Acceptance arcs have zero measure: nothing is ever accepted.
    RateResult r;
    return r;
  }
  const ObservedStats obs = observe(src, ch);
  const DecoyBounds bounds = build_bounds(st, obs);
  return total_rate(st, obs, bounds, ch, src.omega);
}

// Single-photon error rate of the asymptotic passive transmitter:
//   e1 = (1/2Y1) { Y0 + (1-e)^2 eta - (1-e) eta sin(hw)/hw },  hw = pi/4 - omega.
inline double asymptotic_e1(double eta_sys_val, double omega,
                            double epsilon_B) {
  const double e = epsilon_B;
  const double y0 = e * (2.0 - e);
  // 1 - (1-y0)(1-eta), expanded so it stays accurate when both are tiny.
  const double y1 = y0 + eta_sys_val - y0 * eta_sys_val;
  const double hw = pi / 4.0 - omega;
  const double sinc = (hw > 1e-12) ? std::sin(hw) / hw : 1.0;
  return (y0 + (1.0 - e) * (1.0 - e) * eta_sys_val -
          (1.0 - e) * eta_sys_val * sinc) /
         (2.0 * y1);
}

// Intermediates of the asymptotic passive variant, exposed for reporting.
struct AsymptoticPassiveDetail {
  double q_gain = 0.0; // full-range gain Q
  double e_mu = 0.0;   // full-range error rate E
  double y0 = 0.0, y1 = 0.0, e1 = 0.0;
  double p0 = 0.0, p1 = 0.0;
  double rate = 0.0;
};

// Asymptotic passive transmitter: one interval covering all phases
// (p_s ~ 1), perfect knowledge of Y0, Y1, e1, optimized zeta = 2 mu t.
inline AsymptoticPassiveDetail
asymptotic_passive_detail(double zeta_val, double omega,
                          const ChannelConfig& ch) {
  if (!(zeta_val > 0.0))
    throw config_error("asymptotic_passive_rate: zeta must be > 0");
  if (!(omega >= 0.0 && omega <= pi / 4.0))
    throw config_error("asymptotic_passive_rate: omega outside [0, pi/4]");
  const double e = ch.epsilon_B;
  const double es = eta_sys(ch);
  const double x = es * zeta_val;

  AsymptoticPassiveDetail out;
  out.y0 = e * (2.0 - e);
  out.y1 = out.y0 + es - out.y0 * es; // = 1 - (1-y0)(1-eta), no cancellation
  out.e1 = asymptotic_e1(es, omega, e);

  out.p0 = std::exp(-zeta_val) * bessel_I(0, zeta_val);
  out.p1 = zeta_val * std::exp(-zeta_val) *
           (bessel_I(0, zeta_val) - bessel_I(1, zeta_val));

  const double one_m_e_sq = (1.0 - e) * (1.0 - e);
  out.q_gain = out.y0 + one_m_e_sq * i0_kernel_deficit(x);

  // Acceptance-arc average of E_psi.  The kernel bracket
  //   e(e-1) K(x(1-c)/2) + [2+e(e-3)] K(x(1+c)/2) - (1-e)^2 [sum of both]
  // collapses exactly to (1-e) [K(x(1+c)/2) - K(x(1-c)/2)], a difference of
  // near-1 kernels; the deficit form keeps it accurate at small x.
  const double hw = pi / 4.0 - omega;
  const auto bracket = [&](double psi) {
    const double c = std::cos(psi);
    return (1.0 - e) * (i0_kernel_deficit(0.5 * x * (1.0 - c)) -
                        i0_kernel_deficit(0.5 * x * (1.0 + c)));
  };
  double avg_bracket;
  if (hw > 1e-12) {
    avg_bracket = integrate_value(bracket, 0.0, hw, 1e-13, 1e-11) / hw;
  } else {
    avg_bracket = bracket(0.0);
  }
  out.e_mu = (out.q_gain + avg_bracket) / (2.0 * out.q_gain);

  const double pa = p_acc(omega);
  out.rate = ch.q_eff * pa *
             (-out.q_gain * ch.f_ec * binary_entropy(out.e_mu) +
              out.p1 * out.y1 * detail::single_photon_credit(out.e1) +
              out.p0 * out.y0);
  return out;
}

inline double asymptotic_passive_rate(double zeta_val, double omega,
                                      const ChannelConfig& ch) {
  return asymptotic_passive_detail(zeta_val, omega, ch).rate;
}

// Intermediates of the active infinite-decoy baseline.
struct ActiveDecoyDetail {
  double q_mu = 0.0;
  double e_mu = 0.0;
  double y0 = 0.0, y1 = 0.0, e1 = 0.0;
  double rate = 0.0;
};

// Active transmitter with infinitely many decoy settings: Poissonian source
// of mean mu, perfect parameter estimation, perfect BB84 polarization states
// (the omega -> pi/4 limit of the acceptance geometry).
inline ActiveDecoyDetail active_infinite_decoy_detail(double mu_active,
                                                      const ChannelConfig& ch) {
  if (!(mu_active > 0.0))
    throw config_error("active_infinite_decoy_rate: mu must be > 0");
  const double e = ch.epsilon_B;
  const double es = eta_sys(ch);

  ActiveDecoyDetail out;
  out.y0 = e * (2.0 - e);
  out.y1 = out.y0 + es - out.y0 * es; // = 1 - (1-y0)(1-eta), no cancellation
  // y0 + (1-e)^2 es - (1-e) es simplifies exactly to e [(2-e) - (1-e) es].
  out.e1 = e * ((2.0 - e) - (1.0 - e) * es) / (2.0 * out.y1);

  out.q_mu = out.y0 -
             (1.0 - e) * (1.0 - e) * std::expm1(-es * mu_active);
  // Perfect-state error volume: only dark counts produce errors, half of the
  // vacuum-coincident darks plus half of the double clicks.
  const double emu_qmu =
      0.5 * e * (1.0 + (1.0 - e) * std::exp(-es * mu_active));
  out.e_mu = emu_qmu / out.q_mu;

  const double q1 = mu_active * std::exp(-mu_active) * out.y1;
  const double q0 = std::exp(-mu_active) * out.y0;
  out.rate = ch.q_eff * (-out.q_mu * ch.f_ec * binary_entropy(out.e_mu) +
                         q1 * detail::single_photon_credit(out.e1) + q0);
  return out;
}

inline double active_infinite_decoy_rate(double mu_active,
                                         const ChannelConfig& ch) {
  return active_infinite_decoy_detail(mu_active, ch).rate;
}

} // namespace qkd

#endif
