#ifndef QKD_DETECTION_MODEL_HPP
#define QKD_DETECTION_MODEL_HPP

#include <cmath>
#include <string>

#include "qkd/errors.hpp"
#include "qkd/photon_statistics.hpp"
#include "qkd/quadrature.hpp"
#include "qkd/source_optics.hpp"
#include "qkd/special_functions.hpp"

namespace qkd {

// Fiber channel + active BB84 receiver: two threshold detectors behind a
// polarizing beamsplitter, with independent dark counts per detector per
// gate and no other background.
struct ChannelConfig {
  double alpha = 0.2;        // fiber loss, dB/km
  double distance = 100.0;   // km
  double eta_B = 0.045;      // receiver transmittance
  double epsilon_B = 3.2e-7; // dark count rate per detector per gate
  double q_eff = 0.5;        // protocol efficiency q
  double f_ec = 1.22;        // error-correction inefficiency f(E)
};

inline void validate(const ChannelConfig& cfg) {
  std::string msg;
  auto add = [&msg](const std::string& s) {
    if (!msg.empty()) msg += "; ";
    msg += s;
  };
  if (!(cfg.alpha >= 0.0)) add("alpha must be >= 0");
  if (!(cfg.distance >= 0.0)) add("distance must be >= 0");
  if (!(cfg.eta_B > 0.0 && cfg.eta_B <= 1.0)) add("eta_B must be in (0,1]");
  if (!(cfg.epsilon_B >= 0.0 && cfg.epsilon_B < 1.0))
    add("epsilon_B must be in [0,1)");
  if (!(cfg.q_eff > 0.0 && cfg.q_eff <= 1.0)) add("q_eff must be in (0,1]");
  if (!(cfg.f_ec >= 1.0)) add("f_ec must be >= 1");
  if (!msg.empty()) throw config_error("invalid channel configuration: " + msg);
}

// Observed per-interval statistics entering the decoy estimation.
struct ObservedStats {
  double q_signal = 0.0;
  double q_decoy = 0.0;
  double e_signal = 0.0;
  double e_decoy = 0.0;
};

inline double eta_sys(const ChannelConfig& cfg) {
  return cfg.eta_B * std::pow(10.0, -cfg.alpha * cfg.distance / 10.0);
}

// Gain by phase-averaged quadrature over the interval.  Written as
// dark-count floor plus no-click deficit: at long distances the deficit is
// O(eta_sys), and forming 1 - <exp(-g)> directly would cancel it away.
inline double gain_numeric(Interval itv, const SourceConfig& src,
                           const ChannelConfig& ch) {
  const double es = eta_sys(ch);
  const double th_l = theta_lambda(src);
  const double lo = (itv == Interval::signal) ? 0.0 : th_l;
  const double hi = (itv == Interval::signal) ? th_l : pi;
  // The deficit scales with eta_sys, so the quadrature budget must scale
  // with it too: a fixed absolute tolerance would swamp the integrand at
  // long distances, while a pure relative one chases rounding noise.
  const double scale =
      std::max(-std::expm1(-es * 4.0 * src.mu_t()), 1e-300);
  const double deficit = integrate_value([&](double th) {
                           return -std::expm1(-es * gamma(th, src));
                         }, lo, hi, 1e-13 * scale * (hi - lo), 1e-11) /
                         (hi - lo);
  const double e = ch.epsilon_B;
  return e * (2.0 - e) + (1.0 - e) * (1.0 - e) * deficit;
}

// Gain closed form, valid at theta_lambda = pi/2 with zeta_val = 2*mu*t.
inline double gain_closed_form(Interval itv, double zeta_val,
                               const ChannelConfig& ch) {
  if (!(zeta_val >= 0.0))
    throw numeric_error("gain_closed_form: zeta must be >= 0");
  const double x = eta_sys(ch) * zeta_val;
  const double d = (itv == Interval::signal) ? a_minus_deficit(x)
                                             : a_plus_deficit(x);
  const double e = ch.epsilon_B;
  return e * (2.0 - e) + (1.0 - e) * (1.0 - e) * d;
}

namespace detail {

// Shared assembly of the error rate at fixed psi from the three f-averages
// and the gain: (1/2Q) { e(e-1) f0 + [2+e(e-3)] f1 + (1-e)^2 fdc + e(2-e) }.
inline double qber_assemble(double f0, double f1, double fdc, double q_gain,
                            double e) {
  const double num = e * (e - 1.0) * f0 + (2.0 + e * (e - 3.0)) * f1 +
                     (1.0 - e) * (1.0 - e) * fdc + e * (2.0 - e);
  return num / (2.0 * q_gain);
}

} // namespace detail

// Error rate at fixed polarization angle psi, by theta-quadrature of the
// f0 / f1 / fdc phase averages (the definition-level path).
inline double qber_psi(Interval itv, double psi, const SourceConfig& src,
                       const ChannelConfig& ch) {
  const double es = eta_sys(ch);
  const double th_l = theta_lambda(src);
  const double lo = (itv == Interval::signal) ? 0.0 : th_l;
  const double hi = (itv == Interval::signal) ? th_l : pi;
  const double w = hi - lo;
  const double c = std::cos(psi);

  // All three integrands are phrased through expm1 so their O(g) and O(g^2)
  // leading behaviour survives at small system transmittance, and the
  // absolute budget scales with them for the same reason as in gain_numeric.
  const double tol = 1e-13 * w *
                     std::max(-std::expm1(-es * 4.0 * src.mu_t()), 1e-300);
  const double f0 = integrate_value([&](double th) {
                      const double g = es * gamma(th, src);
                      return std::exp(-g) * std::expm1(0.5 * g * (1.0 + c));
                    }, lo, hi, tol, 1e-11) / w;
  const double f1 = integrate_value([&](double th) {
                      const double g = es * gamma(th, src);
                      return std::exp(-g) * std::expm1(0.5 * g * (1.0 - c));
                    }, lo, hi, tol, 1e-11) / w;
  const double fdc = integrate_value([&](double th) {
                       const double g = es * gamma(th, src);
                       return std::expm1(-g) - std::expm1(-0.5 * g * (1.0 - c)) -
                              std::expm1(-0.5 * g * (1.0 + c));
                     }, lo, hi, tol, 1e-11) / w;
  return detail::qber_assemble(f0, f1, fdc, gain_numeric(itv, src, ch),
                               ch.epsilon_B);
}

// Closed form of the same quantity at theta_lambda = pi/2: every phase
// average reduces to A_-/A_+ evaluated at the scaled intensities
// x(1 -/+ cos psi)/2 with x = eta_sys * zeta.
inline double qber_psi_closed(Interval itv, double psi, double zeta_val,
                              const ChannelConfig& ch) {
  const double x = eta_sys(ch) * zeta_val;
  const double c = std::cos(psi);
  // Deficit form d = 1 - A: the f-averages are differences of A values of
  // the same order, which cancel catastrophically when x << 1 but stay
  // fully accurate as differences of the O(x) deficits.
  const auto d = [&](double arg) {
    return (itv == Interval::signal) ? a_minus_deficit(arg)
                                     : a_plus_deficit(arg);
  };
  const double f0 = d(x) - d(0.5 * x * (1.0 - c));
  const double f1 = d(x) - d(0.5 * x * (1.0 + c));
  const double fdc = d(0.5 * x * (1.0 + c)) + d(0.5 * x * (1.0 - c)) - d(x);
  return detail::qber_assemble(f0, f1, fdc,
                               gain_closed_form(itv, zeta_val, ch),
                               ch.epsilon_B);
}

namespace detail {

// psi-average over the acceptance arc [0, pi/4 - omega] (the four arcs are
// congruent and E_psi is even in psi, so one half-arc average suffices).
template <class F>
inline double acceptance_average(F&& e_of_psi, double omega) {
  const double hw = pi / 4.0 - omega;
  if (!(hw > 0.0))
    throw config_error("qber_interval: omega must be < pi/4");
  return integrate_value(e_of_psi, 0.0, hw, 1e-13, 1e-11) / hw;
}

} // namespace detail

// Interval error rate: acceptance-arc average of qber_psi.  The quadrature
// of the definition-level integrals is authoritative; at theta_lambda = pi/2
// the closed-form path is evaluated as well and a disagreement beyond 1e-8
// is reported as a consistency failure.
inline double qber_interval(Interval itv, const SourceConfig& src,
                            const ChannelConfig& ch) {
  const double numeric = detail::acceptance_average(
      [&](double psi) { return qber_psi(itv, psi, src, ch); }, src.omega);
  const double th_l = theta_lambda(src);
  if (std::abs(th_l - pi / 2.0) <= 1e-12) {
    const double z = 2.0 * src.mu_t();
    const double closed = detail::acceptance_average(
        [&](double psi) { return qber_psi_closed(itv, psi, z, ch); },
        src.omega);
    if (std::abs(numeric - closed) > 1e-8)
      throw numeric_error(
          "qber_interval: closed form and quadrature disagree by " +
          std::to_string(std::abs(numeric - closed)) +
          " (> 1e-8 consistency threshold)");
  }
  return numeric;
}

// Diagonal POVM elements on a Fock input |n, m> (n photons toward the
// "0" detector, m toward "1"), with eta = eta_sys and dark count rate e.
struct ClickProbabilities {
  double p_vac = 0.0;
  double p_det0 = 0.0;
  double p_det1 = 0.0;
  double p_dc = 0.0;
};

inline ClickProbabilities click_probabilities(int n, int m,
                                              const ChannelConfig& ch) {
  if (n < 0 || m < 0)
    throw config_error("click_probabilities: photon numbers must be >= 0");
  const double eta = eta_sys(ch);
  const double e = ch.epsilon_B;
  const double f_vac = std::pow(1.0 - eta, n + m);
  const double f0 = (1.0 - std::pow(1.0 - eta, n)) * std::pow(1.0 - eta, m);
  const double f1 = std::pow(1.0 - eta, n) * (1.0 - std::pow(1.0 - eta, m));
  ClickProbabilities p;
  p.p_vac = (1.0 - e * (2.0 - e)) * f_vac;
  p.p_det0 = (1.0 - e) * e * f_vac + (1.0 - e) * f0;
  p.p_det1 = (1.0 - e) * e * f_vac + (1.0 - e) * f1;
  p.p_dc = 1.0 - p.p_vac - p.p_det0 - p.p_det1;
  return p;
}

// Full observed-statistics pipeline.  Uses the closed forms when
// theta_lambda = pi/2 (the default operating point; this is the optimizer's
// hot path) and the definition-level quadratures otherwise.  The two paths
// are tied together by qber_interval's consistency check and by tests.
inline ObservedStats observe(const SourceConfig& src, const ChannelConfig& ch) {
  const double th_l = theta_lambda(src);
  ObservedStats obs;
  if (std::abs(th_l - pi / 2.0) <= 1e-12) {
    const double z = 2.0 * src.mu_t();
    obs.q_signal = gain_closed_form(Interval::signal, z, ch);
    obs.q_decoy = gain_closed_form(Interval::decoy, z, ch);
    obs.e_signal = detail::acceptance_average(
        [&](double psi) { return qber_psi_closed(Interval::signal, psi, z, ch); },
        src.omega);
    obs.e_decoy = detail::acceptance_average(
        [&](double psi) { return qber_psi_closed(Interval::decoy, psi, z, ch); },
        src.omega);
  } else {
    obs.q_signal = gain_numeric(Interval::signal, src, ch);
    obs.q_decoy = gain_numeric(Interval::decoy, src, ch);
    obs.e_signal = detail::acceptance_average(
        [&](double psi) { return qber_psi(Interval::signal, psi, src, ch); },
        src.omega);
    obs.e_decoy = detail::acceptance_average(
        [&](double psi) { return qber_psi(Interval::decoy, psi, src, ch); },
        src.omega);
  }
  return obs;
}

} // namespace qkd

#endif
