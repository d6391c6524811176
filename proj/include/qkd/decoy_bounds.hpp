#ifndef QKD_DECOY_BOUNDS_HPP
#define QKD_DECOY_BOUNDS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "qkd/detection_model.hpp"
#include "qkd/errors.hpp"
#include "qkd/photon_statistics.hpp"

namespace qkd {

// e0 is the error rate of background events: dark counts are random, so 1/2.
inline constexpr double e0_background = 0.5;

// Bounds produced by the two-interval linear estimation.
struct DecoyBounds {
  double y0_lower = 0.0;
  double y0_upper = 0.0;
  double y1_lower = 0.0;
  double e1_upper = 0.0;
  double combined_signal = 0.0; // lower bound on p1^s Y1 + p0^s Y0
  double combined_decoy = 0.0;  // lower bound on p1^d Y1 + p0^d Y0
  // Non-empty when a bound had to be clamped into its physical range or the
  // single-photon term was zeroed; signals model mismatch, surfaced by the
  // CLI but ignored by the formulas themselves.
  std::vector<std::string> notes;
};

namespace detail {

struct PnPair {
  double p0s, p1s, p2s, p0d, p1d, p2d;
};

inline PnPair first_three(const PhotonStats& st) {
  if (st.n_max < 2 || st.p_signal.size() < 3 || st.p_decoy.size() < 3)
    throw config_error("decoy bounds need photon statistics up to n = 2");
  return {st.p_signal[0], st.p_signal[1], st.p_signal[2],
          st.p_decoy[0],  st.p_decoy[1],  st.p_decoy[2]};
}

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

} // namespace detail

// Validity conditions of the linear estimation.  The bound formulas below
// come from eliminating yields between the two gain equations
// Q^i = sum_n p_n^i Y_n; each elimination is a valid one-sided bound only if
// the 2x2 determinants p_a^d p_b^s - p_a^s p_b^d for (a,b) in
// {(2,1),(1,0),(2,0)} share one strict sign and the likelihood ratios
// r_n = p_n^s / p_n^d are strictly monotone in the matching direction
// (the neglected higher-order terms then all push the bound the safe way),
// and if the Y0-coefficient of the combined bound keeps the sign that makes
// substituting Y0^U conservative.  Throws numeric_error on any violation.
inline void check_conditions(const PhotonStats& st) {
  const auto p = detail::first_three(st);

  const double den21 = p.p2d * p.p1s - p.p2s * p.p1d;
  const double den10 = p.p1d * p.p0s - p.p1s * p.p0d;
  const double den20 = p.p2d * p.p0s - p.p2s * p.p0d;
  const double scale21 = p.p2d * p.p1s + p.p2s * p.p1d;
  const double scale10 = p.p1d * p.p0s + p.p1s * p.p0d;
  const double scale20 = p.p2d * p.p0s + p.p2s * p.p0d;

  if (std::abs(den21) <= 1e-14 * scale21 || std::abs(den10) <= 1e-14 * scale10 ||
      std::abs(den20) <= 1e-14 * scale20)
    throw numeric_error(
        "decoy estimation conditions: degenerate denominator (the two "
        "intervals' photon statistics are not distinguishable)");

  const int s21 = detail::sign_of(den21);
  const int s10 = detail::sign_of(den10);
  const int s20 = detail::sign_of(den20);
  if (s21 != s10 || s21 != s20)
    throw numeric_error(
        "decoy estimation conditions: determinant signs disagree (den21=" +
        std::to_string(den21) + ", den10=" + std::to_string(den10) +
        ", den20=" + std::to_string(den20) + ")");

  // Likelihood-ratio monotonicity over the full recorded range.  den10 < 0
  // means r_1 > r_0, i.e. the signal interval is the brighter one and r_n
  // must increase with n; den10 > 0 is the consistently relabeled case.
  const int dir = -s10;
  double prev_ratio = -1.0;
  bool have_prev = false;
  for (int n = 0; n <= st.n_max; ++n) {
    const double ps = st.p_signal[n];
    const double pd = st.p_decoy[n];
    if (pd < 1e-300 || ps < 1e-300) break; // underflow region: no information
    const double r = ps / pd;
    if (have_prev) {
      const bool ok = (dir > 0) ? (r > prev_ratio) : (r < prev_ratio);
      if (!ok)
        throw numeric_error(
            "decoy estimation conditions: likelihood ratio p_n^s/p_n^d not "
            "strictly monotone at n = " + std::to_string(n));
    }
    prev_ratio = r;
    have_prev = true;
  }

  // Combined-bound Y0 coefficient must make the Y0^U substitution safe:
  // coefficient * (Y0^U - Y0) <= 0 requires p0^i - p1^i den20/den21 <= 0.
  const double ratio20_21 = den20 / den21;
  const double coeff_s = p.p0s - p.p1s * ratio20_21;
  const double coeff_d = p.p0d - p.p1d * ratio20_21;
  if (coeff_s > 0.0 || coeff_d > 0.0)
    throw numeric_error(
        "decoy estimation conditions: combined-bound Y0 coefficient positive "
        "(signal " + std::to_string(coeff_s) + ", decoy " +
        std::to_string(coeff_d) + "); Y0 upper bound substitution unsafe");
}

// Y0 <= min{ E^d Q^d / (p0^d e0), E^s Q^s / (p0^s e0), 1 }: all background
// events are errors at rate e0, so the error volume caps the vacuum yield.
inline double y0_upper(const PhotonStats& st, const ObservedStats& obs) {
  const auto p = detail::first_three(st);
  if (!(p.p0s > 0.0 && p.p0d > 0.0))
    throw numeric_error("y0_upper: vacuum probabilities must be positive");
  const double from_d = obs.e_decoy * obs.q_decoy / (p.p0d * e0_background);
  const double from_s = obs.e_signal * obs.q_signal / (p.p0s * e0_background);
  return std::min({from_d, from_s, 1.0});
}

// Y0 >= max{ (p1^d Q^s - p1^s Q^d) / (p1^d p0^s - p1^s p0^d), 0 }.
inline double y0_lower(const PhotonStats& st, const ObservedStats& obs) {
  const auto p = detail::first_three(st);
  const double den = p.p1d * p.p0s - p.p1s * p.p0d;
  if (std::abs(den) <= 1e-14 * (p.p1d * p.p0s + p.p1s * p.p0d))
    throw numeric_error("y0_lower: degenerate denominator");
  return std::max((p.p1d * obs.q_signal - p.p1s * obs.q_decoy) / den, 0.0);
}

// Y1 >= max{ [p2^d Q^s - p2^s Q^d - (p2^d p0^s - p2^s p0^d) Y0^U] /
//            (p2^d p1^s - p2^s p1^d), 0 }.
inline double y1_lower(const PhotonStats& st, const ObservedStats& obs) {
  const auto p = detail::first_three(st);
  const double den = p.p2d * p.p1s - p.p2s * p.p1d;
  if (std::abs(den) <= 1e-14 * (p.p2d * p.p1s + p.p2s * p.p1d))
    throw numeric_error("y1_lower: degenerate denominator");
  const double y0u = y0_upper(st, obs);
  const double num = p.p2d * obs.q_signal - p.p2s * obs.q_decoy -
                     (p.p2d * p.p0s - p.p2s * p.p0d) * y0u;
  return std::max(num / den, 0.0);
}

// e1 <= min of the three estimators, clamped to [0,1].  Requires y1L > 0;
// y1L = 0 is an estimation failure (single photons earn no key) and is
// handled by build_bounds, not here.
inline double e1_upper(const PhotonStats& st, const ObservedStats& obs,
                       double y0L, double y1L) {
  if (!(y1L > 0.0))
    throw numeric_error("e1_upper: requires y1_lower > 0 (estimation failed; "
                        "single-photon credit is zero)");
  const auto p = detail::first_three(st);
  const double den10 = p.p1d * p.p0s - p.p1s * p.p0d;
  const double eq = obs.e_decoy * obs.q_decoy;
  const double es = obs.e_signal * obs.q_signal;
  const double c1 = (eq - p.p0d * y0L * e0_background) / (p.p1d * y1L);
  const double c2 = (es - p.p0s * y0L * e0_background) / (p.p1s * y1L);
  const double c3 = (p.p0s * eq - p.p0d * es) / (den10 * y1L);
  const double e1 = std::min({c1, c2, c3});
  return std::min(std::max(e1, 0.0), 1.0);
}

// Lower bound on p1^i Y1 + p0^i Y0 (the useful single-photon + vacuum key
// volume) obtained by substituting the Y1 elimination and Y0 <= Y0^U.
inline double combined_lower(Interval itv, const PhotonStats& st,
                             const ObservedStats& obs, double y0U) {
  const auto p = detail::first_three(st);
  const double den21 = p.p2d * p.p1s - p.p2s * p.p1d;
  if (std::abs(den21) <= 1e-14 * (p.p2d * p.p1s + p.p2s * p.p1d))
    throw numeric_error("combined_lower: degenerate denominator");
  const double den20 = p.p2d * p.p0s - p.p2s * p.p0d;
  const double p0i = (itv == Interval::signal) ? p.p0s : p.p0d;
  const double p1i = (itv == Interval::signal) ? p.p1s : p.p1d;
  const double t = p.p2d * obs.q_signal - p.p2s * obs.q_decoy;
  const double v = p1i * t / den21 + (p0i - p1i * den20 / den21) * y0U;
  return std::max(v, 0.0);
}

// Orchestrates the full estimation with validity checks and range clamping.
inline DecoyBounds build_bounds(const PhotonStats& st,
                                const ObservedStats& obs) {
  check_conditions(st);
  DecoyBounds b;
  b.y0_upper = y0_upper(st, obs);
  b.y0_lower = y0_lower(st, obs);
  if (b.y0_lower > b.y0_upper) {
    b.notes.push_back("y0_lower exceeded y0_upper; clamped to y0_upper");
    b.y0_lower = b.y0_upper;
  }
  b.y1_lower = y1_lower(st, obs);
  if (b.y1_lower > 1.0) {
    b.notes.push_back("y1_lower exceeded 1; clamped");
    b.y1_lower = 1.0;
  }
  if (b.y1_lower > 0.0) {
    b.e1_upper = e1_upper(st, obs, b.y0_lower, b.y1_lower);
  } else {
    // No usable single-photon yield: report e1 = 1/2 so 1 - H(e1) = 0 and
    // the rate formula credits nothing to single photons.
    b.e1_upper = 0.5;
    b.notes.push_back("y1_lower = 0: single-photon credit zeroed");
  }
  b.combined_signal = combined_lower(Interval::signal, st, obs, b.y0_upper);
  b.combined_decoy = combined_lower(Interval::decoy, st, obs, b.y0_upper);
  return b;
}

} // namespace qkd

#endif
