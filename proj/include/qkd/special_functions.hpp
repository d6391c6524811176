#ifndef QKD_SPECIAL_FUNCTIONS_HPP
#define QKD_SPECIAL_FUNCTIONS_HPP

#include <cmath>
#include <limits>
#include <string>

#include "qkd/errors.hpp"

namespace qkd {

struct SpecialFnResult {
  double value = 0.0;
  double est_abs_error = 0.0; // truncation tail bound plus rounding estimate
};

namespace detail {

inline void check_order(int q, const char* fn) {
  if (q < -1 || q > 2)
    throw numeric_error(std::string(fn) + ": order " + std::to_string(q) +
                        " outside supported set {-1, 0, 1, 2}");
}

inline void check_argument(double z, const char* fn) {
  if (!(z >= 0.0 && z <= 20.0))
    throw numeric_error(std::string(fn) + ": argument " + std::to_string(z) +
                        " outside supported range [0, 20]");
}

// Shared series driver.  Terms follow t_{k+1} = t_k * (z/2)^2 / d_k with
// d_k supplied by the caller via two offsets: d_k = (k + u)(k + v).
// Stops once |term| < 1e-16 |sum|; hard cap of 200 terms.
inline SpecialFnResult sum_series(double t0, double half_z_sq, double u,
                                  double v, const char* fn) {
  double sum = t0;
  double term = t0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int k = 0; k < 200; ++k) {
    const double ratio = half_z_sq / ((k + u) * (k + v));
    term *= ratio;
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) {
      // Geometric tail bound (ratio shrinks with k) plus accumulated rounding.
      const double next_ratio = half_z_sq / ((k + 1 + u) * (k + 1 + v));
      const double tail = (next_ratio < 1.0)
                              ? std::abs(term) * next_ratio / (1.0 - next_ratio)
                              : std::abs(term);
      return {sum, tail + 4.0 * (k + 2) * eps * std::abs(sum)};
    }
  }
  throw numeric_error(std::string(fn) +
                      ": series failed to converge within 200 terms");
}

} // namespace detail

// Modified Bessel function of the first kind I_q(z) by direct power series,
// for q in {-1, 0, 1, 2} and z in [0, 20].  I_{-1} = I_1.
inline SpecialFnResult bessel_I_result(int q, double z) {
  detail::check_order(q, "bessel_I");
  detail::check_argument(z, "bessel_I");
  const int qa = (q == -1) ? 1 : q;
  if (z == 0.0) return {qa == 0 ? 1.0 : 0.0, 0.0};
  const double half_z = 0.5 * z;
  const double t0 = std::pow(half_z, qa) / std::tgamma(qa + 1.0);
  return detail::sum_series(t0, half_z * half_z, 1.0, qa + 1.0, "bessel_I");
}

// Modified Struve function L_q(z) by direct power series, for q in
// {-1, 0, 1, 2} and z in [0, 20].  Note L_{-1}(0) = 2/pi.
inline SpecialFnResult struve_L_result(int q, double z) {
  detail::check_order(q, "struve_L");
  detail::check_argument(z, "struve_L");
  const double half_z = 0.5 * z;
  const double t0 = std::pow(half_z, q + 1.0) /
                    (std::tgamma(1.5) * std::tgamma(q + 1.5));
  if (z == 0.0) return {q == -1 ? t0 : 0.0, 0.0};
  return detail::sum_series(t0, half_z * half_z, 1.5, q + 1.5, "struve_L");
}

inline double bessel_I(int q, double z) { return bessel_I_result(q, z).value; }
inline double struve_L(int q, double z) { return struve_L_result(q, z).value; }

// A_{+/-}(x) = e^{-x} [ I_0(x) +/- L_0(x) ].  sign must be '+' or '-'.
// Both are probabilities of half-range phase averages, hence in (0, 1].
inline double a_plus_minus(char sign, double x) {
  if (sign != '+' && sign != '-')
    throw numeric_error("a_plus_minus: sign must be '+' or '-'");
  detail::check_argument(x, "a_plus_minus");
  const double i0 = bessel_I(0, x);
  const double l0 = struve_L(0, x);
  const double combo = (sign == '+') ? i0 + l0 : i0 - l0;
  return std::exp(-x) * combo;
}

inline double a_plus(double x) { return a_plus_minus('+', x); }
inline double a_minus(double x) { return a_plus_minus('-', x); }

// 1 - e^{-x} I_0(x), the no-click deficit of the full-range phase-average
// kernel, computed without cancellation: for x << 1 the deficit is O(x)
// while the kernel itself sits within rounding of 1.
inline double i0_kernel_deficit(double x) {
  detail::check_argument(x, "i0_kernel_deficit");
  if (x == 0.0) return 0.0;
  const double hs = 0.25 * x * x; // (x/2)^2
  // I_0(x) - 1 = sum_{k>=1} (x/2)^{2k} / (k!)^2: the same driver, seeded at
  // the k = 1 term so the leading 1 never enters the sum.
  const double i0_tail =
      detail::sum_series(hs, hs, 2.0, 2.0, "i0_kernel_deficit").value;
  return -std::expm1(-x) - std::exp(-x) * i0_tail;
}

// Deficit form 1 - A_{+/-}(x); same rationale as i0_kernel_deficit.  The
// detection statistics at long distances live entirely in the x << 1 regime
// where working with A directly would lose all relative accuracy.
inline double a_deficit(char sign, double x) {
  if (sign != '+' && sign != '-')
    throw numeric_error("a_deficit: sign must be '+' or '-'");
  const double base = i0_kernel_deficit(x);
  if (x == 0.0) return 0.0;
  const double lterm = std::exp(-x) * struve_L(0, x);
  return (sign == '+') ? base - lterm : base + lterm;
}

inline double a_plus_deficit(double x) { return a_deficit('+', x); }
inline double a_minus_deficit(double x) { return a_deficit('-', x); }

} // namespace qkd

#endif
