#ifndef QKD_QUADRATURE_HPP
#define QKD_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "qkd/errors.hpp"

namespace qkd {

struct quad_result {
  double value = 0.0;
  double abs_error = 0.0; // accumulated |K15 - G7| over accepted intervals
  long evaluations = 0;   // integrand evaluations performed
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].  Nodes are symmetric;
// only the non-negative half is tabulated.  kr_nodes[i] with even index i
// are the embedded Gauss-7 abscissae (weights gauss_w).
inline constexpr std::array<double, 8> kr_nodes = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kr_weights = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

// One G7/K15 pass over [a, b]; returns (kronrod, |kronrod - gauss|).
template <class F>
inline void gk15(F& f, double a, double b, double& kronrod, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double resk = kr_weights[7] * f(c);
  double resg = gauss_weights[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const double x = h * kr_nodes[i];
    const double pair = f(c - x) + f(c + x);
    resk += kr_weights[i] * pair;
    if (i % 2 == 1) resg += gauss_weights[i / 2] * pair;
  }
  kronrod = resk * h;
  err = std::abs((resk - resg) * h);
}

} // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a, b].  Intervals are
// bisected until each local error estimate fits within its proportional
// share of the combined tolerance max(abs_tol, rel_tol * |I|).  Throws
// numeric_error (with the achieved error estimate in the message) if the
// budget cannot be met within max_depth bisection levels.
template <class F>
inline quad_result integrate(F&& f, double a, double b,
                             double abs_tol = 1e-12, double rel_tol = 1e-10,
                             int max_depth = 48) {
  quad_result out;
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw numeric_error("quadrature: non-finite integration bounds");
  if (a == b) return out;

  struct seg {
    double a, b, value, err;
    int depth;
  };

  double whole, whole_err;
  detail::gk15(f, a, b, whole, whole_err);
  out.evaluations = 15;

  std::vector<seg> work{{a, b, whole, whole_err, 0}};
  const double span = std::abs(b - a);
  // Running sums over accepted ("done") and queued segments, maintained
  // incrementally; the queued part feeds the relative criterion.
  double done_value = 0.0, done_err = 0.0, work_value = whole;

  while (!work.empty()) {
    seg s = work.back();
    work.pop_back();
    work_value -= s.value;

    const double total = done_value + work_value + s.value;
    const double tol = std::max(abs_tol, rel_tol * std::abs(total));
    const double local_tol = tol * (std::abs(s.b - s.a) / span);

    if (s.err <= local_tol || s.err <= 0.0) {
      done_value += s.value;
      done_err += s.err;
      continue;
    }
    if (s.depth >= max_depth) {
      double achieved = done_err + s.err;
      for (const seg& q : work) achieved += q.err;
      char msg[160];
      std::snprintf(msg, sizeof(msg),
                    "quadrature: failed to converge (achieved error estimate "
                    "%.3e, requested abs %.3e)",
                    achieved, abs_tol);
      throw numeric_error(msg);
    }

    const double m = 0.5 * (s.a + s.b);
    seg left{s.a, m, 0, 0, s.depth + 1};
    seg right{m, s.b, 0, 0, s.depth + 1};
    detail::gk15(f, left.a, left.b, left.value, left.err);
    detail::gk15(f, right.a, right.b, right.value, right.err);
    out.evaluations += 30;
    work_value += left.value + right.value;
    work.push_back(left);
    work.push_back(right);
  }

  out.value = done_value;
  out.abs_error = done_err;
  return out;
}

// Convenience wrapper returning just the value.
template <class F>
inline double integrate_value(F&& f, double a, double b,
                              double abs_tol = 1e-12,
                              double rel_tol = 1e-10) {
  return integrate(static_cast<F&&>(f), a, b, abs_tol, rel_tol).value;
}

} // namespace qkd

#endif
