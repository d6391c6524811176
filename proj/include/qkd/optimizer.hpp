#ifndef QKD_OPTIMIZER_HPP
#define QKD_OPTIMIZER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "qkd/errors.hpp"
#include "qkd/key_rate.hpp"

namespace qkd {

enum class Variant { passive2, passive_inf, active_inf };

struct OptimizerOptions {
  int grid_n = 40;               // grid points per dimension
  bool theta_lambda_free = false; // passive2 only: optimize theta_lambda too
  int max_refine = 500;          // simplex iteration cap
  double param_tol = 1e-4;       // simplex diameter convergence threshold
  double rate_tol = 1e-12;       // rate spread convergence threshold
  double cutoff_tol_km = 0.02;   // bisection half-width for find_cutoff
};

struct OptimizationResult {
  double best_mu_t = 0.0;   // for active_inf this is the Poissonian mean mu
  double best_omega = 0.0;
  double best_theta_lambda = pi / 2.0;
  double best_rate = 0.0;
  long evaluations = 0;
  bool converged = true;
};

namespace detail {

struct Box {
  double lo, hi;
  double clamp(double x) const { return std::min(std::max(x, lo), hi); }
};

// Deterministic Nelder-Mead on the negated objective, projected onto the
// box.  No randomness; ties broken by insertion order, so re-runs are
// bit-identical.
template <std::size_t N>
struct Simplex {
  using Point = std::array<double, N>;

  static OptimizationResult run(const std::function<double(const Point&)>& rate,
                                const std::array<Box, N>& boxes, Point start,
                                const OptimizerOptions& opt, long& evals) {
    struct Vertex {
      Point x;
      double f; // negated rate
    };
    auto eval = [&](const Point& p) {
      ++evals;
      return -rate(p);
    };
    auto clamp = [&](Point p) {
      for (std::size_t i = 0; i < N; ++i) p[i] = boxes[i].clamp(p[i]);
      return p;
    };

    std::vector<Vertex> v;
    v.reserve(N + 1);
    start = clamp(start);
    v.push_back({start, eval(start)});
    for (std::size_t i = 0; i < N; ++i) {
      Point p = start;
      double step = 0.05 * (boxes[i].hi - boxes[i].lo);
      if (p[i] + step > boxes[i].hi) step = -step;
      p[i] += step;
      p = clamp(p);
      v.push_back({p, eval(p)});
    }

    bool converged = false;
    for (int iter = 0; iter < opt.max_refine; ++iter) {
      std::stable_sort(v.begin(), v.end(),
                       [](const Vertex& a, const Vertex& b) { return a.f < b.f; });

      double diam = 0.0;
      for (std::size_t k = 1; k <= N; ++k)
        for (std::size_t i = 0; i < N; ++i)
          diam = std::max(diam, std::abs(v[k].x[i] - v[0].x[i]));
      if (diam < opt.param_tol && std::abs(v[N].f - v[0].f) < opt.rate_tol) {
        converged = true;
        break;
      }

      Point centroid{};
      for (std::size_t k = 0; k < N; ++k)
        for (std::size_t i = 0; i < N; ++i) centroid[i] += v[k].x[i] / double(N);

      auto along = [&](double coef) {
        Point p;
        for (std::size_t i = 0; i < N; ++i)
          p[i] = centroid[i] + coef * (centroid[i] - v[N].x[i]);
        return clamp(p);
      };

      const Point xr = along(1.0); // reflection
      const double fr = eval(xr);
      if (fr < v[0].f) {
        const Point xe = along(2.0); // expansion
        const double fe = eval(xe);
        v[N] = (fe < fr) ? Vertex{xe, fe} : Vertex{xr, fr};
        continue;
      }
      if (fr < v[N - 1].f) {
        v[N] = {xr, fr};
        continue;
      }
      const Point xc = along(fr < v[N].f ? 0.5 : -0.5); // contraction
      const double fc = eval(xc);
      if (fc < std::min(fr, v[N].f)) {
        v[N] = {xc, fc};
        continue;
      }
      for (std::size_t k = 1; k <= N; ++k) { // shrink toward the best vertex
        for (std::size_t i = 0; i < N; ++i)
          v[k].x[i] = v[0].x[i] + 0.5 * (v[k].x[i] - v[0].x[i]);
        v[k].x = clamp(v[k].x);
        v[k].f = eval(v[k].x);
      }
    }

    std::stable_sort(v.begin(), v.end(),
                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    OptimizationResult res;
    res.best_rate = -v[0].f;
    res.converged = converged;
    res.best_mu_t = v[0].x[0];
    if (N >= 2) res.best_omega = v[0].x[1];
    if (N >= 3) res.best_theta_lambda = v[0].x[2];
    return res;
  }
};

// Rate evaluators per variant.  Invalid parameter combinations (estimation
// conditions violated, degenerate statistics) count as rate 0: they cannot
// produce a usable key, and the optimizer must remain total on the box.
inline double passive2_rate_pi2(double mu_t, double omega,
                                const ChannelConfig& ch) {
  if (!(mu_t > 0.0) || p_acc(omega) <= 0.0) return 0.0;
  SourceConfig src;
  src.t = 0.01;
  src.mu = mu_t / src.t;
  src.lambda_threshold = 2.0 * src.mu * (1.0 - src.t); // theta_lambda = pi/2
  src.omega = omega;
  try {
    return evaluate_passive2(src, ch, /*n_max=*/2).rate_total;
  } catch (const error&) {
    return 0.0;
  }
}

inline double passive2_rate_free(double mu_t, double omega,
                                 double theta_lambda_val,
                                 const ChannelConfig& ch) {
  if (!(mu_t > 0.0) || p_acc(omega) <= 0.0) return 0.0;
  if (!(theta_lambda_val > 1e-3 && theta_lambda_val < pi - 1e-3)) return 0.0;
  SourceConfig src;
  src.t = 0.01;
  src.mu = mu_t / src.t;
  src.lambda_threshold =
      2.0 * src.mu * (1.0 - src.t) * (1.0 + std::cos(theta_lambda_val));
  src.omega = omega;
  try {
    return evaluate_passive2(src, ch, /*n_max=*/2).rate_total;
  } catch (const error&) {
    return 0.0;
  }
}

inline double variant_rate_2d(Variant v, double mu_t, double omega,
                              const ChannelConfig& ch) {
  if (v == Variant::passive2) return passive2_rate_pi2(mu_t, omega, ch);
  if (!(mu_t > 0.0)) return 0.0;
  try {
    return asymptotic_passive_rate(2.0 * mu_t, omega, ch);
  } catch (const error&) {
    return 0.0;
  }
}

} // namespace detail

// Grid search followed by deterministic simplex refinement.  extra_seeds
// lets distance_sweep warm-start from the previous optimum; the returned
// best_rate is never below the best probed value.
inline OptimizationResult
optimize_at_distance(double d, ChannelConfig ch, Variant variant,
                     const OptimizerOptions& opt = {},
                     const std::vector<OptimizationResult>& extra_seeds = {}) {
  if (!(d >= 0.0)) throw config_error("optimize_at_distance: d must be >= 0");
  if (opt.grid_n < 2) throw config_error("optimize_at_distance: grid_n < 2");
  ch.distance = d;
  long evals = 0;

  if (variant == Variant::active_inf) {
    const detail::Box box{1e-6, 1.0};
    double best_mu = 0.5, best_rate = -1.0;
    for (int i = 1; i <= opt.grid_n; ++i) {
      const double mu = double(i) / opt.grid_n;
      ++evals;
      double r;
      try {
        r = active_infinite_decoy_rate(mu, ch);
      } catch (const error&) {
        r = 0.0;
      }
      if (r > best_rate) {
        best_rate = r;
        best_mu = mu;
      }
    }
    std::vector<std::array<double, 1>> seeds{{best_mu}};
    for (const auto& s : extra_seeds) seeds.push_back({s.best_mu_t});
    OptimizationResult best;
    best.best_rate = -1.0;
    for (const auto& s : seeds) {
      auto res = detail::Simplex<1>::run(
          [&](const std::array<double, 1>& p) {
            try {
              return active_infinite_decoy_rate(std::max(p[0], box.lo), ch);
            } catch (const error&) {
              return 0.0;
            }
          },
          {box}, s, opt, evals);
      if (res.best_rate > best.best_rate) best = res;
    }
    if (best_rate > best.best_rate) { // keep the grid value if refinement lost
      best.best_rate = best_rate;
      best.best_mu_t = best_mu;
    }
    best.best_omega = 0.0;
    best.best_theta_lambda = 0.0;
    best.evaluations = evals;
    return best;
  }

  const bool free_lambda =
      (variant == Variant::passive2) && opt.theta_lambda_free;
  const detail::Box mu_box{1e-6, 1.0};
  const detail::Box omega_box{0.0, pi / 4.0};
  const detail::Box lambda_box{0.05, pi - 0.05};

  if (!free_lambda) {
    double best_mu = 0.2, best_om = 0.3, best_rate = -1.0;
    for (int i = 1; i <= opt.grid_n; ++i) {
      const double mu_t = double(i) / opt.grid_n;
      for (int j = 0; j < opt.grid_n; ++j) {
        const double om = (pi / 4.0) * double(j) / opt.grid_n;
        ++evals;
        const double r = detail::variant_rate_2d(variant, mu_t, om, ch);
        if (r > best_rate) {
          best_rate = r;
          best_mu = mu_t;
          best_om = om;
        }
      }
    }
    std::vector<std::array<double, 2>> seeds{{best_mu, best_om}};
    for (const auto& s : extra_seeds) seeds.push_back({s.best_mu_t, s.best_omega});
    OptimizationResult best;
    best.best_rate = -1.0;
    for (const auto& s : seeds) {
      auto res = detail::Simplex<2>::run(
          [&](const std::array<double, 2>& p) {
            return detail::variant_rate_2d(variant, p[0], p[1], ch);
          },
          {mu_box, omega_box}, s, opt, evals);
      if (res.best_rate > best.best_rate) best = res;
    }
    if (best_rate > best.best_rate) {
      best.best_rate = best_rate;
      best.best_mu_t = best_mu;
      best.best_omega = best_om;
    }
    best.best_theta_lambda =
        (variant == Variant::passive2) ? pi / 2.0 : pi;
    best.evaluations = evals;
    return best;
  }

  // Three-parameter search (theta_lambda free).  The objective needs the
  // general quadrature path, so the grid is kept coarse and refinement does
  // the precision work.
  const int gn = std::min(opt.grid_n, 12);
  double best_mu = 0.2, best_om = 0.3, best_tl = pi / 2.0, best_rate = -1.0;
  for (int i = 1; i <= gn; ++i) {
    const double mu_t = double(i) / gn;
    for (int j = 0; j < gn; ++j) {
      const double om = (pi / 4.0) * double(j) / gn;
      for (int k = 1; k <= gn; ++k) {
        const double tl = lambda_box.lo +
                          (lambda_box.hi - lambda_box.lo) * double(k) / (gn + 1);
        ++evals;
        const double r = detail::passive2_rate_free(mu_t, om, tl, ch);
        if (r > best_rate) {
          best_rate = r;
          best_mu = mu_t;
          best_om = om;
          best_tl = tl;
        }
      }
    }
  }
  std::vector<std::array<double, 3>> seeds{{best_mu, best_om, best_tl}};
  for (const auto& s : extra_seeds)
    seeds.push_back({s.best_mu_t, s.best_omega, s.best_theta_lambda});
  OptimizationResult best;
  best.best_rate = -1.0;
  for (const auto& s : seeds) {
    auto res = detail::Simplex<3>::run(
        [&](const std::array<double, 3>& p) {
          return detail::passive2_rate_free(p[0], p[1], p[2], ch);
        },
        {mu_box, omega_box, lambda_box}, s, opt, evals);
    if (res.best_rate > best.best_rate) best = res;
  }
  if (best_rate > best.best_rate) {
    best.best_rate = best_rate;
    best.best_mu_t = best_mu;
    best.best_omega = best_om;
    best.best_theta_lambda = best_tl;
  }
  best.evaluations = evals;
  return best;
}

// Per-distance optimization over a sorted grid, warm-started from the
// previous distance's optimum.
inline std::vector<std::pair<double, OptimizationResult>>
distance_sweep(const std::vector<double>& d_grid, const ChannelConfig& ch,
               Variant variant, const OptimizerOptions& opt = {}) {
  std::vector<std::pair<double, OptimizationResult>> out;
  out.reserve(d_grid.size());
  std::vector<OptimizationResult> warm;
  for (double d : d_grid) {
    auto res = optimize_at_distance(d, ch, variant, opt, warm);
    warm.assign(1, res);
    out.emplace_back(d, res);
  }
  return out;
}

// Largest distance with optimized rate > 1e-15, by bisection.
inline double find_cutoff(const ChannelConfig& ch, Variant variant,
                          const OptimizerOptions& opt = {}) {
  constexpr double rate_floor = 1e-15;
  const auto rate_at = [&](double d) {
    return optimize_at_distance(d, ch, variant, opt).best_rate;
  };
  double lo = 0.0;
  if (!(rate_at(lo) > rate_floor))
    throw numeric_error("find_cutoff: rate not positive at d = 0");
  double hi = 200.0;
  while (rate_at(hi) > rate_floor) {
    hi += 50.0;
    if (hi > 400.0)
      throw numeric_error("find_cutoff: rate still positive at d = 400 km");
  }
  while (hi - lo > 2.0 * opt.cutoff_tol_km) {
    const double mid = 0.5 * (lo + hi);
    if (rate_at(mid) > rate_floor)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace qkd

#endif
