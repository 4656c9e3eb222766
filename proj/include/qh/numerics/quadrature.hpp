#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "qh/errors.hpp"
#include "qh/numerics/defaults.hpp"

namespace qh {

/// Upper-limit marker for integrals over [a, +inf).
inline constexpr double infinity = std::numeric_limits<double>::infinity();

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
  int intervals = 0;
};

namespace detail {

struct GKSegment {
  double a, b, value, error;
  bool operator<(const GKSegment& o) const { return error < o.error; }
};

// 7-point Gauss / 15-point Kronrod pair on [a, b]; returns the Kronrod value
// and |K15 - G7| as the error estimate.
template <class F>
GKSegment gauss_kronrod_15(F& f, double a, double b) {
  static constexpr std::array<double, 8> xk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = wk[7] * fc;
  double gauss = wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xk[static_cast<std::size_t>(j)];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += wk[static_cast<std::size_t>(j)] * sum;
    if (j % 2 == 1) gauss += wg[static_cast<std::size_t>(j / 2)] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

template <class F>
QuadratureResult adaptive_gauss_kronrod(F& f, double a, double b, double tol, int max_intervals) {
  std::priority_queue<GKSegment> queue;
  QuadratureResult out;
  auto first = gauss_kronrod_15(f, a, b);
  out.evaluations = 15;
  queue.push(first);
  double total = first.value;
  double error = first.error;
  while (error > tol * std::max(1.0, std::abs(total))) {
    if (static_cast<int>(queue.size()) >= max_intervals)
      throw NumericalFailure("integrate_adaptive: interval budget exhausted (error estimate " +
                             std::to_string(error) + ")");
    GKSegment worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b))
      throw NumericalFailure("integrate_adaptive: subdivision reached machine precision");
    auto left = gauss_kronrod_15(f, worst.a, mid);
    auto right = gauss_kronrod_15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
  }
  // Re-sum to shed the drift accumulated by the running updates.
  total = 0.0;
  error = 0.0;
  out.intervals = static_cast<int>(queue.size());
  while (!queue.empty()) {
    total += queue.top().value;
    error += queue.top().error;
    queue.pop();
  }
  if (!std::isfinite(total)) throw NumericalFailure("integrate_adaptive: non-finite integrand");
  out.value = total;
  out.error_estimate = error;
  return out;
}

// Decay exponent check for the tail of f on [a, inf): the integral converges
// only if |f| falls off faster than t^(-1-eps).
template <class F>
void check_tail_decay(F& f, double a) {
  constexpr double eps = 0.05;
  const double base = 1.0 + std::abs(a);
  double prev_t = 0.0;
  double prev_f = 0.0;
  double worst_slope = -std::numeric_limits<double>::infinity();
  bool have_prev = false;
  for (int k = 6; k <= 12; k += 2) {
    const double t = a + base * std::pow(10.0, k);
    const double v = std::abs(f(t));
    if (!std::isfinite(v)) throw DivergenceError("integrate_adaptive: integrand not finite in the tail");
    if (v == 0.0) {
      have_prev = false;
      continue;
    }
    if (have_prev) {
      const double slope = std::log(v / prev_f) / std::log(t / prev_t);
      worst_slope = std::max(worst_slope, slope);
    }
    prev_t = t;
    prev_f = v;
    have_prev = true;
  }
  if (worst_slope > -1.0 - eps)
    throw DivergenceError("integrate_adaptive: integrand decays like t^" + std::to_string(worst_slope) +
                          " at infinity; integral diverges");
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b], b may be `infinity`.
///
/// Both endpoints are regularized by substitution, so integrable inverse
/// square-root singularities at a or b are handled: on a finite interval
/// x = a + (b-a) u^2 (3 - 2u); on [a, inf) t = a + ((1-u)/u)^2, which also
/// absorbs a t^(-3/2) tail. f is never evaluated at an endpoint.
template <class F>
QuadratureResult integrate_adaptive_detailed(F&& f, double a, double b,
                                             double tol = defaults::quadrature_tol,
                                             int max_intervals = 4000) {
  if (!std::isfinite(a)) throw ConfigurationError("integrate_adaptive: lower limit must be finite");
  if (b == infinity) {
    detail::check_tail_decay(f, a);
    auto g = [&](double u) {
      const double s = (1.0 - u) / u;
      const double jac = 2.0 * (1.0 - u) / (u * u * u);
      const double v = f(a + s * s);
      return v == 0.0 ? 0.0 : v * jac;
    };
    return detail::adaptive_gauss_kronrod(g, 0.0, 1.0, tol, max_intervals);
  }
  if (!std::isfinite(b)) throw ConfigurationError("integrate_adaptive: upper limit must be finite or +infinity");
  if (a == b) return {};
  const double width = b - a;
  auto g = [&](double u) {
    const double x = a + width * u * u * (3.0 - 2.0 * u);
    const double jac = 6.0 * width * u * (1.0 - u);
    const double v = f(x);
    return v == 0.0 ? 0.0 : v * jac;
  };
  return detail::adaptive_gauss_kronrod(g, 0.0, 1.0, tol, max_intervals);
}

template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = defaults::quadrature_tol) {
  return integrate_adaptive_detailed(std::forward<F>(f), a, b, tol).value;
}

}  // namespace qh
