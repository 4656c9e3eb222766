#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qh/errors.hpp"
#include "qh/numerics/defaults.hpp"

namespace qh {

using cplx = std::complex<double>;

enum class Orientation { counterclockwise, clockwise };

/// Circle |lambda - center| = radius traversed with the given orientation.
/// `samples` is the starting node count for the doubling trapezoid rule.
struct Contour {
  cplx center{0.0, 0.0};
  double radius = 1.0;
  int samples = defaults::contour_min_samples;
  Orientation orientation = Orientation::counterclockwise;

  cplx point(double angle) const { return center + std::polar(radius, angle); }

  void validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw ConfigurationError("contour radius must be positive and finite");
    if (samples < defaults::contour_min_samples)
      throw ConfigurationError("contour needs at least " + std::to_string(defaults::contour_min_samples) +
                               " samples");
    if (!std::isfinite(center.real()) || !std::isfinite(center.imag()))
      throw ConfigurationError("contour center must be finite");
  }
};

struct ContourResult {
  cplx value{0.0, 0.0};
  int samples = 0;
  double last_change = 0.0;
};

/// Trapezoid rule on the circle with node doubling. The rule is spectrally
/// accurate for integrands analytic on an annulus around the contour; the
/// previous nodes are reused at every doubling.
template <class G>
ContourResult contour_integral_detailed(G&& g, const Contour& c, double tol = defaults::contour_tol,
                                        int max_samples = defaults::contour_max_samples) {
  c.validate();
  const double two_pi = 2.0 * std::numbers::pi;
  auto term = [&](double angle) -> cplx {
    const cplx e = std::polar(1.0, angle);
    const cplx lambda = c.center + c.radius * e;
    const cplx v = g(lambda);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalFailure("contour integrand not finite at lambda = (" + std::to_string(lambda.real()) + ", " +
                             std::to_string(lambda.imag()) + ")");
    return v * cplx(0.0, c.radius) * e;
  };

  int m = c.samples;
  cplx sum{0.0, 0.0};
  for (int k = 0; k < m; ++k) sum += term(two_pi * k / m);
  cplx current = sum * (two_pi / m);

  ContourResult out;
  while (true) {
    if (2 * m > max_samples)
      throw NumericalFailure("contour_integral: no convergence with " + std::to_string(m) + " nodes");
    for (int k = 0; k < m; ++k) sum += term(two_pi * (2 * k + 1) / (2.0 * m));
    m *= 2;
    const cplx next = sum * (two_pi / m);
    const double change = std::abs(next - current);
    current = next;
    if (change <= tol * std::max(1.0, std::abs(current))) {
      out.last_change = change;
      break;
    }
  }
  out.value = (c.orientation == Orientation::clockwise) ? -current : current;
  out.samples = m;
  return out;
}

template <class G>
cplx contour_integral(G&& g, const Contour& c, double tol = defaults::contour_tol) {
  return contour_integral_detailed(std::forward<G>(g), c, tol).value;
}

}  // namespace qh
