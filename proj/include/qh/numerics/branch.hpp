#pragma once

#include <complex>

namespace qh {

/// The square root of z nearest to `reference`. Used to continue a branch
/// along a path instead of trusting the principal cut.
inline std::complex<double> continuous_sqrt(std::complex<double> z, std::complex<double> reference) {
  const std::complex<double> s = std::sqrt(z);
  return (std::abs(s - reference) <= std::abs(s + reference)) ? s : -s;
}

/// Tracks sqrt(z(t)) for t from 0 to 1 in `steps` increments, starting on the
/// branch nearest `start_reference`, and returns the value at t = 1.
template <class Z>
std::complex<double> sqrt_along_path(Z&& z, std::complex<double> start_reference, int steps = 256) {
  std::complex<double> w = continuous_sqrt(z(0.0), start_reference);
  for (int k = 1; k <= steps; ++k) w = continuous_sqrt(z(static_cast<double>(k) / steps), w);
  return w;
}

}  // namespace qh
