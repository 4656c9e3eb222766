#pragma once

namespace qh::defaults {

inline constexpr double quadrature_tol = 1e-10;
inline constexpr double ode_tol = 1e-10;
inline constexpr double fd_step = 1e-4;

/// Contour trapezoid rule: successive doublings must agree to this.
inline constexpr double contour_tol = 1e-10;
inline constexpr int contour_min_samples = 16;
inline constexpr int contour_max_samples = 1 << 16;

inline constexpr int root_grid_cells = 1024;

}  // namespace qh::defaults
