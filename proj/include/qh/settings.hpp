#pragma once

#include <cmath>
#include <cstdlib>
#include <string>

#include "qh/errors.hpp"
#include "qh/nahm.hpp"
#include "qh/numerics/defaults.hpp"

namespace qh {

/// Run-wide tolerances. Defaults are the values the verification checks are
/// designed for; QH_TOL_QUAD, QH_TOL_ODE and QH_FD_STEP override them, and
/// command-line flags override the environment.
struct Settings {
  double quad_tol = defaults::quadrature_tol;
  double ode_tol = euler_flow_tol;
  double fd_step = 1e-3;

  FDScheme fd() const { return FDScheme{fd_step, 4, true}; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigurationError(std::string(name) + " must be positive and finite");
    };
    positive(quad_tol, "quadrature tolerance");
    positive(ode_tol, "ODE tolerance");
    positive(fd_step, "FD step");
  }

  static double parse_positive(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      throw ConfigurationError(what + ": not a number: '" + text + "'");
    }
    if (used != text.size()) throw ConfigurationError(what + ": trailing characters in '" + text + "'");
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigurationError(what + " must be positive and finite");
    return v;
  }

  static Settings from_env() {
    Settings s;
    if (const char* v = std::getenv("QH_TOL_QUAD")) s.quad_tol = parse_positive(v, "QH_TOL_QUAD");
    if (const char* v = std::getenv("QH_TOL_ODE")) s.ode_tol = parse_positive(v, "QH_TOL_ODE");
    if (const char* v = std::getenv("QH_FD_STEP")) s.fd_step = parse_positive(v, "QH_FD_STEP");
    return s;
  }
};

}  // namespace qh
