#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qh/errors.hpp"
#include "qh/numerics/defaults.hpp"

namespace qh {

using State = Eigen::VectorXd;

/// Accepted steps of an ODE solve with cubic Hermite dense output.
class Trajectory {
public:
  Trajectory() = default;
  Trajectory(std::vector<double> params, std::vector<State> states, std::vector<State> slopes)
      : params_(std::move(params)), states_(std::move(states)), slopes_(std::move(slopes)) {
    if (params_.size() < 2 || params_.size() != states_.size() || params_.size() != slopes_.size())
      throw ConfigurationError("Trajectory needs matching grids of length >= 2");
  }

  const std::vector<double>& params() const { return params_; }
  const std::vector<State>& states() const { return states_; }
  const std::vector<State>& slopes() const { return slopes_; }
  std::size_t size() const { return params_.size(); }
  double front() const { return params_.front(); }
  double back() const { return params_.back(); }

  State at(double t) const {
    const auto [k, u, h] = locate(t);
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    const double h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u);
    const double h11 = u * u * (u - 1);
    return h00 * states_[k] + h10 * h * slopes_[k] + h01 * states_[k + 1] + h11 * h * slopes_[k + 1];
  }

  State derivative(double t) const {
    const auto [k, u, h] = locate(t);
    const double d00 = 6 * u * (u - 1);
    const double d10 = (1 - u) * (1 - 3 * u);
    const double d01 = -d00;
    const double d11 = u * (3 * u - 2);
    return (d00 * states_[k] + d01 * states_[k + 1]) / h + d10 * slopes_[k] + d11 * slopes_[k + 1];
  }

private:
  struct Cell {
    std::size_t k;
    double u, h;
  };

  Cell locate(double t) const {
    if (params_.empty()) throw ConfigurationError("empty trajectory");
    const double span = params_.back() - params_.front();
    const double slack = 1e-12 * std::max(1.0, std::abs(span));
    if (t < params_.front() - slack || t > params_.back() + slack)
      throw DomainError("trajectory evaluated at " + std::to_string(t) + " outside [" +
                        std::to_string(params_.front()) + ", " + std::to_string(params_.back()) + "]");
    auto it = std::upper_bound(params_.begin(), params_.end(), t);
    std::size_t k = (it == params_.begin()) ? 0 : static_cast<std::size_t>(it - params_.begin()) - 1;
    k = std::min(k, params_.size() - 2);
    const double h = params_[k + 1] - params_[k];
    return {k, (t - params_[k]) / h, h};
  }

  std::vector<double> params_;
  std::vector<State> states_;
  std::vector<State> slopes_;
};

struct ODEOptions {
  double tol = defaults::ode_tol;
  double initial_step = 0.0;   // 0: chosen from the initial slope
  double max_step = 0.0;       // 0: unbounded
  long max_steps = 2'000'000;
  double blowup_norm = 1e12;
};

/// Dormand-Prince 5(4) with local error control (atol = rtol = tol). The span
/// may run backwards; the returned grid is always increasing.
template <class RHS>
Trajectory ode_solve(RHS&& rhs, const State& y0, double t0, double t1, const ODEOptions& opt = {}) {
  if (!(std::isfinite(t0) && std::isfinite(t1)) || t0 == t1)
    throw ConfigurationError("ode_solve: span must be finite and non-empty");
  if (!(opt.tol > 0.0)) throw ConfigurationError("ode_solve: tolerance must be positive");
  if (!y0.allFinite()) throw ConfigurationError("ode_solve: initial state not finite");

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double dir = (t1 > t0) ? 1.0 : -1.0;
  const double length = std::abs(t1 - t0);
  auto f = [&](double t, const State& y) -> State {
    State d = rhs(t, y);
    return d;
  };

  std::vector<double> ts{t0};
  std::vector<State> ys{y0};
  State k1 = f(t0, y0);
  std::vector<State> ks{k1};

  auto blowup = [&](const std::string& why, double t, const State& y, const State& dy) {
    const double ny = y.norm();
    const double ndy = dy.norm();
    const double est = (std::isfinite(ny) && ndy > 0.0 && std::isfinite(ndy)) ? t + dir * ny / ndy : t;
    throw SingularityError("ode_solve: " + why + " near t = " + std::to_string(t) +
                               " (singularity estimate " + std::to_string(est) + ")",
                           t, est);
  };

  double h = opt.initial_step;
  if (h <= 0.0) {
    const double scale = 1.0 + y0.norm();
    const double slope = k1.norm();
    h = (slope > 0.0) ? 0.01 * scale / slope : 0.01 * length;
    h = std::min(h, 0.01 * length);
  }
  double t = t0;
  State y = y0;
  long steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > opt.max_steps) throw NumericalFailure("ode_solve: step budget exhausted");
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
    bool last = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double min_step = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < min_step) blowup("step size underflow", t, y, k1);

    const double hs = dir * h;
    const State k2 = f(t + c2 * hs, y + hs * (a21 * k1));
    const State k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    const State k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const State k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const State k6 = f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const State ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = f(t + hs, ynew);
    const State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double enorm = 0.0;
    bool finite = ynew.allFinite() && err.allFinite();
    if (finite) {
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double sc = opt.tol * (1.0 + std::max(std::abs(y[i]), std::abs(ynew[i])));
        enorm = std::max(enorm, std::abs(err[i]) / sc);
      }
    }
    if (!finite || enorm > 1.0) {
      const double factor = finite ? std::max(0.1, 0.9 * std::pow(enorm, -0.2)) : 0.25;
      h *= factor;
      continue;
    }
    t = last ? t1 : t + hs;
    y = ynew;
    k1 = k7;
    ts.push_back(t);
    ys.push_back(y);
    ks.push_back(k1);
    if (y.norm() > opt.blowup_norm) blowup("solution blow-up", t, y, k1);
    const double factor = (enorm == 0.0) ? 5.0 : std::min(5.0, 0.9 * std::pow(enorm, -0.2));
    h *= factor;
  }

  if (dir < 0.0) {
    std::reverse(ts.begin(), ts.end());
    std::reverse(ys.begin(), ys.end());
    std::reverse(ks.begin(), ks.end());
  }
  return Trajectory(std::move(ts), std::move(ys), std::move(ks));
}

}  // namespace qh
