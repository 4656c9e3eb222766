#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

#include "qh/errors.hpp"
#include "qh/numerics/defaults.hpp"

namespace qh {

/// Central-difference scheme. With `richardson` the step is halved once and
/// the two estimates are combined to cancel the leading error term.
struct FDScheme {
  double step = defaults::fd_step;
  int order = 2;
  bool richardson = true;

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigurationError("FD step must be positive");
    if (order != 2 && order != 4) throw ConfigurationError("FD order must be 2 or 4");
  }
};

template <class T>
struct FDDerivatives {
  Eigen::Matrix<T, Eigen::Dynamic, 1> gradient;
  T laplacian{};
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> hessian;
};

namespace detail {

inline std::string format_point(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os.precision(17);
  os << "FD stencil at (";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

template <class F>
auto eval_at(F& f, const Eigen::VectorXd& x) {
  try {
    return f(x);
  } catch (Error& e) {
    e.add_context(format_point(x));
    throw;
  }
}

// Weights for first and second derivative stencils at offsets -2..2.
inline constexpr double d1_o2[5] = {0.0, -0.5, 0.0, 0.5, 0.0};
inline constexpr double d1_o4[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
inline constexpr double d2_o2[5] = {0.0, 1.0, -2.0, 1.0, 0.0};
inline constexpr double d2_o4[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

template <class F>
auto raw_derivatives(F& f, const Eigen::VectorXd& x, double h, int order, bool want_mixed) {
  using T = std::decay_t<decltype(f(x))>;
  const Eigen::Index n = x.size();
  const double* w1 = order == 2 ? d1_o2 : d1_o4;
  const double* w2 = order == 2 ? d2_o2 : d2_o4;
  const int reach = order / 2;

  FDDerivatives<T> out;
  out.gradient = Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(n);
  out.hessian = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  const T f0 = eval_at(f, x);

  for (Eigen::Index i = 0; i < n; ++i) {
    T g{};
    T d2 = w2[2] * f0;
    for (int k = -reach; k <= reach; ++k) {
      if (k == 0) continue;
      Eigen::VectorXd y = x;
      y[i] += k * h;
      const T v = eval_at(f, y);
      g += w1[k + 2] * v;
      d2 += w2[k + 2] * v;
    }
    out.gradient[i] = g / h;
    out.hessian(i, i) = d2 / (h * h);
  }

  if (want_mixed) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        T acc{};
        for (int a = -reach; a <= reach; ++a) {
          if (a == 0) continue;
          for (int b = -reach; b <= reach; ++b) {
            if (b == 0) continue;
            Eigen::VectorXd y = x;
            y[i] += a * h;
            y[j] += b * h;
            acc += (w1[a + 2] * w1[b + 2]) * eval_at(f, y);
          }
        }
        out.hessian(i, j) = acc / (h * h);
        out.hessian(j, i) = out.hessian(i, j);
      }
    }
  }
  out.laplacian = out.hessian.trace();
  return out;
}

template <class F>
auto derivatives(F& f, const Eigen::VectorXd& x, const FDScheme& s, bool want_mixed) {
  s.validate();
  auto coarse = raw_derivatives(f, x, s.step, s.order, want_mixed);
  if (!s.richardson) return coarse;
  auto fine = raw_derivatives(f, x, 0.5 * s.step, s.order, want_mixed);
  const double p = std::pow(2.0, s.order);
  decltype(coarse) out;
  out.gradient = (p * fine.gradient - coarse.gradient) / (p - 1.0);
  out.hessian = (p * fine.hessian - coarse.hessian) / (p - 1.0);
  out.laplacian = out.hessian.trace();
  return out;
}

}  // namespace detail

/// Gradient, Hessian and Laplacian of a real or complex field on R^n.
/// Errors raised by the field are rethrown with the stencil point attached.
template <class F>
auto fd_derivatives(F&& field, const Eigen::VectorXd& x, const FDScheme& scheme = {}) {
  return detail::derivatives(field, x, scheme, true);
}

/// Gradient and Laplacian only; the Hessian carries the diagonal.
template <class F>
auto fd_laplacian(F&& field, const Eigen::VectorXd& x, const FDScheme& scheme = {}) {
  return detail::derivatives(field, x, scheme, false);
}

template <class F>
auto fd_gradient(F&& field, const Eigen::VectorXd& x, const FDScheme& scheme = {}) {
  return detail::derivatives(field, x, scheme, false).gradient;
}

/// Partial derivative along axis i of a field with any vector-space value
/// (scalar, complex, Eigen matrix).
template <class F>
auto fd_partial(F&& field, const Eigen::VectorXd& x, Eigen::Index i, const FDScheme& scheme = {}) {
  scheme.validate();
  using T = std::decay_t<decltype(field(x))>;
  const double* w = scheme.order == 2 ? detail::d1_o2 : detail::d1_o4;
  const int reach = scheme.order / 2;
  auto raw = [&](double h) {
    std::optional<T> acc;
    for (int k = -reach; k <= reach; ++k) {
      if (k == 0) continue;
      Eigen::VectorXd y = x;
      y[i] += k * h;
      const T term = T(w[k + 2] * detail::eval_at(field, y));
      if (acc)
        *acc += term;
      else
        acc = term;
    }
    return T(*acc / h);
  };
  const T coarse = raw(scheme.step);
  if (!scheme.richardson) return coarse;
  const double p = std::pow(2.0, scheme.order);
  return T((p * raw(0.5 * scheme.step) - coarse) / (p - 1.0));
}

/// First (k = 1) or second (k = 2) derivative of a function of one variable.
template <class F>
auto fd_derivative_1d(F&& f, double t, int k = 1, const FDScheme& scheme = {}) {
  if (k != 1 && k != 2) throw ConfigurationError("fd_derivative_1d: k must be 1 or 2");
  auto lifted = [&](const Eigen::VectorXd& y) { return f(y[0]); };
  Eigen::VectorXd x(1);
  x[0] = t;
  auto d = detail::derivatives(lifted, x, scheme, false);
  return k == 1 ? d.gradient[0] : d.hessian(0, 0);
}

}  // namespace qh
