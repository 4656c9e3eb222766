#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qh/numerics.hpp"

namespace qh {

using Vec3 = Eigen::Vector3d;

struct EulerFlowState {
  Vec3 w = Vec3::Zero();
  double s = 0.0;
};

/// dw_i/ds = w_j w_k, (ijk) cyclic.
inline Vec3 euler_rhs(const Vec3& w) { return {w[1] * w[2], w[0] * w[2], w[0] * w[1]}; }

/// Default tolerance for Euler-flow solves; the invariants are quadratic in w
/// and w grows toward the blow-up, so the local tolerance is kept tight.
inline constexpr double euler_flow_tol = 1e-13;

inline Trajectory euler_flow(const Vec3& w0, double s0, double s1, double tol = euler_flow_tol) {
  auto rhs = [](double, const State& y) {
    State d(3);
    d << y[1] * y[2], y[0] * y[2], y[0] * y[1];
    return d;
  };
  ODEOptions opt;
  opt.tol = tol;
  opt.blowup_norm = 1e8;
  try {
    return ode_solve(rhs, State(w0), s0, s1, opt);
  } catch (SingularityError& e) {
    e.add_context("Euler flow blow-up");
    throw;
  }
}

/// Forward blow-up parameter of the Euler flow started at (w0, s0). For
/// positive w0 it is s0 + int_{w3}^inf dw / sqrt((w^2 + A)(w^2 + B)), since
/// dw3/ds = w1 w2 = sqrt((w3^2 + A)(w3^2 + B)); otherwise it is read off the
/// integrator's singularity estimate.
inline double euler_blowup(const Vec3& w0, double s0 = 0.0) {
  if (w0.minCoeff() > 0.0) {
    const double A = w0[0] * w0[0] - w0[2] * w0[2];
    const double B = w0[1] * w0[1] - w0[2] * w0[2];
    auto f = [&](double w) { return 1.0 / std::sqrt((w * w + A) * (w * w + B)); };
    return s0 + integrate_adaptive(f, w0[2], infinity, 1e-13);
  }
  const double scale = 1.0 / std::max(1e-3, w0.cwiseAbs().maxCoeff());
  try {
    euler_flow(w0, s0, s0 + 1e3 * scale);
  } catch (const SingularityError& e) {
    return e.singularity_estimate();
  }
  return std::numeric_limits<double>::infinity();
}

struct FlowSample {
  Vec3 w = Vec3::Zero();
  Vec3 dw = Vec3::Zero();
};

using FlowSource = std::function<FlowSample(double)>;

/// Euler flow evaluated anywhere by Taylor-series stepping from (w0, s0).
///
/// Each step uses h <= 0.1 / max|w|, well inside the convergence radius
/// (>= 1 / max|w| by the u' = u^2 majorant), with 24 terms. The result is
/// analytic in s to rounding level, which keeps nested finite differences of
/// metrics built from w clean.
class EulerFlow {
public:
  explicit EulerFlow(const Vec3& w0, double s0 = 0.0) : w0_(w0), s0_(s0) {}

  const Vec3& initial() const { return w0_; }
  double s0() const { return s0_; }

  Vec3 w(double s) const {
    Vec3 y = w0_;
    double t = s0_;
    const double dir = (s >= s0_) ? 1.0 : -1.0;
    for (int k = 0; k < max_steps; ++k) {
      const double remaining = s - t;
      if (remaining == 0.0) return y;
      const double m = std::max(y.cwiseAbs().maxCoeff(), 1e-3);
      if (m > 1e12) break;
      const double hmax = 0.1 / m;
      if (std::abs(remaining) <= hmax) return taylor_step(y, remaining);
      y = taylor_step(y, dir * hmax);
      t += dir * hmax;
    }
    throw SingularityError("Euler flow blows up before s = " + std::to_string(s), t, t);
  }

  Vec3 dw(double s) const { return euler_rhs(w(s)); }

  FlowSample sample(double s) const {
    const Vec3 v = w(s);
    return {v, euler_rhs(v)};
  }

  FlowSource source() const {
    return [flow = *this](double s) { return flow.sample(s); };
  }

  static Vec3 taylor_step(const Vec3& y, double h) {
    constexpr int N = 24;
    std::array<Vec3, N + 1> a;
    a[0] = y;
    for (int n = 0; n < N; ++n) {
      Vec3 next = Vec3::Zero();
      for (int m = 0; m <= n; ++m) {
        next[0] += a[m][1] * a[n - m][2];
        next[1] += a[m][0] * a[n - m][2];
        next[2] += a[m][0] * a[n - m][1];
      }
      a[n + 1] = next / static_cast<double>(n + 1);
    }
    Vec3 acc = a[N];
    for (int n = N - 1; n >= 0; --n) acc = acc * h + a[n];
    return acc;
  }

private:
  static constexpr int max_steps = 200000;
  Vec3 w0_;
  double s0_;
};

/// Closed-form flows used as references.
/// Flat: w = c/(1 - c s) in each component (A = B = 0).
inline FlowSample flat_flow(double s, double c = 1.0) {
  const double v = c / (1.0 - c * s);
  return {Vec3::Constant(v), Vec3::Constant(v * v)};
}

/// Eguchi-Hanson: w1 = w2 = sqrt(rho^2 - a^2), w3 = rho, rho = -a coth(a (s - s_blow)), s < s_blow.
inline FlowSample eguchi_hanson_flow(double s, double a, double s_blow) {
  if (!(s < s_blow)) throw DomainError("Eguchi-Hanson flow defined for s below the blow-up");
  const double rho = -a / std::tanh(a * (s - s_blow));
  const double q = std::sqrt(rho * rho - a * a);
  return {Vec3(q, q, rho), Vec3(q * rho, q * rho, q * q)};
}

/// Blow-up parameter of the Eguchi-Hanson flow through rho0 at s = 0.
inline double eguchi_hanson_blowup(double rho0, double a) { return std::atanh(a / rho0) / a; }

struct EllipticInvariants {
  double A = 0.0;
  double B = 0.0;
  double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0;
  double H = 0.0;
  double residual = 0.0;    // |(dw3/ds)^2 - (w3^2 + A)(w3^2 + B)|
  double residual_H = 0.0;  // |(dH/ds)^2 - 4 Pi(H - beta_i)|
  double residual_H_rel = 0.0;  // residual_H / max(1, (dH/ds)^2)
};

/// Invariants of the state. With `reference` given, A and B (and hence the
/// betas) are taken from it, so the residuals measure drift along a flow.
inline EllipticInvariants elliptic_invariants(const Vec3& w, const Vec3* reference = nullptr) {
  const Vec3& r = reference ? *reference : w;
  EllipticInvariants out;
  out.A = r[0] * r[0] - r[2] * r[2];
  out.B = r[1] * r[1] - r[2] * r[2];
  out.beta3 = (out.A + out.B) / 3.0;
  out.beta1 = out.beta3 - out.A;
  out.beta2 = out.beta3 - out.B;
  const double w3sq = w[2] * w[2];
  out.H = w3sq + out.beta3;
  const double dw3 = w[0] * w[1];
  out.residual = std::abs(dw3 * dw3 - (w3sq + out.A) * (w3sq + out.B));
  const double dH = 2.0 * w[2] * dw3;
  const double Pi = (out.H - out.beta1) * (out.H - out.beta2) * (out.H - out.beta3);
  out.residual_H = std::abs(dH * dH - 4.0 * Pi);
  out.residual_H_rel = out.residual_H / std::max(1.0, dH * dH);
  return out;
}

struct SphereCoords {
  double theta = 0.0;
  double psi = 0.0;
};

/// (h1, h2, h3) = (sin theta sin psi, -sin theta cos psi, cos theta).
inline Vec3 sphere_hamiltonians(const SphereCoords& c) {
  const double st = std::sin(c.theta);
  return {st * std::sin(c.psi), -st * std::cos(c.psi), std::cos(c.theta)};
}

inline constexpr double pole_guard = 1e-2;

namespace detail {

// d/dpsi and d/dp (p = cos theta) of f at c. Differences are taken in theta,
// where f is smooth up to the poles, and converted with d/dp = -d/dtheta / sin theta.
template <class F>
std::pair<double, double> sphere_partials(F& f, const SphereCoords& c, double h) {
  auto d = [&](auto&& g) { return (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h); };
  const double fpsi = d([&](double e) { return f(SphereCoords{c.theta, c.psi + e}); });
  const double ftheta = d([&](double e) { return f(SphereCoords{c.theta + e, c.psi}); });
  return {fpsi, -ftheta / std::sin(c.theta)};
}

inline void check_pole(const SphereCoords& c) {
  if (std::abs(std::sin(c.theta)) < pole_guard)
    throw PoleError("Poisson bracket evaluated within the pole guard at theta = " + std::to_string(c.theta));
}

}  // namespace detail

/// {f, g} = df/dpsi dg/dp - df/dp dg/dpsi with p = cos theta; this orientation
/// gives {h_i, h_j} = eps_ijk h_k.
template <class F, class G>
double poisson_bracket(F&& f, G&& g, const SphereCoords& c, double step = 1e-3) {
  detail::check_pole(c);
  const auto [fpsi, fp] = detail::sphere_partials(f, c, step);
  const auto [gpsi, gp] = detail::sphere_partials(g, c, step);
  return fpsi * gp - fp * gpsi;
}

inline std::function<double(const SphereCoords&)> hamiltonian(int i) {
  return [i](const SphereCoords& c) { return sphere_hamiltonians(c)[i]; };
}

/// Uniform angle grid avoiding the pole guard: theta in [0.2, pi - 0.2], psi in [0, 2 pi).
inline std::vector<SphereCoords> angle_grid(int n_theta, int n_psi) {
  std::vector<SphereCoords> out;
  for (int a = 0; a < n_theta; ++a) {
    const double th = 0.2 + (std::numbers::pi - 0.4) * (n_theta == 1 ? 0.5 : static_cast<double>(a) / (n_theta - 1));
    for (int b = 0; b < n_psi; ++b) out.push_back({th, 2.0 * std::numbers::pi * b / n_psi});
  }
  return out;
}

/// max over s-samples and angles of |dx_i/ds - {x_j, x_k}| for x_i = w_i(s) h_i.
inline double nahm_residual(const FlowSource& flow, const std::vector<double>& s_samples,
                            const std::vector<SphereCoords>& angles, double step = 1e-3) {
  double worst = 0.0;
  for (double s : s_samples) {
    const FlowSample fs = flow(s);
    auto x = [&](int i) {
      return [&fs, i](const SphereCoords& c) { return fs.w[i] * sphere_hamiltonians(c)[i]; };
    };
    for (const auto& c : angles) {
      const Vec3 h = sphere_hamiltonians(c);
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        const double lhs = fs.dw[i] * h[i];
        const double rhs = poisson_bracket(x(j), x(k), c, step);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  }
  return worst;
}

inline double nahm_residual(const Trajectory& tr, const std::vector<SphereCoords>& angles, double step = 1e-3) {
  double worst = 0.0;
  for (std::size_t n = 0; n < tr.size(); ++n) {
    const State& y = tr.states()[n];
    const State& dy = tr.slopes()[n];
    FlowSource at_node = [&](double) { return FlowSample{Vec3(y[0], y[1], y[2]), Vec3(dy[0], dy[1], dy[2])}; };
    worst = std::max(worst, nahm_residual(at_node, {tr.params()[n]}, angles, step));
  }
  return worst;
}

struct NambuReport {
  std::vector<double> residuals;
  double max_abs = 0.0;
  bool degenerate = false;  // every (n-1)-minor of dx/dP vanishes
};

/// Residuals of dx_i/dV = (-1)^i det d(x without x_i)/d(P_1..P_{n-1}) for a map
/// (V, P_1..P_{n-1}) -> R^n, derivatives by finite differences. At n = 3 with
/// (P_1, P_2) = (psi, cos theta) this is the bracket form above.
template <class X>
NambuReport nambu_residual(X&& x, const Eigen::VectorXd& at, const FDScheme& scheme = FDScheme{1e-3, 4, true}) {
  const Eigen::Index n = at.size();
  if (n < 2) throw ConfigurationError("nambu_residual needs n >= 2");
  Eigen::MatrixXd J(n, n);  // J(i, a): d x_i / d (V, P)_a
  for (Eigen::Index i = 0; i < n; ++i) {
    auto comp = [&](const Eigen::VectorXd& p) {
      const Eigen::VectorXd v = x(p);
      if (v.size() != n) throw ConfigurationError("nambu map must return n components");
      return v[i];
    };
    J.row(i) = fd_gradient(comp, at, scheme).transpose();
  }
  NambuReport rep;
  double minor_scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd m(n - 1, n - 1);
    for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
      if (r == i) continue;
      m.row(rr++) = J.row(r).tail(n - 1);
    }
    const double det = (n == 2) ? m(0, 0) : m.determinant();
    minor_scale = std::max(minor_scale, std::abs(det));
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    const double r = J(i, 0) - sign * det;
    rep.residuals.push_back(r);
    rep.max_abs = std::max(rep.max_abs, std::abs(r));
  }
  rep.degenerate = minor_scale < 1e-12;
  return rep;
}

using Mat2c = Eigen::Matrix2cd;

/// Basis tau_i = -(i/2) sigma_i with [tau_i, tau_j] = eps_ijk tau_k.
inline std::array<Mat2c, 3> su2_basis() {
  const cplx I(0.0, 1.0);
  Mat2c s1, s2, s3;
  s1 << 0, 1, 1, 0;
  s2 << 0, -I, I, 0;
  s3 << 1, 0, 0, -1;
  return {-0.5 * I * s1, -0.5 * I * s2, -0.5 * I * s3};
}

struct LaxPair {
  std::array<Mat2c, 3> X{Mat2c::Zero(), Mat2c::Zero(), Mat2c::Zero()};

  static LaxPair embed(const Vec3& w) {
    const auto tau = su2_basis();
    return {{w[0] * tau[0], w[1] * tau[1], w[2] * tau[2]}};
  }

  /// A(lambda) = (X1 + i X2) + 2 X3 lambda - (X1 - i X2) lambda^2.
  Mat2c A(cplx l) const {
    const cplx I(0.0, 1.0);
    return (X[0] + I * X[1]) + 2.0 * l * X[2] - l * l * (X[0] - I * X[1]);
  }

  /// B(lambda) = -i X3 + i (X1 - i X2) lambda.
  Mat2c B(cplx l) const {
    const cplx I(0.0, 1.0);
    return -I * X[2] + I * l * (X[0] - I * X[1]);
  }

  /// dX_i/ds = [X_j, X_k].
  LaxPair nahm_rhs() const {
    auto br = [](const Mat2c& a, const Mat2c& b) -> Mat2c { return a * b - b * a; };
    return {{br(X[1], X[2]), br(X[2], X[0]), br(X[0], X[1])}};
  }

  State pack() const {
    State y(24);
    for (int i = 0; i < 3; ++i)
      for (int e = 0; e < 4; ++e) {
        y[8 * i + 2 * e] = X[i](e / 2, e % 2).real();
        y[8 * i + 2 * e + 1] = X[i](e / 2, e % 2).imag();
      }
    return y;
  }

  static LaxPair unpack(const State& y) {
    LaxPair p;
    for (int i = 0; i < 3; ++i)
      for (int e = 0; e < 4; ++e) p.X[i](e / 2, e % 2) = cplx(y[8 * i + 2 * e], y[8 * i + 2 * e + 1]);
    return p;
  }
};

/// det A(lambda) as a polynomial in lambda.
inline Polynomial spectral_determinant(const LaxPair& L) {
  const cplx I(0.0, 1.0);
  auto entry = [&](int r, int c) {
    const cplx p = L.X[0](r, c) + I * L.X[1](r, c);
    const cplx m = L.X[0](r, c) - I * L.X[1](r, c);
    return Polynomial(std::vector<cplx>{p, 2.0 * L.X[2](r, c), -m});
  };
  return entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(1, 0);
}

struct LaxReport {
  double lax_residual = 0.0;   // max |dA/ds - [A, B]|
  double det_drift = 0.0;      // max |det A(lambda)(s) - det A(lambda)(s0)|
  double trace_sq_drift = 0.0; // max |tr A(lambda)^2 (s) - tr A(lambda)^2 (s0)|
  std::vector<cplx> lambdas;
  Polynomial spectral_polynomial;  // det A(lambda) at s0
  std::size_t steps = 0;
};

inline std::vector<cplx> default_lax_lambdas() {
  return {cplx(0.3, 0.0), cplx(-0.7, 0.2), cplx(1.1, -0.5), cplx(0.0, 0.8), cplx(2.0, 1.0)};
}

inline LaxReport lax_spectral_check(const LaxPair& X0, double s0, double s1,
                                    std::vector<cplx> lambdas = default_lax_lambdas(), double tol = 1e-13) {
  auto rhs = [](double, const State& y) { return LaxPair::unpack(y).nahm_rhs().pack(); };
  ODEOptions opt;
  opt.tol = tol;
  opt.blowup_norm = 1e8;
  Trajectory tr = ode_solve(rhs, X0.pack(), s0, s1, opt);

  LaxReport rep;
  rep.lambdas = lambdas;
  rep.spectral_polynomial = spectral_determinant(X0);
  rep.steps = tr.size();
  std::vector<cplx> det0, tr0;
  for (const cplx l : lambdas) {
    const Mat2c A = X0.A(l);
    det0.push_back(A.determinant());
    tr0.push_back((A * A).trace());
  }
  for (std::size_t n = 0; n < tr.size(); ++n) {
    const LaxPair L = LaxPair::unpack(tr.states()[n]);
    const LaxPair dL = LaxPair::unpack(tr.slopes()[n]);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const cplx l = lambdas[k];
      const Mat2c A = L.A(l);
      const Mat2c B = L.B(l);
      const Mat2c dA = dL.A(l);
      rep.lax_residual = std::max(rep.lax_residual, (dA - (A * B - B * A)).cwiseAbs().maxCoeff());
      rep.det_drift = std::max(rep.det_drift, std::abs(A.determinant() - det0[k]));
      rep.trace_sq_drift = std::max(rep.trace_sq_drift, std::abs((A * A).trace() - tr0[k]));
    }
  }
  return rep;
}

}  // namespace qh
