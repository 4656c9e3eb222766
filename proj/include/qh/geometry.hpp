#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "qh/nahm.hpp"
#include "qh/numerics.hpp"
#include "qh/quadric.hpp"

namespace qh {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Metric components in a 4-d coordinate chart.
struct MetricChart {
  std::array<std::string, 4> coords;
  std::function<Mat4(const Vec4&)> components;
  std::function<bool(const Vec4&)> domain;  // empty: everywhere

  Mat4 operator()(const Vec4& p) const {
    if (domain && !domain(p)) {
      std::string msg = "point outside the chart domain (" + coords[0];
      for (int i = 1; i < 4; ++i) msg += ", " + coords[i];
      throw DomainError(msg + ")");
    }
    return components(p);
  }
};

using TwoFormField = std::function<Mat4(const Vec4&)>;

namespace detail {

// Rows sigma_1..3 over (d theta, d phi, d psi), no pole check.
inline Eigen::Matrix3d coframe_rows(double theta, double psi) {
  const double st = std::sin(theta), ct = std::cos(theta);
  const double sp = std::sin(psi), cp = std::cos(psi);
  Eigen::Matrix3d s;
  s << cp, sp * st, 0.0,  //
      sp, -cp * st, 0.0,  //
      0.0, ct, 1.0;
  return s;
}

inline bool off_poles(double theta) { return std::abs(std::sin(theta)) >= pole_guard; }

template <class V>
Eigen::MatrixXd wedge(const V& a, const V& b) {
  return a * b.transpose() - b * a.transpose();
}

}  // namespace detail

/// sigma_1 = cos psi d theta + sin psi sin theta d phi,
/// sigma_2 = sin psi d theta - cos psi sin theta d phi,
/// sigma_3 = d psi + cos theta d phi; rows over (d theta, d phi, d psi).
inline Eigen::Matrix3d euler_angle_coframe(double theta, double phi, double psi) {
  (void)phi;
  if (!detail::off_poles(theta)) throw PoleError("coframe degenerate at theta = " + std::to_string(theta));
  return detail::coframe_rows(theta, psi);
}

struct StructureReport {
  Eigen::Vector3d residual = Eigen::Vector3d::Zero();  // max |d sigma_i - sigma_j ^ sigma_k|
  double max_abs = 0.0;
};

/// d sigma_i - sigma_j ^ sigma_k (cyclic) at an angle point, by finite differences.
inline StructureReport structure_residual(const Eigen::Vector3d& angles, const FDScheme& scheme = FDScheme{1e-3, 4, true}) {
  auto rows = [](const Eigen::VectorXd& q) -> Eigen::Matrix3d { return euler_angle_coframe(q[0], q[1], q[2]); };
  std::array<Eigen::Matrix3d, 3> d;  // d[a](i, b) = d_a sigma_i,b
  for (int a = 0; a < 3; ++a) d[a] = fd_partial(rows, Eigen::VectorXd(angles), a, scheme);
  const Eigen::Matrix3d s = rows(angles);
  StructureReport out;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    const Eigen::Vector3d sj = s.row(j).transpose(), sk = s.row(k).transpose();
    const Eigen::Matrix3d rhs = detail::wedge(sj, sk);
    Eigen::Matrix3d ds;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) ds(a, b) = d[a](i, b) - d[b](i, a);
    out.residual[i] = (ds - rhs).cwiseAbs().maxCoeff();
  }
  out.max_abs = out.residual.maxCoeff();
  return out;
}

using WSource = std::function<Vec3(double)>;

inline WSource flow_source(const EulerFlow& flow) {
  return [flow](double s) { return flow.w(s); };
}

/// w held fixed in s (not a solution of the Euler equations unless w = 0).
inline WSource frozen_source(const Vec3& w) {
  return [w](double) { return w; };
}

namespace detail {

inline bool bgpp_domain(const Vec4& p) { return off_poles(p[1]); }

inline void check_w(const Vec3& w) {
  if (w[0] == 0.0 || w[1] == 0.0 || w[2] == 0.0) throw DomainError("BGPP metric needs all w_i nonzero");
}

}  // namespace detail

/// g = w1 w2 w3 ds^2 + sum (w_j w_k / w_i) sigma_i^2 in coordinates (s, theta, phi, psi).
inline MetricChart bgpp_metric(WSource w) {
  MetricChart chart;
  chart.coords = {"s", "theta", "phi", "psi"};
  chart.domain = detail::bgpp_domain;
  chart.components = [w = std::move(w)](const Vec4& p) {
    const Vec3 v = w(p[0]);
    detail::check_w(v);
    const Eigen::Matrix3d s = detail::coframe_rows(p[1], p[3]);
    const Vec3 coef(v[1] * v[2] / v[0], v[0] * v[2] / v[1], v[0] * v[1] / v[2]);
    Mat4 g = Mat4::Zero();
    g(0, 0) = v[0] * v[1] * v[2];
    g.bottomRightCorner<3, 3>() = s.transpose() * coef.asDiagonal() * s;
    return g;
  };
  return chart;
}

/// Omega_i = w_i sigma_j ^ sigma_k + w_j w_k ds ^ sigma_i (cyclic) as antisymmetric
/// matrices over (s, theta, phi, psi).
inline std::array<TwoFormField, 3> selfdual_forms_bgpp(WSource w) {
  std::array<TwoFormField, 3> out;
  auto shared = std::make_shared<WSource>(std::move(w));
  for (int i = 0; i < 3; ++i) {
    out[i] = [shared, i](const Vec4& p) {
      if (!detail::bgpp_domain(p)) throw DomainError("two-form evaluated within the pole guard");
      const Vec3 v = (*shared)(p[0]);
      detail::check_w(v);
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      const Eigen::Matrix3d s = detail::coframe_rows(p[1], p[3]);
      Vec4 ds = Vec4::Zero(), si = Vec4::Zero(), sj = Vec4::Zero(), sk = Vec4::Zero();
      ds[0] = 1.0;
      si.tail<3>() = s.row(i).transpose();
      sj.tail<3>() = s.row(j).transpose();
      sk.tail<3>() = s.row(k).transpose();
      return Mat4(v[i] * detail::wedge(sj, sk) + v[j] * v[k] * detail::wedge(ds, si));
    };
  }
  return out;
}

struct ClosureReport {
  Eigen::Vector4d components = Eigen::Vector4d::Zero();  // (d Omega)_{abc} for abc = 012, 013, 023, 123
  double max_abs = 0.0;
};

/// Exterior derivative of a 2-form field by finite differences.
inline ClosureReport exterior_derivative(const TwoFormField& omega, const Vec4& p,
                                         const FDScheme& scheme = FDScheme{1e-3, 4, true}) {
  auto f = [&](const Eigen::VectorXd& q) { return omega(Vec4(q)); };
  std::array<Mat4, 4> d;
  for (int a = 0; a < 4; ++a) d[a] = fd_partial(f, Eigen::VectorXd(p), a, scheme);
  ClosureReport out;
  int n = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      for (int c = b + 1; c < 4; ++c) out.components[n++] = d[a](b, c) + d[b](c, a) + d[c](a, b);
  out.max_abs = out.components.cwiseAbs().maxCoeff();
  return out;
}

/// Round S^4 of unit radius, g = d chi^2 + (sin^2 chi / 4) sum sigma_i^2; Ric = 3 g.
inline MetricChart sphere4_chart() {
  MetricChart chart;
  chart.coords = {"chi", "theta", "phi", "psi"};
  chart.domain = [](const Vec4& p) { return detail::off_poles(p[1]) && std::sin(p[0]) >= pole_guard; };
  chart.components = [](const Vec4& p) {
    const Eigen::Matrix3d s = detail::coframe_rows(p[1], p[3]);
    Mat4 g = Mat4::Zero();
    g(0, 0) = 1.0;
    g.bottomRightCorner<3, 3>() = 0.25 * std::pow(std::sin(p[0]), 2) * s.transpose() * s;
    return g;
  };
  return chart;
}

/// Flat R^4 as a cone over S^3, g = dR^2 + (R^2 / 4) sum sigma_i^2.
inline MetricChart flat_polar_chart() {
  MetricChart chart;
  chart.coords = {"R", "theta", "phi", "psi"};
  chart.domain = [](const Vec4& p) { return detail::off_poles(p[1]) && p[0] >= pole_guard; };
  chart.components = [](const Vec4& p) {
    const Eigen::Matrix3d s = detail::coframe_rows(p[1], p[3]);
    Mat4 g = Mat4::Zero();
    g(0, 0) = 1.0;
    g.bottomRightCorner<3, 3>() = 0.25 * p[0] * p[0] * s.transpose() * s;
    return g;
  };
  return chart;
}

/// g = rho/(rho^2 - a^2) d rho^2 + rho (sigma_1^2 + sigma_2^2) + ((rho^2 - a^2)/rho) sigma_3^2.
inline MetricChart eguchi_hanson_chart(double a) {
  if (!(a > 0.0)) throw ConfigurationError("Eguchi-Hanson parameter a must be positive");
  MetricChart chart;
  chart.coords = {"rho", "theta", "phi", "psi"};
  chart.domain = [a](const Vec4& p) { return detail::off_poles(p[1]) && p[0] - a >= pole_guard; };
  chart.components = [a](const Vec4& p) {
    const double rho = p[0], q = rho * rho - a * a;
    const Eigen::Matrix3d s = detail::coframe_rows(p[1], p[3]);
    Mat4 g = Mat4::Zero();
    g(0, 0) = rho / q;
    g.bottomRightCorner<3, 3>() = s.transpose() * Vec3(rho, rho, q / rho).asDiagonal() * s;
    return g;
  };
  return chart;
}

struct EguchiHansonReference {
  double V = 0.0;
  double Vhat = 0.0;
  double ellipsoid_residual = 0.0;
};

/// V = -(2/a) arccoth((|r + a e3| + |r - a e3|) / (2a)), Vhat = 1/|r + a e3| + 1/|r - a e3|.
inline EguchiHansonReference eguchi_hanson_reference(const Eigen::Vector3d& r, double a) {
  if (!(a > 0.0)) throw ConfigurationError("Eguchi-Hanson parameter a must be positive");
  const Eigen::Vector3d e(0.0, 0.0, a);
  const double rp = (r + e).norm(), rm = (r - e).norm();
  if (rp < 1e-14 * a || rm < 1e-14 * a) throw FocalSetError("point at a focus of the Eguchi-Hanson ellipsoids");
  const double q = (rp + rm) / (2.0 * a);
  if (q - 1.0 < 1e-14) throw FocalSetError("point on the focal segment of the Eguchi-Hanson ellipsoids");
  EguchiHansonReference out;
  out.V = -(2.0 / a) * std::atanh(1.0 / q);
  out.Vhat = 1.0 / rp + 1.0 / rm;
  const double c = 1.0 / std::tanh(a * out.V / 2.0);
  out.ellipsoid_residual =
      std::abs((r[0] * r[0] + r[1] * r[1]) / (a * a * (c * c - 1.0)) + r[2] * r[2] / (a * a * c * c) - 1.0);
  return out;
}

/// Vhat and A on R^3 with coordinates (x1, x2, x3) and fibre coordinate T.
struct GHData {
  std::function<double(const Eigen::Vector3d&)> Vhat;
  std::function<Eigen::Vector3d(const Eigen::Vector3d&)> A;
  std::string T = "T";
};

/// g = Vhat dx.dx + Vhat^{-1} (dT + A)^2.
inline MetricChart gh_metric(GHData data) {
  MetricChart chart;
  chart.coords = {"x1", "x2", "x3", data.T};
  chart.components = [d = std::move(data)](const Vec4& p) {
    const Eigen::Vector3d x = p.head<3>();
    const double v = d.Vhat(x);
    if (v == 0.0 || !std::isfinite(v)) throw DomainError("Gibbons-Hawking potential vanishes or is singular");
    const Eigen::Vector3d A = d.A(x);
    Mat4 g = Mat4::Zero();
    g.topLeftCorner<3, 3>() = v * Eigen::Matrix3d::Identity() + A * A.transpose() / v;
    g.block<3, 1>(0, 3) = A / v;
    g.block<1, 3>(3, 0) = A.transpose() / v;
    g(3, 3) = 1.0 / v;
    return g;
  };
  return chart;
}

/// A = -(1 - cos theta) d phi about `center`; curl A = grad(1/|x - center|),
/// singular on the ray below the center.
inline Eigen::Vector3d dirac_potential(const Eigen::Vector3d& x, const Eigen::Vector3d& center) {
  const Eigen::Vector3d y = x - center;
  const double r = y.norm();
  const double den = r * (r + y[2]);
  if (!(den > 0.0)) throw DomainError("Dirac string of the monopole potential");
  return Eigen::Vector3d(y[1] / den, -y[0] / den, 0.0);
}

/// Vhat = c + sum_k m_k / |x - p_k| with the superposed Dirac potentials.
inline GHData multi_center(const std::vector<Eigen::Vector3d>& centers, const std::vector<double>& masses,
                           double constant = 0.0) {
  if (centers.size() != masses.size()) throw ConfigurationError("multi_center: centers and masses differ in size");
  GHData d;
  d.Vhat = [=](const Eigen::Vector3d& x) {
    double v = constant;
    for (std::size_t k = 0; k < centers.size(); ++k) v += masses[k] / (x - centers[k]).norm();
    return v;
  };
  d.A = [=](const Eigen::Vector3d& x) {
    Eigen::Vector3d a = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < centers.size(); ++k) a += masses[k] * dirac_potential(x, centers[k]);
    return a;
  };
  return d;
}

/// Two centers at +-a e3 with unit masses: the Eguchi-Hanson potential.
inline GHData eguchi_hanson_gh(double a) {
  return multi_center({Eigen::Vector3d(0, 0, a), Eigen::Vector3d(0, 0, -a)}, {1.0, 1.0});
}

/// Axial gauge for an axisymmetric Vhat: A = alpha(r, theta) d phi with
/// alpha = int_0^theta r^2 sin t dVhat/dr(r, t) dt, so A vanishes on the +x3 axis.
inline Eigen::Vector3d axial_gauge_potential(const std::function<double(const Eigen::Vector3d&)>& vhat,
                                             const Eigen::Vector3d& x, double tol = defaults::quadrature_tol) {
  const double r = x.norm();
  if (!(r > 0.0)) throw DomainError("axial gauge undefined at the origin");
  const double theta = std::acos(std::clamp(x[2] / r, -1.0, 1.0));
  const double phi = std::atan2(x[1], x[0]);
  auto at = [&](double rr, double t) {
    return vhat(Eigen::Vector3d(rr * std::sin(t) * std::cos(phi), rr * std::sin(t) * std::sin(phi), rr * std::cos(t)));
  };
  const FDScheme fd{1e-3 * r, 4, true};
  auto integrand = [&](double t) {
    return r * r * std::sin(t) * fd_derivative_1d([&](double rr) { return at(rr, t); }, r, 1, fd);
  };
  const double alpha = theta == 0.0 ? 0.0 : integrate_adaptive(integrand, 0.0, theta, tol);
  const double rho2 = x[0] * x[0] + x[1] * x[1];
  if (rho2 == 0.0) return Eigen::Vector3d::Zero();
  // alpha d phi = alpha (x dy - y dx) / rho^2
  return Eigen::Vector3d(-alpha * x[1] / rho2, alpha * x[0] / rho2, 0.0);
}

struct GHCoordinates {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  double T = 0.0;
  double KK = 0.0;    // g(K, K) in the BGPP chart, K = d/dT at fixed x
  double Vhat = 0.0;  // Gibbons-Hawking potential at x from the quadric ansatz
};

/// x_i = w_i h_i(theta, psi), T = phi + psi; K = d/dphi at fixed (s, theta, psi).
inline GHCoordinates to_gh_coordinates(const WSource& w, const Eigen::Vector3d& angles, double s) {
  const Vec3 v = w(s);
  detail::check_w(v);
  const double theta = angles[0], phi = angles[1], psi = angles[2];
  GHCoordinates out;
  const Vec3 h = sphere_hamiltonians(SphereCoords{theta, psi});
  out.x = v.cwiseProduct(h);
  out.T = phi + psi;
  const Eigen::Vector3d sphi = detail::coframe_rows(theta, psi).col(1);
  const Vec3 coef(v[1] * v[2] / v[0], v[0] * v[2] / v[1], v[0] * v[1] / v[2]);
  out.KK = (coef.array() * sphi.array().square()).sum();
  // Vhat = 1 / (sqrt(Pi(H)) S2) for the family w_i^2 = H - beta_i, C = 1
  const auto inv = elliptic_invariants(v);
  const QuadricFamily fam({inv.beta1, inv.beta2, inv.beta3}, 1.0);
  out.Vhat = std::abs(eval_Vhat(Eigen::VectorXd(out.x), fam));
  return out;
}

struct RicciReport {
  Mat4 ricci = Mat4::Zero();
  double scalar = 0.0;
  double max_abs = 0.0;
};

namespace detail {

using Christoffel = Eigen::Matrix<double, 16, 4>;  // row 4a + b, column c: Gamma^a_{bc}

inline Christoffel christoffel(const MetricChart& chart, const Vec4& p, const FDScheme& scheme) {
  auto g = [&](const Eigen::VectorXd& q) { return chart(Vec4(q)); };
  std::array<Mat4, 4> dg;
  for (int a = 0; a < 4; ++a) dg[a] = fd_partial(g, Eigen::VectorXd(p), a, scheme);
  const Mat4 g0 = chart(p);
  if (std::abs(g0.determinant()) < 1e-12) throw NumericalFailure("metric degenerate at the evaluation point");
  const Mat4 ginv = g0.inverse();
  Christoffel G = Christoffel::Zero();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        double acc = 0.0;
        for (int d = 0; d < 4; ++d) acc += ginv(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
        G(4 * a + b, c) = 0.5 * acc;
      }
  return G;
}

}  // namespace detail

/// Ricci tensor by nested finite differences: Christoffel symbols from metric
/// derivatives, Riemann from Christoffel derivatives.
inline RicciReport ricci_fd(const MetricChart& chart, const Vec4& p, const FDScheme& scheme = FDScheme{1e-3, 4, true}) {
  auto gam = [&](const Eigen::VectorXd& q) { return detail::christoffel(chart, Vec4(q), scheme); };
  std::array<detail::Christoffel, 4> dG;
  for (int c = 0; c < 4; ++c) dG[c] = fd_partial(gam, Eigen::VectorXd(p), c, scheme);
  const detail::Christoffel G = gam(p);
  auto Gm = [&](int a, int b, int c) { return G(4 * a + b, c); };

  RicciReport out;
  // R_bd = R^a_{bad} = d_a Gamma^a_{db} - d_d Gamma^a_{ab} + Gamma^a_{ae} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{ab}
  for (int b = 0; b < 4; ++b)
    for (int d = 0; d < 4; ++d) {
      double acc = 0.0;
      for (int a = 0; a < 4; ++a) {
        acc += dG[a](4 * a + d, b) - dG[d](4 * a + a, b);
        for (int e = 0; e < 4; ++e) acc += Gm(a, a, e) * Gm(e, d, b) - Gm(a, d, e) * Gm(e, a, b);
      }
      out.ricci(b, d) = acc;
    }
  out.ricci = 0.5 * (out.ricci + out.ricci.transpose()).eval();
  out.scalar = (chart(p).inverse() * out.ricci).trace();
  out.max_abs = out.ricci.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace qh
