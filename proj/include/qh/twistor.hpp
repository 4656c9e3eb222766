#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qh/monopole.hpp"
#include "qh/numerics.hpp"

namespace qh {

using Vec3c = Eigen::Vector3cd;

/// mu(lambda) = (x1 + i x2) + 2 x3 lambda - (x1 - i x2) lambda^2.
inline cplx incidence_mu(const Vec3c& x, cplx lambda) {
  const cplx I(0.0, 1.0);
  return (x[0] + I * x[1]) + 2.0 * x[2] * lambda - (x[0] - I * x[1]) * lambda * lambda;
}

inline cplx incidence_mu(const Eigen::Vector3d& x, cplx lambda) { return incidence_mu(Vec3c(x.cast<cplx>()), lambda); }

/// The section lambda -> mu(lambda) of a point, with its roots.
struct IncidenceSection {
  Vec3c x;

  explicit IncidenceSection(const Eigen::Vector3d& p) : x(p.cast<cplx>()) {}
  explicit IncidenceSection(const Vec3c& p) : x(p) {}

  cplx mu(cplx lambda) const { return incidence_mu(x, lambda); }
  cplx r() const { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }
  cplx leading() const { return -(x[0] - cplx(0.0, 1.0) * x[1]); }

  /// The lambda^2 coefficient vanishes (x1 = i x2, e.g. real points on the x3 axis).
  bool degenerate() const { return std::abs(leading()) < 1e-12 * (1.0 + std::abs(r())); }

  /// lambda_+ = (x3 + r)/(x1 - i x2); nullopt when it sits at infinity.
  std::optional<cplx> lambda_plus() const {
    if (degenerate()) {
      if (std::abs(x[2] + r()) > 1e-12 * (1.0 + std::abs(r()))) return std::nullopt;
      return finite_linear_root();
    }
    return (x[2] + r()) / (-leading());
  }

  std::optional<cplx> lambda_minus() const {
    if (degenerate()) {
      if (std::abs(x[2] - r()) > 1e-12 * (1.0 + std::abs(r()))) return std::nullopt;
      return finite_linear_root();
    }
    return (x[2] - r()) / (-leading());
  }

  std::vector<cplx> finite_roots() const {
    std::vector<cplx> out;
    if (auto p = lambda_plus()) out.push_back(*p);
    if (auto m = lambda_minus()) out.push_back(*m);
    if (out.size() == 2 && std::abs(out[0] - out[1]) == 0.0) out.pop_back();
    return out;
  }

private:
  std::optional<cplx> finite_linear_root() const {
    if (std::abs(x[2]) == 0.0) return std::nullopt;
    return -(x[0] + cplx(0.0, 1.0) * x[1]) / (2.0 * x[2]);
  }
};

enum class KernelKind { F_weight_minus2, f_weight_zero };
enum class ContourRule { enclose_mu_plus, enclose_origin, none };

inline const char* to_string(ContourRule r) {
  switch (r) {
    case ContourRule::enclose_mu_plus: return "enclose_mu_plus";
    case ContourRule::enclose_origin: return "enclose_origin";
    case ContourRule::none: return "none";
  }
  return "none";
}

/// A twistor function of (lambda, mu) together with where it is singular.
/// Singularities are declared as: a pole or log branch at mu = 0 (so at the
/// roots of the section) and a pole of some order at lambda = 0.
struct TwistorKernel {
  std::string name;
  KernelKind kind = KernelKind::F_weight_minus2;
  std::function<cplx(cplx, cplx)> eval;
  std::function<cplx(cplx, cplx)> d_mu;  // empty: differentiated numerically
  bool singular_at_mu_zero = false;
  bool log_branch = false;
  int lambda_pole_order = 0;
  ContourRule rule = ContourRule::enclose_mu_plus;

  /// d/dmu of the kernel. Without an analytic form, a 4-point circle stencil of
  /// radius 1e-3 |mu| is used; for log kernels each difference is wrapped to
  /// the principal branch so a cut between stencil nodes does not leak in.
  cplx derivative_mu(cplx lambda, cplx mu) const {
    if (d_mu) return d_mu(lambda, mu);
    const double delta = 1e-3 * std::max(std::abs(mu), 1e-3);
    const cplx f0 = eval(lambda, mu);
    cplx acc{0.0, 0.0};
    for (int k = 0; k < 4; ++k) {
      const cplx w = std::polar(1.0, 0.5 * std::numbers::pi * k);
      cplx df = eval(lambda, mu + delta * w) - f0;
      if (log_branch) df = cplx(df.real(), std::remainder(df.imag(), 2.0 * std::numbers::pi));
      acc += df / w;
    }
    return acc / (4.0 * delta);
  }
};

/// N(lambda, mu) / (lambda^p mu^q) with N = sum c_ij lambda^i mu^j.
struct RationalKernelSpec {
  struct Term {
    int lambda_power = 0;
    int mu_power = 0;
    cplx coefficient{1.0, 0.0};
  };
  std::string name = "rational";
  KernelKind kind = KernelKind::F_weight_minus2;
  std::vector<Term> numerator;
  int lambda_power = 0;
  int mu_power = 0;
  ContourRule rule = ContourRule::enclose_mu_plus;
};

namespace kernels {

inline TwistorKernel inv_mu() {
  return {"inv_mu",
          KernelKind::F_weight_minus2,
          [](cplx, cplx mu) { return 1.0 / mu; },
          [](cplx, cplx mu) { return -1.0 / (mu * mu); },
          true,
          false,
          0,
          ContourRule::enclose_mu_plus};
}

inline TwistorKernel inv_mu_sq() {
  return {"inv_mu_sq",
          KernelKind::F_weight_minus2,
          [](cplx, cplx mu) { return 1.0 / (mu * mu); },
          [](cplx, cplx mu) { return -2.0 / (mu * mu * mu); },
          true,
          false,
          0,
          ContourRule::enclose_mu_plus};
}

inline TwistorKernel neg_log_mu() {
  return {"neg_log_mu",
          KernelKind::f_weight_zero,
          [](cplx, cplx mu) { return -std::log(mu); },
          [](cplx, cplx mu) { return -1.0 / mu; },
          true,
          true,
          0,
          ContourRule::enclose_mu_plus};
}

inline TwistorKernel mu_over_lambda() {
  return {"mu_over_lambda",
          KernelKind::f_weight_zero,
          [](cplx l, cplx mu) { return mu / l; },
          [](cplx l, cplx) { return 1.0 / l; },
          false,
          false,
          1,
          ContourRule::enclose_origin};
}

inline TwistorKernel lambda_poly() {
  return {"lambda_poly",
          KernelKind::F_weight_minus2,
          [](cplx l, cplx) { return 1.0 + 2.0 * l + l * l; },
          [](cplx, cplx) { return cplx(0.0, 0.0); },
          false,
          false,
          0,
          ContourRule::none};
}

inline TwistorKernel zero() {
  return {"zero",
          KernelKind::f_weight_zero,
          [](cplx, cplx) { return cplx(0.0, 0.0); },
          [](cplx, cplx) { return cplx(0.0, 0.0); },
          false,
          false,
          0,
          ContourRule::none};
}

inline TwistorKernel rational(const RationalKernelSpec& spec) {
  if (spec.lambda_power < 0 || spec.mu_power < 0) throw ConfigurationError("kernel powers must be non-negative");
  auto numer = [terms = spec.numerator](cplx l, cplx mu) {
    cplx acc{0.0, 0.0};
    for (const auto& t : terms) acc += t.coefficient * std::pow(l, t.lambda_power) * std::pow(mu, t.mu_power);
    return acc;
  };
  auto numer_mu = [terms = spec.numerator](cplx l, cplx mu) {
    cplx acc{0.0, 0.0};
    for (const auto& t : terms)
      if (t.mu_power > 0)
        acc += t.coefficient * static_cast<double>(t.mu_power) * std::pow(l, t.lambda_power) *
               std::pow(mu, t.mu_power - 1);
    return acc;
  };
  const int p = spec.lambda_power, q = spec.mu_power;
  TwistorKernel k;
  k.name = spec.name;
  k.kind = spec.kind;
  k.eval = [=](cplx l, cplx mu) { return numer(l, mu) / (std::pow(l, p) * std::pow(mu, q)); };
  k.d_mu = [=](cplx l, cplx mu) {
    return (numer_mu(l, mu) * mu - static_cast<double>(q) * numer(l, mu)) / (std::pow(l, p) * std::pow(mu, q + 1));
  };
  k.singular_at_mu_zero = q > 0;
  k.lambda_pole_order = p;
  k.rule = spec.rule;
  return k;
}

inline std::vector<std::string> builtin_names() {
  return {"inv_mu", "inv_mu_sq", "neg_log_mu", "mu_over_lambda", "lambda_poly", "zero"};
}

inline TwistorKernel by_name(const std::string& name) {
  if (name == "inv_mu") return inv_mu();
  if (name == "inv_mu_sq") return inv_mu_sq();
  if (name == "neg_log_mu") return neg_log_mu();
  if (name == "mu_over_lambda") return mu_over_lambda();
  if (name == "lambda_poly") return lambda_poly();
  if (name == "zero") return zero();
  throw ConfigurationError("unknown kernel '" + name + "'");
}

}  // namespace kernels

struct SingularitySet {
  std::vector<cplx> enclosed;        // finite points the contour must surround
  std::vector<cplx> excluded;        // finite points it must leave outside
  bool enclosed_at_infinity = false; // the enclosed point is lambda = infinity
};

/// Finite singular points of lambda -> kernel(lambda, mu(lambda)) (or of its
/// mu-derivative), split by the contour rule. `exclude_origin` adds lambda = 0
/// as a point to keep outside (the Phi integrals carry an extra 1/lambda).
inline SingularitySet classify_singularities(const IncidenceSection& sec, const TwistorKernel& k,
                                             bool exclude_origin = false) {
  SingularitySet s;
  auto add_excluded = [&](cplx p) {
    for (cplx q : s.excluded)
      if (std::abs(q - p) == 0.0) return;
    s.excluded.push_back(p);
  };
  if (k.singular_at_mu_zero) {
    const auto plus = sec.lambda_plus();
    const auto minus = sec.lambda_minus();
    if (k.rule == ContourRule::enclose_mu_plus) {
      if (plus)
        s.enclosed.push_back(*plus);
      else
        s.enclosed_at_infinity = true;
      if (minus) add_excluded(*minus);
    } else {
      if (plus) add_excluded(*plus);
      if (minus) add_excluded(*minus);
    }
  }
  if (k.lambda_pole_order > 0 && k.rule == ContourRule::enclose_origin) s.enclosed.push_back(0.0);
  if ((k.lambda_pole_order > 0 && k.rule != ContourRule::enclose_origin) || exclude_origin) add_excluded(0.0);
  if (k.rule == ContourRule::enclose_mu_plus && !k.singular_at_mu_zero && k.lambda_pole_order == 0) {
    s.enclosed.clear();
  }
  return s;
}

struct ContourPlacement {
  Contour contour;
  std::string heuristic;
  double clearance = 0.0;  // min distance from the circle to a singular point / radius
};

inline double circle_clearance(const Contour& c, const SingularitySet& s) {
  double d = std::numeric_limits<double>::infinity();
  for (cplx p : s.enclosed) d = std::min(d, std::abs(std::abs(p - c.center) - c.radius));
  for (cplx p : s.excluded) d = std::min(d, std::abs(std::abs(p - c.center) - c.radius));
  return d / c.radius;
}

/// Circle centred on the enclosed singularity, radius half the distance to
/// the nearest excluded one. When the enclosed point is at infinity the
/// circle is run clockwise around all finite singularities instead.
inline ContourPlacement auto_contour(const IncidenceSection& sec, const TwistorKernel& k, bool exclude_origin = false) {
  const SingularitySet s = classify_singularities(sec, k, exclude_origin);
  ContourPlacement out;
  if (s.enclosed_at_infinity) {
    cplx center = s.excluded.empty() ? cplx(0.0, 0.0) : s.excluded.front();
    double spread = 0.0;
    for (cplx p : s.excluded) spread = std::max(spread, std::abs(p - center));
    out.contour = Contour{center, std::max(1.0, 2.0 * spread), defaults::contour_min_samples, Orientation::clockwise};
    out.heuristic = "clockwise circle around the finite singularities (enclosed point at infinity)";
  } else if (s.enclosed.empty()) {
    double spread = 0.0;
    for (cplx p : s.excluded) spread = std::max(spread, std::abs(p));
    out.contour = s.excluded.empty() ? Contour{0.0, 1.0} : Contour{2.0 * spread + 2.0, 1.0};
    out.heuristic = "unit circle clear of all singularities";
  } else {
    if (s.enclosed.size() != 1) throw ContourError("auto placement supports one enclosed singularity");
    const cplx c = s.enclosed.front();
    double nearest = std::numeric_limits<double>::infinity();
    for (cplx p : s.excluded) nearest = std::min(nearest, std::abs(p - c));
    if (nearest == 0.0) throw ContourError("enclosed and excluded singularities coincide; no separating contour");
    const double radius = std::isfinite(nearest) ? 0.5 * nearest : 1.0;
    out.contour = Contour{c, radius};
    out.heuristic = "circle centred on the enclosed singularity, radius half the distance to the nearest other";
  }
  out.clearance = circle_clearance(out.contour, s);
  return out;
}

inline bool inside(const Contour& c, cplx p) { return std::abs(p - c.center) < c.radius; }

/// Rejects contours that pass within 1e-3 radius of a singular point or do
/// not separate the enclosed from the excluded singularities.
inline void validate_contour(const Contour& c, const SingularitySet& s) {
  c.validate();
  const double clearance = circle_clearance(c, s);
  if (clearance < 1e-3)
    throw ContourError("contour passes within " + std::to_string(clearance) + " radius of a singularity");
  const bool exterior = c.orientation == Orientation::clockwise;
  for (cplx p : s.enclosed)
    if (inside(c, p) == exterior) throw ContourError("contour fails to enclose a required singularity");
  for (cplx p : s.excluded)
    if (inside(c, p) != exterior) throw ContourError("contour encloses a singularity it must exclude");
  if (s.enclosed_at_infinity && !exterior)
    throw ContourError("the enclosed singularity is at infinity; a counterclockwise circle cannot reach it");
}

inline void require_kind(const TwistorKernel& k, KernelKind kind, const char* op) {
  if (k.kind != kind)
    throw ConfigurationError(std::string(op) + ": kernel '" + k.name + "' has the wrong weight for this transform");
}

/// V(x) = oint F(lambda, mu(lambda)) d lambda.
inline cplx penrose_transform(const TwistorKernel& F, const Eigen::Vector3d& x, const Contour& c) {
  require_kind(F, KernelKind::F_weight_minus2, "penrose_transform");
  const IncidenceSection sec(x);
  validate_contour(c, classify_singularities(sec, F));
  return contour_integral([&](cplx l) { return F.eval(l, sec.mu(l)); }, c);
}

inline cplx penrose_transform(const TwistorKernel& F, const Eigen::Vector3d& x) {
  return penrose_transform(F, x, auto_contour(IncidenceSection(x), F).contour);
}

/// oint mu dF/dmu d lambda, the transform of the Euler (dilation) operator.
inline cplx dilation_transform(const TwistorKernel& F, const Eigen::Vector3d& x, const Contour& c) {
  require_kind(F, KernelKind::F_weight_minus2, "dilation_transform");
  const IncidenceSection sec(x);
  validate_contour(c, classify_singularities(sec, F));
  return contour_integral(
      [&](cplx l) {
        const cplx mu = sec.mu(l);
        return mu * F.derivative_mu(l, mu);
      },
      c);
}

inline cplx dilation_transform(const TwistorKernel& F, const Eigen::Vector3d& x) {
  return dilation_transform(F, x, auto_contour(IncidenceSection(x), F).contour);
}

struct SplittingResult {
  Eigen::Vector2cd h0 = Eigen::Vector2cd::Zero();
  Eigen::Vector2cd h1 = Eigen::Vector2cd::Zero();
  cplx pi_h0{0.0, 0.0};  // lambda h^1 - h^0 with pi = (lambda, 1)
  cplx pi_h1{0.0, 0.0};
  double reproduction_residual = 0.0;  // |h0 - h1 - (lambda, 1) df/dmu|
};

/// h_alpha(lambda) = (1/2 pi i) oint_{Gamma_alpha} (lambda', 1) g(lambda') / (lambda' - lambda) d lambda',
/// g = df/dmu on the section. Gamma_0 - Gamma_1 must wind once around lambda.
inline SplittingResult splitting(const TwistorKernel& f, const Eigen::Vector3d& x, cplx lambda, const Contour& gamma0,
                                 const Contour& gamma1) {
  require_kind(f, KernelKind::f_weight_zero, "splitting");
  const IncidenceSection sec(x);
  const SingularitySet s = classify_singularities(sec, f);
  validate_contour(gamma0, s);
  validate_contour(gamma1, s);
  const bool in0 = inside(gamma0, lambda) != (gamma0.orientation == Orientation::clockwise);
  const bool in1 = inside(gamma1, lambda) != (gamma1.orientation == Orientation::clockwise);
  if (!(in0 && !in1)) throw ContourError("splitting contours must wind Gamma_0 - Gamma_1 once around lambda");
  if (std::min(std::abs(std::abs(lambda - gamma0.center) - gamma0.radius),
               std::abs(std::abs(lambda - gamma1.center) - gamma1.radius)) < 1e-3 * gamma1.radius)
    throw ContourError("evaluation point too close to a splitting contour");

  auto g = [&](cplx l) { return f.derivative_mu(l, sec.mu(l)); };
  const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
  auto h = [&](const Contour& c) {
    Eigen::Vector2cd out;
    out[0] = contour_integral([&](cplx l) { return l * g(l) / (l - lambda); }, c) / two_pi_i;
    out[1] = contour_integral([&](cplx l) { return g(l) / (l - lambda); }, c) / two_pi_i;
    return out;
  };
  SplittingResult r;
  r.h0 = h(gamma0);
  r.h1 = h(gamma1);
  r.pi_h0 = lambda * r.h0[1] - r.h0[0];
  r.pi_h1 = lambda * r.h1[1] - r.h1[0];
  const cplx gl = g(lambda);
  r.reproduction_residual = (r.h0 - r.h1 - Eigen::Vector2cd(lambda * gl, gl)).cwiseAbs().maxCoeff();
  return r;
}

/// Outer/inner circles about the auto contour's centre with lambda between
/// them: radii (|lambda - c| + R_max)/2 and |lambda - c|/2, R_max the distance
/// to the nearest excluded singularity.
inline std::pair<Contour, Contour> splitting_contours(const IncidenceSection& sec, const TwistorKernel& f, cplx lambda) {
  const SingularitySet s = classify_singularities(sec, f);
  if (s.enclosed_at_infinity || s.enclosed.size() != 1)
    throw ContourError("splitting contours need one finite enclosed singularity");
  const cplx c = s.enclosed.front();
  double reach = std::numeric_limits<double>::infinity();
  for (cplx p : s.excluded) reach = std::min(reach, std::abs(p - c));
  const double d = std::abs(lambda - c);
  if (!(d > 0.0) || !(d < reach)) throw ContourError("evaluation point not inside the splitting annulus");
  const double outer = std::isfinite(reach) ? 0.5 * (d + reach) : 2.0 * d;
  return {Contour{c, outer}, Contour{c, 0.5 * d}};
}

/// The 2x2 matrix [[A1 + i A2, A3 + Vhat], [A3 - Vhat, -(A1 - i A2)]] with the
/// pair (Vhat, A) it encodes.
struct PhiMatrix {
  Eigen::Matrix2cd components = Eigen::Matrix2cd::Zero();
  cplx Vhat{0.0, 0.0};
  Vec3c A = Vec3c::Zero();
};

/// With g = df/dmu on the section, R01 = oint g and R11 = oint g / lambda over
/// a contour keeping lambda = 0 outside: Vhat = R01, A = (i R11, -R11, i R01).
/// This is the gauge A1 + i A2 = 0; grad Vhat = curl A holds for every f.
inline PhiMatrix phi_matrix(const TwistorKernel& f, const Eigen::Vector3d& x, const Contour& c) {
  require_kind(f, KernelKind::f_weight_zero, "phi_matrix");
  const IncidenceSection sec(x);
  const SingularitySet s = classify_singularities(sec, f, f.rule != ContourRule::enclose_origin);
  validate_contour(c, s);
  auto g = [&](cplx l) { return f.derivative_mu(l, sec.mu(l)); };
  const cplx I(0.0, 1.0);
  const cplx r01 = contour_integral(g, c);
  cplx r11{0.0, 0.0};
  if (f.rule != ContourRule::enclose_origin) r11 = contour_integral([&](cplx l) { return g(l) / l; }, c);
  PhiMatrix out;
  out.Vhat = r01;
  out.A = Vec3c(I * r11, -r11, I * r01);
  out.components << out.A[0] + I * out.A[1], out.A[2] + out.Vhat, out.A[2] - out.Vhat, -(out.A[0] - I * out.A[1]);
  return out;
}

inline PhiMatrix phi_matrix(const TwistorKernel& f, const Eigen::Vector3d& x) {
  const bool keep_origin_out = f.rule != ContourRule::enclose_origin;
  return phi_matrix(f, x, auto_contour(IncidenceSection(x), f, keep_origin_out).contour);
}

/// grad Vhat - curl A for the pair produced by phi_matrix, by finite differences.
inline MonopoleResidual phi_monopole_residual(const TwistorKernel& f, const Eigen::Vector3d& x,
                                              const FDScheme& scheme = FDScheme{1e-3, 4, true}) {
  return monopole_residual([&](const Eigen::Vector3d& y) { return phi_matrix(f, y).Vhat; },
                           [&](const Eigen::Vector3d& y) { return phi_matrix(f, y).A; }, x, scheme);
}

}  // namespace qh
