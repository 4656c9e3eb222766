#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qh/numerics.hpp"

namespace qh {

/// Confocal family sum_i x_i^2 / (H - beta_i) = C.
struct QuadricFamily {
  std::vector<double> betas;
  double C = 1.0;

  QuadricFamily() = default;
  QuadricFamily(std::vector<double> b, double c) : betas(std::move(b)), C(c) { validate(); }

  int n() const { return static_cast<int>(betas.size()); }

  void validate() const {
    if (betas.size() < 2) throw ConfigurationError("quadric family needs n >= 2 betas");
    for (double b : betas)
      if (!std::isfinite(b)) throw ConfigurationError("quadric family betas must be finite");
    if (!std::isfinite(C)) throw ConfigurationError("quadric family C must be finite");
  }

  double max_beta() const { return *std::max_element(betas.begin(), betas.end()); }
  double min_beta() const { return *std::min_element(betas.begin(), betas.end()); }

  int multiplicity(double b) const {
    return static_cast<int>(std::count_if(betas.begin(), betas.end(), [&](double v) { return v == b; }));
  }

  bool pairwise_distinct() const {
    for (std::size_t i = 0; i < betas.size(); ++i)
      for (std::size_t j = i + 1; j < betas.size(); ++j)
        if (betas[i] == betas[j]) return false;
    return true;
  }

  std::vector<double> distinct_betas() const {
    std::vector<double> d = betas;
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    return d;
  }

  /// Pi(H - beta_i), counting multiplicity.
  double Pi(double H) const {
    double p = 1.0;
    for (double b : betas) p *= H - b;
    return p;
  }
};

/// Where V is pinned to zero.
///  at_infinity:       V -> 0 as H -> inf (n >= 3)
///  at_max_beta:       V = 0 at H = max beta (simple max beta)
///  at_nearest_branch: V = 0 at the nearest simple beta below H (else above);
///                     the only choice available on cone sheets between betas
enum class Reference { at_infinity, at_max_beta, at_nearest_branch };

struct HProfile {
  QuadricFamily family;
  Reference reference = Reference::at_infinity;
  int direction = +1;
  double tol = defaults::quadrature_tol;
};

struct FieldSample {
  Eigen::VectorXd point;
  double H = 0.0;
  double V = 0.0;
  double Vhat = 0.0;
};

inline Reference default_reference(const QuadricFamily& fam) {
  return fam.n() >= 3 ? Reference::at_infinity : Reference::at_max_beta;
}

inline HProfile default_profile(const QuadricFamily& fam) { return {fam, default_reference(fam), +1}; }

namespace detail {

struct BetaGroups {
  std::vector<double> beta;
  std::vector<double> weight;  // sum of x_i^2 over the group
};

inline BetaGroups group_betas(const Eigen::VectorXd& x, const QuadricFamily& fam) {
  BetaGroups g;
  g.beta = fam.distinct_betas();
  g.weight.assign(g.beta.size(), 0.0);
  for (int i = 0; i < fam.n(); ++i) {
    auto it = std::find(g.beta.begin(), g.beta.end(), fam.betas[static_cast<std::size_t>(i)]);
    g.weight[static_cast<std::size_t>(it - g.beta.begin())] += x[i] * x[i];
  }
  return g;
}

inline double rational_residual(const BetaGroups& g, double C, double H) {
  double s = 0.0;
  for (std::size_t k = 0; k < g.beta.size(); ++k)
    if (g.weight[k] != 0.0) s += g.weight[k] / (H - g.beta[k]);
  return s - C;
}

inline double rational_slope(const BetaGroups& g, double H) {
  double s = 0.0;
  for (std::size_t k = 0; k < g.beta.size(); ++k)
    if (g.weight[k] != 0.0) s -= g.weight[k] / ((H - g.beta[k]) * (H - g.beta[k]));
  return s;
}

}  // namespace detail

/// C Pi(H - b_k) - sum_k X_k Pi_{l != k}(H - b_l) over distinct betas b_k,
/// X_k the summed squares of the coordinates sharing b_k.
inline Polynomial resolvent(const Eigen::VectorXd& x, const QuadricFamily& fam) {
  if (x.size() != fam.n()) throw ConfigurationError("point dimension does not match the family");
  const auto g = detail::group_betas(x, fam);
  Polynomial all = Polynomial::constant(fam.C);
  for (double b : g.beta) all = all * Polynomial::linear_factor(b);
  Polynomial p = all;
  for (std::size_t k = 0; k < g.beta.size(); ++k) {
    Polynomial term = Polynomial::constant(g.weight[k]);
    for (std::size_t l = 0; l < g.beta.size(); ++l)
      if (l != k) term = term * Polynomial::linear_factor(g.beta[l]);
    p = p - term;
  }
  return p;
}

/// Largest real H with sum x_i^2/(H - beta_i) = C.
inline double solve_quadric_H(const Eigen::VectorXd& x, const QuadricFamily& fam) {
  fam.validate();
  if (x.size() != fam.n()) throw ConfigurationError("point dimension does not match the family");
  if (!x.allFinite()) throw ConfigurationError("point must be finite");
  const auto g = detail::group_betas(x, fam);
  const double S = x.squaredNorm();
  if (S == 0.0) throw FocalSetError("origin lies on every quadric of the family");

  const double bmin = g.beta.front(), bmax = g.beta.back();
  const double reach = (fam.C != 0.0) ? S / std::abs(fam.C) + 1.0 : 0.0;
  std::vector<double> cuts;
  cuts.push_back(bmin - reach);
  for (double b : g.beta) cuts.push_back(b);
  cuts.push_back(bmax + reach);

  const Polynomial p = resolvent(x, fam);
  const double scale = 1.0 + std::abs(fam.C) + S;
  std::vector<double> candidates;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (!(cuts[k + 1] > cuts[k])) continue;
    for (double r : find_real_roots(p, cuts[k], cuts[k + 1])) {
      bool on_pole = false;
      for (double b : g.beta)
        if (std::abs(r - b) <= 1e-12 * (1.0 + std::abs(b))) on_pole = true;
      if (!on_pole) candidates.push_back(r);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    double H = *it;
    for (int iter = 0; iter < 8; ++iter) {
      const double f = detail::rational_residual(g, fam.C, H);
      const double df = detail::rational_slope(g, H);
      if (df == 0.0) break;
      const double next = H - f / df;
      if (!std::isfinite(next) || std::abs(next - H) > 1e-6 * (1.0 + std::abs(H))) break;
      H = next;
    }
    const double res = detail::rational_residual(g, fam.C, H);
    if (std::abs(res) < 1e-10 * std::max(1.0, scale / (1.0 + std::abs(fam.C)))) {
      if (fam.C > 0.0 && g.weight.back() == 0.0 && H < bmax)
        throw FocalSetError("point lies on the focal set x_i = 0 of beta = " + std::to_string(bmax) +
                            "; no sheet above max beta");
      return H;
    }
  }
  if (fam.C > 0.0 && g.weight.back() == 0.0)
    throw FocalSetError("point lies on the focal set x_i = 0 of beta = " + std::to_string(bmax));
  throw NoSheetError("no real root of the resolvent in the admissible range");
}

namespace detail {

inline void check_profile(const HProfile& prof) {
  prof.family.validate();
  if (prof.direction != 1 && prof.direction != -1) throw ConfigurationError("profile direction must be +1 or -1");
  if (prof.reference == Reference::at_infinity && prof.family.n() < 3)
    throw ConfigurationError("reference at infinity needs n >= 3; the integral diverges for n = 2");
}

// |Pi(H - beta_i)|^(-1/2) integrated from branch point b (simple) to H via
// H' = b + s u^2, s = sign(H - b).
inline double integral_from_branch(const QuadricFamily& fam, double b, double H, double tol) {
  const double s = (H >= b) ? 1.0 : -1.0;
  const double U = std::sqrt(std::abs(H - b));
  std::vector<double> others;
  bool skipped = false;
  for (double beta : fam.betas) {
    if (!skipped && beta == b) {
      skipped = true;
      continue;
    }
    others.push_back(beta);
  }
  auto integrand = [&](double u) {
    double p = 1.0;
    for (double beta : others) p *= std::abs(b + s * u * u - beta);
    return 2.0 / std::sqrt(p);
  };
  return s * integrate_adaptive(integrand, 0.0, U, tol);
}

}  // namespace detail

/// V as a function of H alone for the given profile.
inline double V_of_H(double H, const HProfile& prof) {
  detail::check_profile(prof);
  const QuadricFamily& fam = prof.family;
  const double m = fam.max_beta();
  double V = 0.0;
  switch (prof.reference) {
    case Reference::at_infinity: {
      if (!(H > m)) throw DomainError("reference at infinity needs H > max beta");
      const double U = 1.0 / std::sqrt(H - m);
      const int n = fam.n();
      auto integrand = [&](double u) {
        double p = 1.0;
        for (double b : fam.betas) p *= 1.0 + (m - b) * u * u;
        return 2.0 * std::pow(u, n - 3) / std::sqrt(p);
      };
      V = -integrate_adaptive(integrand, 0.0, U, prof.tol);
      break;
    }
    case Reference::at_max_beta: {
      if (fam.multiplicity(m) > 1)
        throw ConfigurationError("reference at a repeated max beta diverges");
      if (!(H > m)) throw DomainError("reference at max beta needs H > max beta");
      V = detail::integral_from_branch(fam, m, H, prof.tol);
      break;
    }
    case Reference::at_nearest_branch: {
      double below = -std::numeric_limits<double>::infinity();
      double above = std::numeric_limits<double>::infinity();
      for (double b : fam.betas) {
        if (fam.multiplicity(b) != 1) continue;
        if (b <= H) below = std::max(below, b);
        if (b >= H) above = std::min(above, b);
      }
      auto blocked = [&](double ref) {
        for (double b : fam.betas)
          if ((b > std::min(ref, H) && b < std::max(ref, H))) return true;
        return false;
      };
      if (std::isfinite(below) && !blocked(below)) {
        V = detail::integral_from_branch(fam, below, H, prof.tol);
      } else if (std::isfinite(above) && !blocked(above)) {
        V = detail::integral_from_branch(fam, above, H, prof.tol);
      } else {
        throw ConfigurationError("no simple beta adjacent to H to serve as reference");
      }
      break;
    }
  }
  return prof.direction * V;
}

inline double eval_V(const Eigen::VectorXd& x, const HProfile& prof) {
  return V_of_H(solve_quadric_H(x, prof.family), prof);
}

inline double eval_V(const Eigen::VectorXd& x, const QuadricFamily& fam) {
  return eval_V(x, default_profile(fam));
}

namespace detail {

inline double weighted_s2(const Eigen::VectorXd& x, const QuadricFamily& fam, double H) {
  double s2 = 0.0;
  for (int i = 0; i < fam.n(); ++i) {
    const double d = H - fam.betas[static_cast<std::size_t>(i)];
    s2 += x[i] * x[i] / (d * d);
  }
  return s2;
}

}  // namespace detail

/// dV/dC in closed form: -|Pi|^(-1/2) / sum_i x_i^2/(H - beta_i)^2.
inline double eval_Vhat(const Eigen::VectorXd& x, const QuadricFamily& fam, int direction = +1) {
  const double H = solve_quadric_H(x, fam);
  const double s2 = detail::weighted_s2(x, fam, H);
  return -direction / (std::sqrt(std::abs(fam.Pi(H))) * s2);
}

inline FieldSample sample_field(const Eigen::VectorXd& x, const HProfile& prof) {
  FieldSample out;
  out.point = x;
  out.H = solve_quadric_H(x, prof.family);
  out.V = V_of_H(out.H, prof);
  out.Vhat = -prof.direction /
             (std::sqrt(std::abs(prof.family.Pi(out.H))) * detail::weighted_s2(x, prof.family, out.H));
  return out;
}

/// Upsilon(field) = sum_i x_i d field / d x_i by finite differences.
template <class F>
double euler_operator(F&& field, const Eigen::VectorXd& x, const FDScheme& scheme = {}) {
  const Eigen::VectorXd g = fd_gradient(field, x, scheme);
  return x.dot(g);
}

/// dV/dx_i = 2 x_i / ((H - beta_i) S2 sqrt|Pi|), from implicit differentiation.
inline Eigen::VectorXd implicit_gradient(const Eigen::VectorXd& x, const QuadricFamily& fam, int direction = +1) {
  const double H = solve_quadric_H(x, fam);
  const double s2 = detail::weighted_s2(x, fam, H);
  const double root = std::sqrt(std::abs(fam.Pi(H)));
  Eigen::VectorXd g(fam.n());
  for (int i = 0; i < fam.n(); ++i)
    g[i] = direction * 2.0 * x[i] / ((H - fam.betas[static_cast<std::size_t>(i)]) * s2 * root);
  return g;
}

/// H(V) from dH/dV = direction sqrt(Pi(H - beta_i)), starting at H0 when V = V0.
/// A stage landing at or below max beta reports a singularity.
inline Trajectory h_profile_flow(const QuadricFamily& fam, double H0, double V0, double V1, int direction = +1,
                                 double tol = defaults::ode_tol) {
  fam.validate();
  if (!(H0 > fam.max_beta())) throw DomainError("h_profile_flow needs H0 > max beta");
  const double m = fam.max_beta();
  auto rhs = [&](double v, const State& y) {
    if (!(y[0] > m))
      throw SingularityError("H(V) reached the branch point beta = " + std::to_string(m) + " near V = " +
                                 std::to_string(v),
                             v, v);
    State d(1);
    d[0] = direction * std::sqrt(fam.Pi(y[0]));
    return d;
  };
  State y0(1);
  y0[0] = H0;
  ODEOptions opt;
  opt.tol = tol;
  try {
    return ode_solve(rhs, y0, V0, V1, opt);
  } catch (SingularityError& e) {
    e.add_context("H(V) profile flow");
    throw;
  }
}

struct MatrixReductionReport {
  double zeta0 = 0.0;
  double zeta_drift = 0.0;
  double offdiag_drift = 0.0;
  double diag_gap_drift = 0.0;
  double triangle_residual = 0.0;  // max |g sqrt(Pi(H)) - 1| with H = N_nn + beta_n
  std::size_t steps = 0;
};

/// Integrates g dN/dV = I, dg/dV = -tr(N^-1)/2 from N = diag(H0 - beta_i) + offdiag,
/// g = Pi^(-1/2), and reports the conserved structure along the flow.
inline MatrixReductionReport matrix_reduction_check(const QuadricFamily& fam, double H0, double V0, double V1,
                                                    double offdiag = 0.0, double tol = defaults::ode_tol) {
  fam.validate();
  const int n = fam.n();
  if (!(H0 > fam.max_beta())) throw DomainError("matrix_reduction_check needs H0 > max beta");
  Eigen::MatrixXd N0 = Eigen::MatrixXd::Constant(n, n, offdiag);
  for (int i = 0; i < n; ++i) N0(i, i) = H0 - fam.betas[static_cast<std::size_t>(i)];
  const double g0 = 1.0 / std::sqrt(fam.Pi(H0));

  State y0(n * n + 1);
  y0.head(n * n) = Eigen::Map<const Eigen::VectorXd>(N0.data(), n * n);
  y0[n * n] = g0;

  auto rhs = [n](double, const State& y) {
    Eigen::Map<const Eigen::MatrixXd> N(y.data(), n, n);
    const double g = y[n * n];
    State d = State::Zero(n * n + 1);
    Eigen::Map<Eigen::MatrixXd> dN(d.data(), n, n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(N);
    if (!lu.isInvertible()) {
      d.setConstant(std::numeric_limits<double>::quiet_NaN());
      return d;
    }
    dN = Eigen::MatrixXd::Identity(n, n) / g;
    d[n * n] = -0.5 * lu.inverse().trace();
    return d;
  };
  ODEOptions opt;
  opt.tol = tol;
  Trajectory tr = ode_solve(rhs, y0, V0, V1, opt);

  MatrixReductionReport rep;
  rep.zeta0 = g0 * g0 * N0.determinant();
  rep.steps = tr.size();
  const double bn = fam.betas.back();
  for (const auto& y : tr.states()) {
    Eigen::Map<const Eigen::MatrixXd> N(y.data(), n, n);
    const double g = y[n * n];
    rep.zeta_drift = std::max(rep.zeta_drift, std::abs(g * g * N.determinant() - rep.zeta0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) rep.offdiag_drift = std::max(rep.offdiag_drift, std::abs(N(i, j) - N0(i, j)));
      }
      if (i > 0) {
        const double gap = N(i, i) - N(0, 0);
        const double gap0 = N0(i, i) - N0(0, 0);
        rep.diag_gap_drift = std::max(rep.diag_gap_drift, std::abs(gap - gap0));
      }
    }
    if (offdiag == 0.0) {
      const double H = N(n - 1, n - 1) + bn;
      rep.triangle_residual = std::max(rep.triangle_residual, std::abs(g * std::sqrt(fam.Pi(H)) - 1.0));
    }
  }
  return rep;
}

/// Focal parameter of the n = 2 conics: the foci sit at z = +-sqrt(-alpha).
inline double n2_alpha(const QuadricFamily& fam) { return fam.C * (fam.betas[0] - fam.betas[1]); }

/// 2 Re ln(z + sqrt(z^2 + alpha)), z = x1 + i x2, alpha = n2_alpha(fam).
/// The root is continued inward along the ray from |z| = 1e3 (|alpha| + |z|),
/// where it is taken close to z, on a geometric grid.
inline double n2_closed_form(const Eigen::VectorXd& x, double alpha);

inline double n2_closed_form(const Eigen::VectorXd& x, const QuadricFamily& fam) {
  if (fam.n() != 2) throw ConfigurationError("n2_closed_form needs n = 2");
  if (fam.C == 0.0) throw ConfigurationError("n2_closed_form needs C != 0");
  return n2_closed_form(x, n2_alpha(fam));
}

inline double n2_closed_form(const Eigen::VectorXd& x, double alpha) {
  const cplx z(x[0], x[1]);
  if (std::abs(z) == 0.0) throw FocalSetError("n2_closed_form undefined at the origin");
  const double far = 1e3 * (std::abs(alpha) + std::abs(z));
  const cplx dir = z / std::abs(z);
  auto path = [&](double t) {
    const cplx zt = dir * std::exp(std::log(far) + t * (std::log(std::abs(z)) - std::log(far)));
    return zt * zt + alpha;
  };
  const cplx w = sqrt_along_path(path, dir * far, 4096);
  return 2.0 * std::log(std::abs(z + w));
}

}  // namespace qh
