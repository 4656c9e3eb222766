#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qh/geometry.hpp"
#include "qh/monopole.hpp"
#include "qh/nahm.hpp"
#include "qh/numerics.hpp"
#include "qh/quadric.hpp"
#include "qh/settings.hpp"
#include "qh/twistor.hpp"

namespace qh {

/// One measured quantity against its threshold. Gated checks must satisfy
/// value < tol (or value > tol for lower bounds); ungated ones are reported only.
struct Check {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool upper = true;
  bool gated = true;

  bool pass() const {
    if (!gated) return true;
    if (!std::isfinite(value)) return false;
    return upper ? value < tol : value > tol;
  }
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<Check> checks;
  std::string error;  // exception text when the criterion could not be evaluated
  double seconds = 0.0;

  bool pass() const {
    if (!error.empty() || checks.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
  }
};

struct AcceptanceOptions {
  bool quick = false;
  std::uint64_t seed = 20240601;
  Settings settings;
};

namespace accept {

constexpr double pi = std::numbers::pi;

inline Eigen::VectorXd direction(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::VectorXd u(n);
  do {
    for (int i = 0; i < n; ++i) u[i] = g(rng);
  } while (u.norm() < 1e-6);
  return u.normalized();
}

/// x_i = sqrt(C (H - beta_i)) u_i, a point on the quadric of parameter H.
inline Eigen::VectorXd on_quadric(const QuadricFamily& fam, double H, const Eigen::VectorXd& u) {
  Eigen::VectorXd x(fam.n());
  for (int i = 0; i < fam.n(); ++i) x[i] = std::sqrt(fam.C * (H - fam.betas[static_cast<std::size_t>(i)])) * u[i];
  return x;
}

inline double stddev(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double d : v) acc += (d - mean) * (d - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

inline std::vector<Eigen::Vector3d> ball_points(std::mt19937_64& rng, int count, double rmin, double rmax) {
  std::uniform_real_distribution<double> r(rmin, rmax);
  std::vector<Eigen::Vector3d> out;
  for (int i = 0; i < count; ++i) out.push_back(r(rng) * Eigen::Vector3d(direction(rng, 3)));
  return out;
}

inline Vec3 eh_state(double rho, double a = 1.0) {
  const double q = std::sqrt(rho * rho - a * a);
  return {q, q, rho};
}

struct Families {
  QuadricFamily n2{{1.0, 0.0}, 1.0};
  QuadricFamily eh{{1.0, 1.0, 0.0}, 1.0};
  QuadricFamily n3{{0.9, 0.35, -0.25}, 1.3};
  QuadricFamily n4{{1.2, 0.5, -0.4, -1.0}, 0.8};
};

// Criterion 1 points: EH family, H = rho^2 with rho in (1.2, 5).
inline std::vector<Eigen::VectorXd> eh_points(const AcceptanceOptions& o, int count) {
  std::mt19937_64 rng(o.seed + 1);
  std::uniform_real_distribution<double> rho(1.2, 5.0);
  const Families f;
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < count; ++k) {
    const double r = rho(rng);
    out.push_back(on_quadric(f.eh, r * r, direction(rng, 3)));
  }
  return out;
}

inline HProfile profile(const QuadricFamily& fam, const Settings& s) {
  HProfile p = default_profile(fam);
  p.tol = s.quad_tol;
  return p;
}

inline void c1(const AcceptanceOptions& o, CriterionResult& r) {
  const Families f;
  HProfile prof{f.eh, Reference::at_infinity, +1, o.settings.quad_tol};
  double worst = 0.0;
  for (const auto& x : eh_points(o, o.quick ? 5 : 20)) {
    const double ref = eguchi_hanson_reference(Eigen::Vector3d(x), 1.0).V;
    worst = std::max(worst, std::abs(eval_V(x, prof) - ref) / std::abs(ref));
  }
  r.checks.push_back({"max_rel_err", worst, 1e-8});
}

inline void c2(const AcceptanceOptions& o, CriterionResult& r) {
  const Families f;
  const int count = o.quick ? 4 : 20;
  const FDScheme fd = o.settings.fd();
  auto worst_on = [&](const QuadricFamily& fam, const std::vector<Eigen::VectorXd>& pts) {
    const HProfile prof = profile(fam, o.settings);
    auto V = [&](const Eigen::VectorXd& p) { return eval_V(p, prof); };
    double w = 0.0;
    for (const auto& x : pts) w = std::max(w, std::abs(fd_laplacian(V, x, fd).laplacian));
    return w;
  };
  auto sample = [&](const QuadricFamily& fam, std::uint64_t salt) {
    std::mt19937_64 rng(o.seed + salt);
    std::uniform_real_distribution<double> dH(0.5, 4.0);
    std::vector<Eigen::VectorXd> pts;
    for (int k = 0; k < count; ++k) pts.push_back(on_quadric(fam, fam.max_beta() + dH(rng), direction(rng, fam.n())));
    return pts;
  };
  r.checks.push_back({"laplacian_n2", worst_on(f.n2, sample(f.n2, 21)), 1e-5});
  r.checks.push_back({"laplacian_n3_eh", worst_on(f.eh, eh_points(o, count)), 1e-5});
  r.checks.push_back({"laplacian_n3", worst_on(f.n3, sample(f.n3, 23)), 1e-5});
  r.checks.push_back({"laplacian_n4", worst_on(f.n4, sample(f.n4, 24)), 1e-5});
}

inline void c3(const AcceptanceOptions& o, CriterionResult& r) {
  const Families f;
  std::mt19937_64 rng(o.seed + 3);
  const std::vector<double> offsets = o.quick ? std::vector<double>{1.0} : std::vector<double>{0.3, 1.0, 6.0};
  for (const auto* fam : {&f.n2, &f.eh, &f.n3, &f.n4}) {
    const HProfile prof = profile(*fam, o.settings);
    double worst = 0.0;
    for (double dH : offsets) {
      const double H = fam->max_beta() + dH;
      // a closed curve on the quadric: u(t) = normalize(cos t e1 + sin t e2 + 0.4 sin 3t e3 + ...)
      const Eigen::VectorXd tilt = direction(rng, fam->n());
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int k = 0; k < 50; ++k) {
        const double t = 2.0 * pi * k / 50.0;
        Eigen::VectorXd u = Eigen::VectorXd::Zero(fam->n());
        u[0] = std::cos(t);
        u[1] = std::sin(t);
        for (int i = 2; i < fam->n(); ++i) u[i] = 0.4 * std::sin((i + 1) * t);
        u += 0.3 * tilt;
        const double v = eval_V(on_quadric(*fam, H, u.normalized()), prof);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      worst = std::max(worst, hi - lo);
    }
    r.checks.push_back({"spread_n" + std::to_string(fam->n()) + (fam == &f.eh ? "_eh" : ""), worst, 1e-9});
  }
}

inline void c4(const AcceptanceOptions& o, CriterionResult& r) {
  const Families f;
  std::mt19937_64 rng(o.seed + 4);
  std::uniform_real_distribution<double> dH(0.4, 5.0);
  const int count = o.quick ? 5 : 20;
  for (const auto* fam : {&f.eh, &f.n3}) {
    const HProfile prof = profile(*fam, o.settings);
    auto V = [&](const Eigen::VectorXd& p) { return eval_V(p, prof); };
    double worst = 0.0;
    for (int k = 0; k < count; ++k) {
      const Eigen::VectorXd x = on_quadric(*fam, fam->max_beta() + dH(rng), direction(rng, 3));
      worst = std::max(worst, std::abs(euler_operator(V, x, o.settings.fd()) + 2.0 * fam->C * eval_Vhat(x, *fam)));
    }
    r.checks.push_back({fam == &f.eh ? "scaling_eh" : "scaling_n3", worst, 1e-6});
  }
}

inline void c5(const AcceptanceOptions& o, CriterionResult& r) {
  std::mt19937_64 rng(o.seed + 5);
  std::uniform_real_distribution<double> dH(0.2, 6.0);
  const int count = o.quick ? 8 : 20;
  auto spread = [&](const QuadricFamily& fam, double alpha) {
    const HProfile prof = profile(fam, o.settings);
    std::vector<double> d;
    for (int k = 0; k < count; ++k) {
      const Eigen::VectorXd x = on_quadric(fam, fam.max_beta() + dH(rng), direction(rng, 2));
      d.push_back(eval_V(x, prof) - n2_closed_form(x, alpha));
    }
    return stddev(d);
  };
  // normalized family b1 + b2 = 1, C = 1: alpha = (2 b1 - 1)/C
  const QuadricFamily normalized{{0.8, 0.2}, 1.0};
  r.checks.push_back({"std_quoted_alpha_C1", spread(normalized, (2.0 * 0.8 - 1.0) / normalized.C), 1e-8});
  const QuadricFamily general{{0.3, -0.9}, 1.7};
  r.checks.push_back({"std_derived_alpha_C1.7", spread(general, n2_alpha(general)), 1e-8});
}

inline void c6(const AcceptanceOptions& o, CriterionResult& r) {
  double drift = 0.0, rel = 0.0, abs_res = 0.0;
  for (const Vec3& w0 : {Vec3(1, 2, 3), eh_state(2.0), Vec3(0.5, 1.5, 1.0)}) {
    const double sb = euler_blowup(w0);
    if (!std::isfinite(sb)) throw NumericalFailure("Euler flow without blow-up in the acceptance set");
    const auto tr = euler_flow(w0, 0.0, 0.8 * sb, o.settings.ode_tol);
    const auto inv0 = elliptic_invariants(w0);
    for (const auto& y : tr.states()) {
      const Vec3 w(y[0], y[1], y[2]);
      const auto now = elliptic_invariants(w);
      const auto ref = elliptic_invariants(w, &w0);
      drift = std::max({drift, std::abs(now.A - inv0.A), std::abs(now.B - inv0.B)});
      rel = std::max(rel, ref.residual_H_rel);
      abs_res = std::max(abs_res, ref.residual_H);
    }
  }
  r.checks.push_back({"invariant_drift", drift, 1e-10});
  r.checks.push_back({"triangle_residual_rel", rel, 1e-8});
  r.checks.push_back({"triangle_residual_abs", abs_res, 1e-8, true, false});
}

inline void c7(const AcceptanceOptions& o, CriterionResult& r) {
  const auto grid = angle_grid(8, 8);
  const double sb = eguchi_hanson_blowup(2.0, 1.0);
  FlowSource eh = [sb](double s) { return eguchi_hanson_flow(s, 1.0, sb); };
  FlowSource flat = [](double s) { return flat_flow(s); };
  const std::vector<double> eh_s = o.quick ? std::vector<double>{0.3 * sb} : std::vector<double>{0.0, 0.3 * sb, 0.6 * sb};
  const std::vector<double> flat_s = o.quick ? std::vector<double>{0.25} : std::vector<double>{0.0, 0.25, 0.5};
  r.checks.push_back({"nahm_eh", nahm_residual(eh, eh_s, grid), 1e-8});
  r.checks.push_back({"nahm_flat", nahm_residual(flat, flat_s, grid), 1e-8});

  double nambu = 0.0;
  std::mt19937_64 rng(o.seed + 7);
  std::uniform_real_distribution<double> s(-0.2, 0.2), psi(0.0, 2.0 * pi), p(-0.9, 0.9);
  for (const Vec3& w0 : {eh_state(2.0), Vec3(1, 1, 1), Vec3(1, 2, 3)}) {
    const EulerFlow flow(w0);
    auto x = [&](const Eigen::VectorXd& q) {
      const Vec3 w = flow.w(q[0]);
      const Vec3 h = sphere_hamiltonians({std::acos(q[2]), q[1]});
      return Eigen::VectorXd(w.cwiseProduct(h));
    };
    for (int k = 0; k < (o.quick ? 2 : 5); ++k) {
      Eigen::VectorXd at(3);
      at << 0.1 * s(rng), psi(rng), p(rng);
      nambu = std::max(nambu, nambu_residual(x, at, o.settings.fd()).max_abs);
    }
  }
  r.checks.push_back({"nambu", nambu, 1e-6});
}

inline void c8(const AcceptanceOptions& o, CriterionResult& r) {
  double det = 0.0, tr = 0.0;
  for (const Vec3& w0 : {Vec3(1, 2, 3), eh_state(2.0)}) {
    const double sb = euler_blowup(w0);
    const auto rep = lax_spectral_check(LaxPair::embed(w0), 0.0, 0.5 * sb, default_lax_lambdas(), o.settings.ode_tol);
    det = std::max(det, rep.det_drift);
    tr = std::max(tr, rep.trace_sq_drift);
  }
  r.checks.push_back({"det_drift", det, 1e-9});
  r.checks.push_back({"trace_sq_drift", tr, 1e-9});
}

inline void c9(const AcceptanceOptions& o, CriterionResult& r) {
  std::mt19937_64 rng(o.seed + 9);
  const auto F = kernels::inv_mu();
  const auto pts = ball_points(rng, 10, 1.0, 3.0);
  double transform = 0.0, lap = 0.0, dil = 0.0;
  auto V = [&](const Eigen::VectorXd& y) { return penrose_transform(F, Eigen::Vector3d(y)); };
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& x = pts[k];
    transform = std::max(transform, std::abs(penrose_transform(F, x) * x.norm() + cplx(0.0, pi)));
    if (o.quick && k >= 3) continue;
    const auto d = fd_laplacian(V, Eigen::VectorXd(x), o.settings.fd());
    lap = std::max(lap, std::abs(d.laplacian));
    if (k < 5) {
      cplx euler{0.0, 0.0};
      for (int i = 0; i < 3; ++i) euler += x[i] * d.gradient[i];
      dil = std::max(dil, std::abs(dilation_transform(F, x) - euler));
    }
  }
  r.checks.push_back({"transform_residual", transform, 1e-8});
  r.checks.push_back({"laplacian", lap, 1e-5});
  r.checks.push_back({"dilation_vs_euler", dil, 1e-6});
}

inline void c10(const AcceptanceOptions& o, CriterionResult& r) {
  std::mt19937_64 rng(o.seed + 10);
  double repro = 0.0, global = 0.0, mono = 0.0;
  const auto ml = kernels::mu_over_lambda();
  const auto lg = kernels::neg_log_mu();
  for (const auto& x : ball_points(rng, o.quick ? 1 : 3, 0.8, 2.5)) {
    const IncidenceSection sec(x);
    // f = mu / lambda: df/dmu = 1/lambda, pi.h = -1 everywhere
    std::uniform_real_distribution<double> ang(0.0, 2.0 * pi), rad(0.1, 2.0);
    for (int k = 0; k < 5; ++k) {
      const cplx l = std::polar(rad(rng), ang(rng));
      const auto [g0, g1] = splitting_contours(sec, ml, l);
      const auto s = splitting(ml, x, l, g0, g1);
      repro = std::max(repro, s.reproduction_residual);
      global = std::max({global, std::abs(s.pi_h0 + 1.0), std::abs(s.pi_h1 + 1.0)});
    }
    const auto lp = sec.lambda_plus();
    const auto lm = sec.lambda_minus();
    if (!lp || !lm) continue;
    std::vector<cplx> ph;
    for (int k = 0; k < 5; ++k) {
      const cplx l = *lp + 0.3 * std::abs(*lp - *lm) * std::polar(1.0, ang(rng));
      const auto [g0, g1] = splitting_contours(sec, lg, l);
      const auto s = splitting(lg, x, l, g0, g1);
      repro = std::max(repro, s.reproduction_residual);
      ph.push_back(s.pi_h0);
      global = std::max(global, std::abs(s.pi_h0 - s.pi_h1));
    }
    for (const cplx v : ph) global = std::max(global, std::abs(v - ph.front()));
  }
  for (const auto& x : ball_points(rng, o.quick ? 2 : 6, 0.8, 2.5))
    mono = std::max(mono, phi_monopole_residual(lg, x, o.settings.fd()).max_abs);
  r.checks.push_back({"splitting_reproduction", repro, 1e-8});
  r.checks.push_back({"pi_h_constancy", global, 1e-8});
  r.checks.push_back({"monopole_neg_log_mu", mono, 1e-5});
}

inline void c11(const AcceptanceOptions& o, CriterionResult& r) {
  std::mt19937_64 rng(o.seed + 11);
  std::uniform_real_distribution<double> th(0.3, pi - 0.3), ang(0.0, 2.0 * pi);
  const FDScheme fd = o.settings.fd();

  double structure = 0.0;
  for (int k = 0; k < 10; ++k)
    structure = std::max(structure, structure_residual(Eigen::Vector3d(th(rng), ang(rng), ang(rng)), fd).max_abs);
  r.checks.push_back({"structure", structure, 1e-8});

  double closure = 0.0;
  const int n = o.quick ? 2 : 4;
  for (const Vec3& w0 : {eh_state(2.0), Vec3(1.2, 1.5, 2.0)}) {
    const auto forms = selfdual_forms_bgpp(flow_source(EulerFlow(w0)));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            const Vec4 p(-0.2 + 0.35 * a / std::max(1, n - 1), 0.4 + 2.2 * b / std::max(1, n - 1),
                         1.5 * c, 0.3 + 1.6 * d);
            for (const auto& om : forms) closure = std::max(closure, exterior_derivative(om, p, fd).max_abs);
          }
  }
  r.checks.push_back({"closure_dOmega", closure, 1e-6});

  double eh_ricci = 0.0;
  for (const Vec4& p : {Vec4(1.5, 1.0, 0.5, 0.7), Vec4(2.5, 2.0, 1.0, 3.0), Vec4(1.2, 0.6, 4.0, 1.0)}) {
    eh_ricci = std::max(eh_ricci, ricci_fd(eguchi_hanson_chart(1.0), p, fd).max_abs);
    if (o.quick) break;
  }
  r.checks.push_back({"ricci_eh", eh_ricci, 1e-4});
  const double flat = std::max(ricci_fd(flat_polar_chart(), Vec4(1.3, 1.0, 0.5, 0.7), fd).max_abs,
                               ricci_fd(bgpp_metric(flow_source(EulerFlow(Vec3(1, 1, 1)))), Vec4(0.1, 1.0, 0.5, 0.7), fd).max_abs);
  r.checks.push_back({"ricci_flat", flat, 1e-8});

  double kk = 0.0;
  for (const Vec3& w0 : {eh_state(2.0), Vec3(1.2, 1.5, 2.0), Vec3(1, 1, 1)}) {
    const auto src = flow_source(EulerFlow(w0));
    for (int k = 0; k < (o.quick ? 3 : 10); ++k) {
      const auto c = to_gh_coordinates(src, Eigen::Vector3d(th(rng), ang(rng), ang(rng)), 0.1);
      kk = std::max(kk, std::abs(c.KK * c.Vhat - 1.0));
    }
  }
  r.checks.push_back({"killing_norm", kk, 1e-6});
}

inline void c12(const AcceptanceOptions& o, CriterionResult& r) {
  const auto frozen = selfdual_forms_bgpp(frozen_source(Vec3(1, 2, 3)));
  double smallest = std::numeric_limits<double>::infinity();
  for (const Vec4& p : {Vec4(0.0, 1.0, 0.5, 0.7), Vec4(0.3, 2.0, 1.0, 2.0), Vec4(-0.2, 0.7, 3.0, 4.0)}) {
    double worst = 0.0;
    for (const auto& om : frozen) worst = std::max(worst, exterior_derivative(om, p, o.settings.fd()).max_abs);
    smallest = std::min(smallest, worst);
  }
  r.checks.push_back({"frozen_dOmega_min", smallest, 1e-2, false});

  // a circle around both roots of mu violates the separation rule
  const Eigen::Vector3d x(0.5, 0.5, 1.0);
  const IncidenceSection sec(x);
  const cplx lp = *sec.lambda_plus(), lm = *sec.lambda_minus();
  double raised = 0.0;
  try {
    penrose_transform(kernels::inv_mu(), x, Contour{0.5 * (lp + lm), std::abs(lp - lm)});
  } catch (const ContourError&) {
    raised = 1.0;
  }
  r.checks.push_back({"wrong_contour_error_raised", raised, 0.5, false});
}

struct Entry {
  int id;
  const char* name;
  void (*run)(const AcceptanceOptions&, CriterionResult&);
};

inline const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      {1, "eguchi-hanson agreement", c1},   {2, "harmonicity", c2},
      {3, "level sets", c3},                {4, "scaling identity", c4},
      {5, "n=2 closed form", c5},           {6, "euler flow invariants", c6},
      {7, "nahm residual", c7},             {8, "lax conservation", c8},
      {9, "twistor transform", c9},         {10, "splitting and phi", c10},
      {11, "geometry", c11},                {12, "negative controls", c12},
  };
  return entries;
}

}  // namespace accept

inline CriterionResult run_criterion(int id, const AcceptanceOptions& opt) {
  for (const auto& e : accept::registry()) {
    if (e.id != id) continue;
    CriterionResult r;
    r.id = e.id;
    r.name = e.name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      e.run(opt, r);
    } catch (const std::exception& ex) {
      r.error = ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }
  throw ConfigurationError("no acceptance criterion " + std::to_string(id));
}

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt) {
  std::vector<CriterionResult> out;
  for (const auto& e : accept::registry()) out.push_back(run_criterion(e.id, opt));
  return out;
}

/// "PASS  3 level sets: spread_n2=1.2e-15 (<1e-09) ..."
inline std::string format_line(const CriterionResult& r) {
  char buf[96];
  std::string line = r.pass() ? "PASS " : "FAIL ";
  std::snprintf(buf, sizeof buf, "%2d %s:", r.id, r.name.c_str());
  line += buf;
  for (const auto& c : r.checks) {
    std::snprintf(buf, sizeof buf, " %s=%.3g", c.name.c_str(), c.value);
    line += buf;
    if (c.gated) {
      std::snprintf(buf, sizeof buf, " (%s%.0e)", c.upper ? "<" : ">", c.tol);
      line += buf;
    }
  }
  if (!r.error.empty()) line += " error: " + r.error;
  return line;
}

}  // namespace qh
