#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qh/nahm.hpp"
#include "qh/quadric.hpp"

using namespace qh;
using Catch::Approx;

namespace {

Vec3 eh_initial(double rho0, double a = 1.0) {
  const double q = std::sqrt(rho0 * rho0 - a * a);
  return {q, q, rho0};
}

}  // namespace

TEST_CASE("euler_flow reference solutions", "[nahm][euler]") {
  auto flat = euler_flow(Vec3(1, 1, 1), 0.0, 0.5);
  for (int i = 0; i < 3; ++i) CHECK(flat.states().back()[i] == Approx(2.0).epsilon(1e-11));

  const Vec3 w0 = eh_initial(2.0);
  auto eh = euler_flow(w0, 0.0, 0.2);
  for (const auto& w : eh.states()) {
    CHECK(std::abs(w[0] - w[1]) < 1e-12);
    CHECK(std::abs(w[0] - std::sqrt(w[2] * w[2] - 1.0)) < 1e-10);
  }
  const double sb = eguchi_hanson_blowup(2.0, 1.0);
  const FlowSample ref = eguchi_hanson_flow(0.2, 1.0, sb);
  CHECK(eh.states().back()[2] == Approx(ref.w[2]).epsilon(1e-11));

  auto inv = elliptic_invariants(Vec3(1, 2, 3));
  CHECK(inv.A == -8.0);
  CHECK(inv.B == -5.0);
}

TEST_CASE("euler_flow conserves A and B up to near blow-up", "[nahm][euler][property]") {
  for (const Vec3& w0 : {Vec3(1, 2, 3), eh_initial(2.0), Vec3(0.5, 1.5, 1.0)}) {
    const double sb = euler_blowup(w0);
    REQUIRE(std::isfinite(sb));
    auto tr = euler_flow(w0, 0.0, 0.8 * sb);
    for (const auto& y : tr.states()) {
      const Vec3 w(y[0], y[1], y[2]);
      const auto inv = elliptic_invariants(w, &w0);
      const auto now = elliptic_invariants(w);
      CHECK(std::abs(now.A - inv.A) < 1e-10);
      CHECK(std::abs(now.B - inv.B) < 1e-10);
      // both sides reach ~1e6 near blow-up, so the absolute value sits on rounding
      CHECK(inv.residual_H_rel < 1e-12);
    }
  }
}

TEST_CASE("euler blow-up is reported with an estimate", "[nahm][euler]") {
  CHECK(euler_blowup(Vec3(1, 1, 1)) == Approx(1.0).epsilon(1e-10));
  CHECK(euler_blowup(eh_initial(2.0)) == Approx(eguchi_hanson_blowup(2.0, 1.0)).epsilon(1e-10));
  try {
    euler_flow(Vec3(1, 1, 1), 0.0, 3.0);
    FAIL("expected SingularityError");
  } catch (const SingularityError& e) {
    CHECK(e.singularity_estimate() == Approx(1.0).margin(1e-4));
    CHECK(e.last_valid_parameter() < 1.0);
  }
  // mixed signs fall back on the integrator's estimate
  CHECK(std::isfinite(euler_blowup(Vec3(-1.0, -1.0, 1.0))));
}

TEST_CASE("Taylor evaluator agrees with the integrator and closed forms", "[nahm][euler]") {
  const Vec3 w0(1, 2, 3);
  EulerFlow flow(w0);
  const double sb = euler_blowup(w0);
  auto tr = euler_flow(w0, 0.0, 0.8 * sb);
  for (double frac : {0.1, 0.4, 0.8}) {
    const double s = frac * sb;
    CHECK((flow.w(s) - Vec3(tr.at(s).head<3>())).norm() < 1e-9 * flow.w(s).norm());
  }
  EulerFlow flat(Vec3(1, 1, 1));
  CHECK((flat.w(0.75) - flat_flow(0.75).w).norm() < 1e-13);
  CHECK((flat.w(-2.0) - flat_flow(-2.0).w).norm() < 1e-13);

  const double sb_eh = eguchi_hanson_blowup(1.5, 1.0);
  EulerFlow eh(eh_initial(1.5));
  CHECK((eh.w(0.5 * sb_eh) - eguchi_hanson_flow(0.5 * sb_eh, 1.0, sb_eh).w).norm() < 1e-12);
  CHECK_THROWS_AS(flat.w(1.5), SingularityError);
}

TEST_CASE("elliptic invariants on reference states", "[nahm][euler]") {
  const auto eh = elliptic_invariants(Vec3(std::sqrt(3.0), std::sqrt(3.0), 2.0));
  CHECK(eh.residual < 1e-12);
  CHECK(eh.A == Approx(-1.0));
  CHECK(eh.H == Approx(4.0 + eh.beta3));
  const double dH = 2.0 * 2.0 * 3.0;
  CHECK(dH * dH == Approx(4.0 * (eh.H - eh.beta1) * (eh.H - eh.beta2) * (eh.H - eh.beta3)));
  CHECK(eh.residual_H < 1e-12);
  CHECK(elliptic_invariants(Vec3(1, 1, 1)).residual == 0.0);
}

TEST_CASE("sphere Hamiltonians and bracket", "[nahm][bracket]") {
  CHECK((sphere_hamiltonians({0.0, 1.3}) - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK((sphere_hamiltonians({std::numbers::pi / 2, std::numbers::pi / 2}) - Vec3(1, 0, 0)).norm() < 1e-15);

  const SphereCoords c{std::numbers::pi / 3, 0.7};
  CHECK(poisson_bracket(hamiltonian(0), hamiltonian(1), c) == Approx(0.5).margin(1e-8));
  CHECK(std::abs(poisson_bracket(hamiltonian(2), hamiltonian(2), c)) < 1e-12);
  CHECK(poisson_bracket(hamiltonian(1), hamiltonian(2), c) == Approx(sphere_hamiltonians(c)[0]).margin(1e-8));
  CHECK_THROWS_AS(poisson_bracket(hamiltonian(0), hamiltonian(1), SphereCoords{1e-3, 0.0}), PoleError);
}

TEST_CASE("bracket structure constants and Casimir on a grid", "[nahm][bracket][property]") {
  auto casimir = [](const SphereCoords& c) { return sphere_hamiltonians(c).squaredNorm(); };
  double worst = 0.0, worst_casimir = 0.0, worst_norm = 0.0;
  for (const auto& c : angle_grid(16, 16)) {
    const Vec3 h = sphere_hamiltonians(c);
    worst_norm = std::max(worst_norm, std::abs(h.squaredNorm() - 1.0));
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      worst = std::max(worst, std::abs(poisson_bracket(hamiltonian(i), hamiltonian(j), c) - h[k]));
      worst = std::max(worst, std::abs(poisson_bracket(hamiltonian(j), hamiltonian(i), c) + h[k]));
      worst_casimir = std::max(worst_casimir, std::abs(poisson_bracket(casimir, hamiltonian(i), c)));
    }
  }
  CHECK(worst < 1e-8);
  CHECK(worst_casimir < 1e-8);
  CHECK(worst_norm < 1e-15);
}

TEST_CASE("nahm_residual on Euler flows and a negative control", "[nahm][residual]") {
  const auto grid = angle_grid(8, 8);
  const double sb = eguchi_hanson_blowup(2.0, 1.0);
  FlowSource eh = [sb](double s) { return eguchi_hanson_flow(s, 1.0, sb); };
  CHECK(nahm_residual(eh, {0.0, 0.3 * sb, 0.6 * sb}, grid) < 1e-8);
  FlowSource flat = [](double s) { return flat_flow(s); };
  CHECK(nahm_residual(flat, {0.0, 0.25, 0.5}, grid) < 1e-8);
  CHECK(nahm_residual(euler_flow(Vec3(1, 2, 3), 0.0, 0.1), grid) < 1e-8);

  FlowSource frozen = [](double) { return FlowSample{Vec3(1, 2, 3), Vec3::Zero()}; };
  CHECK(nahm_residual(frozen, {0.0}, grid) > 1.0);
}

TEST_CASE("x_i = w_i h_i lies on the quadric and matches its H", "[nahm][property]") {
  const Vec3 w0(1, 2, 3);
  EulerFlow flow(w0);
  const auto inv0 = elliptic_invariants(w0);
  const QuadricFamily fam{{inv0.beta1, inv0.beta2, inv0.beta3}, 1.0};
  const HProfile prof = default_profile(fam);
  const auto grid = angle_grid(3, 4);
  double v_ref = 0.0;
  for (double s : {0.0, 0.05, 0.1}) {
    const Vec3 w = flow.w(s);
    const double H = elliptic_invariants(w, &w0).H;
    for (const auto& c : grid) {
      const Vec3 h = sphere_hamiltonians(c);
      Eigen::VectorXd x(3);
      for (int i = 0; i < 3; ++i) x[i] = w[i] * h[i];
      double q = 0.0;
      for (int i = 0; i < 3; ++i) q += x[i] * x[i] / (w[i] * w[i]);
      CHECK(q == Approx(1.0).epsilon(1e-14));
      CHECK(solve_quadric_H(x, fam) == Approx(H).epsilon(1e-8));
    }
    // V = 2 s + const
    const double v = V_of_H(H, prof) - 2.0 * s;
    if (s == 0.0) v_ref = v;
    CHECK(v == Approx(v_ref).margin(1e-8));
  }
}

TEST_CASE("nambu_residual", "[nahm][nambu]") {
  EulerFlow flow(Vec3(1, 2, 3));
  auto x3 = [&](const Eigen::VectorXd& p) {
    const Vec3 w = flow.w(p[0]);
    const Vec3 h = sphere_hamiltonians({std::acos(p[2]), p[1]});
    Eigen::VectorXd out(3);
    for (int i = 0; i < 3; ++i) out[i] = w[i] * h[i];
    return out;
  };
  Eigen::VectorXd at(3);
  at << 0.1, 0.7, 0.3;
  auto rep = nambu_residual(x3, at);
  CHECK(rep.max_abs < 1e-6);
  CHECK_FALSE(rep.degenerate);

  auto constant = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(3, 2.0).eval(); };
  auto rc = nambu_residual(constant, at);
  CHECK(rc.max_abs < 1e-12);
  CHECK(rc.degenerate);

  auto p_only = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd out(3);
    out << std::sin(p[1]), p[2] * p[2], std::cos(p[1]) + p[2];
    return out;
  };
  CHECK(nambu_residual(p_only, at).max_abs > 1e-2);

  auto x2 = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd out(2);
    out << std::exp(p[0]) * std::cos(p[1]), std::exp(p[0]) * std::sin(p[1]);
    return out;
  };
  Eigen::VectorXd at2(2);
  at2 << 0.2, 1.1;
  CHECK(nambu_residual(x2, at2).max_abs < 1e-6);
}

TEST_CASE("Lax pair and spectral curve", "[nahm][lax]") {
  const auto tau = su2_basis();
  auto br = [](const Mat2c& a, const Mat2c& b) -> Mat2c { return a * b - b * a; };
  CHECK((br(tau[0], tau[1]) - tau[2]).norm() < 1e-15);
  CHECK((br(tau[1], tau[2]) - tau[0]).norm() < 1e-15);

  auto rep = lax_spectral_check(LaxPair::embed(Vec3(1, 2, 3)), 0.0, 0.2);
  CHECK(rep.lax_residual < 1e-9);
  CHECK(rep.det_drift < 1e-9);
  CHECK(rep.trace_sq_drift < 1e-9);
  // det A = [A (1 - l^2)^2 - B (1 + l^2)^2] / 4 with A = -8, B = -5
  for (const cplx l : rep.lambdas) {
    const cplx expect = (-8.0 * (1.0 - l * l) * (1.0 - l * l) + 5.0 * (1.0 + l * l) * (1.0 + l * l)) / 4.0;
    CHECK(std::abs(rep.spectral_polynomial(l) - expect) < 1e-12);
  }

  auto flat = lax_spectral_check(LaxPair::embed(Vec3(1, 1, 1)), 0.0, 0.5);
  for (const cplx c : flat.spectral_polynomial.coefficients()) CHECK(std::abs(c) < 1e-14);
  CHECK(flat.det_drift < 1e-9);

  auto zero = lax_spectral_check(LaxPair{}, 0.0, 1.0);
  CHECK(zero.lax_residual == 0.0);
  CHECK(zero.det_drift == 0.0);
}
