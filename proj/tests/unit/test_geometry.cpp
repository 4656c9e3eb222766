#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qh/geometry.hpp"
#include "qh/monopole.hpp"

using namespace qh;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<Eigen::Vector3d> random_angles(int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> th(0.3, pi - 0.3), ang(0.0, 2.0 * pi);
  std::vector<Eigen::Vector3d> out;
  for (int i = 0; i < count; ++i) out.emplace_back(th(rng), ang(rng), ang(rng));
  return out;
}

Vec3 eh_state(double rho, double a = 1.0) {
  const double q = std::sqrt(rho * rho - a * a);
  return {q, q, rho};
}

}  // namespace

TEST_CASE("Euler-angle coframe", "[geometry]") {
  const Eigen::Matrix3d s = euler_angle_coframe(pi / 2, 0.3, 0.0);
  Eigen::Matrix3d expect;
  expect << 1, 0, 0, 0, -1, 0, 0, 0, 1;
  CHECK((s - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(euler_angle_coframe(0.0, 0.0, 0.0), PoleError);
  for (const auto& q : random_angles(10, 3)) CHECK(structure_residual(q).max_abs < 1e-8);
}

TEST_CASE("BGPP metric against the Eguchi-Hanson chart", "[geometry]") {
  const double a = 1.0;
  const EulerFlow flow(eh_state(2.0, a));
  const auto g = bgpp_metric(flow_source(flow));
  const auto eh = eguchi_hanson_chart(a);
  for (double s : {-0.3, 0.0, 0.1}) {
    const double rho = flow.w(s)[2];
    const Vec4 p(s, 1.1, 0.4, 2.0), q(rho, 1.1, 0.4, 2.0);
    const Mat4 gs = g(p), gr = eh(q);
    const double drho = rho * rho - a * a;
    CHECK(gs(0, 0) == Approx(gr(0, 0) * drho * drho).epsilon(1e-12));
    CHECK((gs.bottomRightCorner<3, 3>() - gr.bottomRightCorner<3, 3>()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(gs.determinant() > 0.0);
  }
  CHECK_THROWS_AS(eh(Vec4(0.9, 1.0, 0.0, 0.0)), DomainError);
}

TEST_CASE("self-dual forms are closed along the flow", "[geometry]") {
  const EulerFlow flow(eh_state(2.0));
  const auto forms = selfdual_forms_bgpp(flow_source(flow));
  const auto g = bgpp_metric(flow_source(flow));
  double worst = 0.0;
  for (double s : {-0.2, -0.05, 0.05, 0.15})
    for (double th : {0.4, 1.0, 1.7, 2.6})
      for (double ph : {0.0, 1.5, 3.0, 4.5})
        for (double ps : {0.3, 1.9, 3.4, 5.0})
          for (const auto& om : forms) worst = std::max(worst, exterior_derivative(om, Vec4(s, th, ph, ps)).max_abs);
  CHECK(worst < 1e-6);

  // each Omega_i is a complex structure for g and the three anticommute
  const Vec4 p(0.1, 1.2, 0.7, 2.2);
  const Mat4 gi = g(p).inverse();
  std::array<Mat4, 3> J;
  for (int i = 0; i < 3; ++i) {
    const Mat4 om = forms[i](p);
    CHECK((om + om.transpose()).norm() == 0.0);
    J[i] = gi * om;
    CHECK((J[i] * J[i] + Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK((J[0] * J[1] + J[1] * J[0]).cwiseAbs().maxCoeff() < 1e-12);

  const auto general = selfdual_forms_bgpp(flow_source(EulerFlow(Vec3(1.2, 1.5, 2.0))));
  for (const auto& om : general) CHECK(exterior_derivative(om, Vec4(0.05, 0.9, 0.3, 1.4)).max_abs < 1e-6);

  const auto frozen = selfdual_forms_bgpp(frozen_source(Vec3(1, 2, 3)));
  const auto d = exterior_derivative(frozen[0], Vec4(0.0, pi / 2, 0.0, 0.0));
  CHECK(d.max_abs == Approx(6.0).epsilon(1e-8));
}

TEST_CASE("Ricci tensor by finite differences", "[geometry]") {
  CHECK(ricci_fd(flat_polar_chart(), Vec4(1.3, 1.0, 0.5, 0.7)).max_abs < 1e-8);
  CHECK(ricci_fd(eguchi_hanson_chart(1.0), Vec4(1.5, 1.0, 0.5, 0.7)).max_abs < 1e-4);

  const Vec4 p(1.0, 1.1, 0.3, 0.9);
  const auto s4 = ricci_fd(sphere4_chart(), p);
  CHECK((s4.ricci - 3.0 * sphere4_chart()(p)).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(s4.scalar == Approx(12.0).epsilon(1e-5));

  CHECK(ricci_fd(bgpp_metric(flow_source(EulerFlow(Vec3(1, 1, 1)))), Vec4(0.0, 1.0, 0.5, 0.7)).max_abs < 1e-8);
  CHECK(ricci_fd(bgpp_metric(flow_source(EulerFlow(Vec3(1.2, 1.5, 2.0)))), Vec4(0.05, 1.0, 0.5, 0.7)).max_abs < 1e-4);
  // frozen w is the product R x S^3, not flat
  CHECK(ricci_fd(bgpp_metric(frozen_source(Vec3(1, 1, 1))), Vec4(0.0, 1.0, 0.5, 0.7)).max_abs > 0.1);

  CHECK_THROWS_AS(ricci_fd(eguchi_hanson_chart(1.0), Vec4(1.0 + 1.1e-2, 1.0, 0.5, 0.7)), DomainError);
}

TEST_CASE("Gibbons-Hawking metrics", "[geometry]") {
  GHData flat;
  flat.Vhat = [](const Eigen::Vector3d&) { return 1.0; };
  flat.A = [](const Eigen::Vector3d&) { return Eigen::Vector3d::Zero(); };
  CHECK(ricci_fd(gh_metric(flat), Vec4(0.3, 0.2, 0.1, 0.0)).max_abs < 1e-8);

  const auto one = multi_center({Eigen::Vector3d::Zero()}, {1.0});
  CHECK(ricci_fd(gh_metric(one), Vec4(1.2, 0.8, 1.3, 0.4)).max_abs < 1e-4);

  const auto eh = eguchi_hanson_gh(1.0);
  const auto g = gh_metric(eh);
  CHECK(ricci_fd(g, Vec4(0.9, -0.6, 1.7, 0.2)).max_abs < 1e-4);
  CHECK((g(Vec4(0.9, -0.6, 1.7, 0.2)) - g(Vec4(0.9, -0.6, 1.7, 3.1))).norm() == 0.0);

  const Eigen::Vector3d x(0.7, 0.4, 1.1);
  CHECK(monopole_residual(eh.Vhat, eh.A, x).max_abs < 1e-8);
  const Eigen::Vector3d axial = axial_gauge_potential(eh.Vhat, x);
  CHECK((axial - eh.A(x)).cwiseAbs().maxCoeff() < 1e-7);

  GHData zero;
  zero.Vhat = [](const Eigen::Vector3d&) { return 0.0; };
  zero.A = flat.A;
  CHECK_THROWS_AS(gh_metric(zero)(Vec4::Zero()), DomainError);
}

TEST_CASE("Eguchi-Hanson closed forms", "[geometry]") {
  const auto ref = eguchi_hanson_reference(Eigen::Vector3d(0, 0, 2), 1.0);
  CHECK(ref.V == Approx(-std::log(3.0)).epsilon(1e-14));
  CHECK(ref.Vhat == Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(ref.ellipsoid_residual < 1e-12);

  // the ellipsoid rho = 2 at theta = pi/4
  const Vec3 w = eh_state(2.0);
  const Vec3 h = sphere_hamiltonians(SphereCoords{pi / 4, 0.8});
  const auto on = eguchi_hanson_reference(w.cwiseProduct(h), 1.0);
  CHECK(on.V == Approx(-std::log(3.0)).epsilon(1e-13));
  CHECK(on.ellipsoid_residual < 1e-12);

  CHECK_THROWS_AS(eguchi_hanson_reference(Eigen::Vector3d(0, 0, 1), 1.0), FocalSetError);
  CHECK_THROWS_AS(eguchi_hanson_reference(Eigen::Vector3d(0, 0, 0.5), 1.0), FocalSetError);

  const QuadricFamily fam({1.0, 1.0, 0.0}, 1.0);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n;
  for (int i = 0; i < 10; ++i) {
    const Eigen::Vector3d x = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized() * (1.3 + 0.3 * i);
    auto V = [](const Eigen::VectorXd& y) { return eguchi_hanson_reference(Eigen::Vector3d(y), 1.0).V; };
    const auto grad = fd_gradient(V, Eigen::VectorXd(x), FDScheme{1e-3, 4, true});
    const auto r = eguchi_hanson_reference(x, 1.0);
    CHECK(x.dot(grad) == Approx(r.Vhat).epsilon(1e-6));
    CHECK(eval_V(Eigen::VectorXd(x), fam) == Approx(r.V).epsilon(1e-8));
  }
}

TEST_CASE("Killing norm in Gibbons-Hawking coordinates", "[geometry]") {
  const EulerFlow eh(eh_state(2.0));
  const auto axis = to_gh_coordinates(flow_source(eh), Eigen::Vector3d(0.0, 0.3, 0.2), 0.0);
  CHECK((axis.x - Eigen::Vector3d(0, 0, 2)).norm() < 1e-15);
  CHECK(axis.T == Approx(0.5));
  CHECK(axis.KK == Approx(1.5).epsilon(1e-14));
  CHECK(axis.Vhat == Approx(2.0 / 3.0).epsilon(1e-12));

  for (const EulerFlow& flow : {eh, EulerFlow(Vec3(1.2, 1.5, 2.0)), EulerFlow(Vec3(1, 1, 1))}) {
    for (const auto& q : random_angles(5, 43)) {
      const auto c = to_gh_coordinates(flow_source(flow), q, 0.07);
      CHECK(c.KK * c.Vhat == Approx(1.0).epsilon(1e-10));
    }
  }
  const auto c = to_gh_coordinates(flow_source(eh), Eigen::Vector3d(1.0, 0.2, 0.4), -0.1);
  CHECK(2.0 * c.Vhat == Approx(eguchi_hanson_reference(c.x, 1.0).Vhat).epsilon(1e-12));
}
