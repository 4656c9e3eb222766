#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qh/twistor.hpp"

using namespace qh;

namespace {

const cplx I(0.0, 1.0);
constexpr double pi = std::numbers::pi;

std::vector<Eigen::Vector3d> random_points(int count, double rmin, double rmax, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(rmin, rmax);
  std::vector<Eigen::Vector3d> out;
  while (static_cast<int>(out.size()) < count) {
    Eigen::Vector3d d(g(rng), g(rng), g(rng));
    if (d.norm() < 1e-3) continue;
    out.push_back(u(rng) * d.normalized());
  }
  return out;
}

}  // namespace

TEST_CASE("incidence relation", "[twistor]") {
  CHECK(std::abs(incidence_mu(Eigen::Vector3d(0, 0, 0), cplx(0.3, 1.1))) == 0.0);
  CHECK(incidence_mu(Eigen::Vector3d(1, 0, 0), 0.0) == cplx(1.0, 0.0));

  IncidenceSection axis(Eigen::Vector3d(0, 0, 2));
  CHECK(axis.degenerate());
  CHECK_FALSE(axis.lambda_plus().has_value());
  REQUIRE(axis.lambda_minus().has_value());
  CHECK(std::abs(*axis.lambda_minus()) < 1e-15);
  CHECK(std::abs(axis.mu(0.7) - 4.0 * 0.7) < 1e-15);

  for (const auto& x : random_points(10, 0.5, 3.0, 7)) {
    IncidenceSection s(x);
    for (cplx root : s.finite_roots()) CHECK(std::abs(s.mu(root)) < 1e-12 * (1.0 + std::norm(root)));
    // discriminant of the quadratic is 4 r^2
    const cplx a = s.leading(), b = 2.0 * s.x[2], c = s.x[0] + I * s.x[1];
    CHECK(std::abs(b * b - 4.0 * a * c - 4.0 * x.squaredNorm()) < 1e-12);
  }
}

TEST_CASE("penrose transform of 1/mu", "[twistor]") {
  const auto F = kernels::inv_mu();
  CHECK(std::abs(penrose_transform(F, Eigen::Vector3d(0, 0, 2)) + I * pi / 2.0) < 1e-12);
  for (const auto& x : random_points(10, 1.0, 3.0, 11)) {
    const cplx v = penrose_transform(F, x);
    CHECK(std::abs(v * x.norm() + I * pi) < 1e-8);
  }
  CHECK(std::abs(penrose_transform(kernels::lambda_poly(), Eigen::Vector3d(0.3, -0.2, 1.0))) < 1e-14);
}

TEST_CASE("penrose transforms are harmonic", "[twistor]") {
  const FDScheme fd{1e-3, 4, true};
  RationalKernelSpec spec;
  spec.name = "lambda_over_mu_sq";
  spec.numerator = {{1, 0, {1.0, 0.0}}};
  spec.mu_power = 2;
  for (const auto& F : {kernels::inv_mu(), kernels::inv_mu_sq(), kernels::rational(spec)}) {
    for (const auto& x : random_points(4, 1.0, 2.5, 19)) {
      auto v = [&](const Eigen::VectorXd& y) { return penrose_transform(F, Eigen::Vector3d(y)); };
      CHECK(std::abs(fd_laplacian(v, Eigen::VectorXd(x), fd).laplacian) < 1e-5);
    }
  }
}

TEST_CASE("dilation transform matches the Euler operator", "[twistor]") {
  const auto F = kernels::inv_mu();
  CHECK(std::abs(dilation_transform(F, Eigen::Vector3d(0, 0, 2)) - I * pi / 2.0) < 1e-12);
  CHECK(std::abs(dilation_transform(kernels::lambda_poly(), Eigen::Vector3d(1, 0.2, 0.5))) < 1e-14);
  for (const auto& K : {kernels::inv_mu(), kernels::inv_mu_sq()}) {
    for (const auto& x : random_points(5, 1.0, 3.0, 23)) {
      auto v = [&](const Eigen::VectorXd& y) { return penrose_transform(K, Eigen::Vector3d(y)); };
      const auto g = fd_gradient(v, Eigen::VectorXd(x), FDScheme{1e-3, 4, true});
      cplx euler{0.0, 0.0};
      for (int i = 0; i < 3; ++i) euler += x[i] * g[i];
      CHECK(std::abs(dilation_transform(K, x) - euler) < 1e-6);
    }
  }
}

TEST_CASE("numeric mu derivative", "[twistor]") {
  auto k = kernels::neg_log_mu();
  auto F = kernels::inv_mu();
  k.d_mu = nullptr;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 10; ++i) {
    const cplx l(u(rng), u(rng));
    cplx mu(u(rng), u(rng));
    if (i == 0) mu = cplx(-1.3, 1e-9);  // straddles the principal cut
    // paired kernels: mu dF/dmu = df/dmu
    CHECK(std::abs(k.derivative_mu(l, mu) - mu * F.derivative_mu(l, mu)) < 1e-8 * (1.0 + 1.0 / std::abs(mu)));
  }
}

TEST_CASE("splitting reproduces the kernel", "[twistor]") {
  const Eigen::Vector3d x(0.4, -0.7, 1.1);
  const IncidenceSection sec(x);
  const auto f = kernels::mu_over_lambda();
  for (cplx l : {cplx(0.5, 0.1), cplx(-0.3, 0.8), cplx(1.2, -0.4), cplx(0.05, 0.02), cplx(-2.0, -1.0)}) {
    const auto [g0, g1] = splitting_contours(sec, f, l);
    const auto r = splitting(f, x, l, g0, g1);
    CHECK(r.reproduction_residual < 1e-8);
    CHECK(std::abs(r.pi_h0 + 1.0) < 1e-8);
    CHECK(std::abs(r.pi_h0 - r.pi_h1) < 1e-8);
  }

  const auto lg = kernels::neg_log_mu();
  const cplx lp = *sec.lambda_plus();
  cplx first{0.0, 0.0};
  for (int k = 0; k < 5; ++k) {
    const cplx l = lp + 0.2 * std::polar(1.0, 1.3 * k);
    const auto [g0, g1] = splitting_contours(sec, lg, l);
    const auto r = splitting(lg, x, l, g0, g1);
    CHECK(r.reproduction_residual < 1e-8);
    if (k == 0) first = r.pi_h0;
    CHECK(std::abs(r.pi_h0 - first) < 1e-8);
    // pi.h = -(1/2 pi i) oint g = -1/(2r)
    CHECK(std::abs(r.pi_h0 + 1.0 / (2.0 * x.norm())) < 1e-8);
  }

  const auto r0 = splitting(kernels::zero(), x, 0.3, Contour{0.0, 1.0}, Contour{0.0, 0.1});
  CHECK(r0.h0.norm() == 0.0);
  CHECK(r0.h1.norm() == 0.0);
}

TEST_CASE("phi matrix and the monopole equation", "[twistor]") {
  const auto z = phi_matrix(kernels::zero(), Eigen::Vector3d(0.2, 0.3, 1.0));
  CHECK(z.components.norm() == 0.0);

  const auto ml = kernels::mu_over_lambda();
  for (const auto& x : random_points(3, 0.5, 2.0, 29)) {
    const auto p = phi_matrix(ml, x);
    CHECK(std::abs(p.Vhat - 2.0 * pi * I) < 1e-12);
    CHECK(phi_monopole_residual(ml, x).max_abs < 1e-8);
  }

  const auto lg = kernels::neg_log_mu();
  for (const auto& x : random_points(6, 0.8, 2.5, 31)) {
    const auto p = phi_matrix(lg, x);
    CHECK(std::abs(p.Vhat - I * pi / x.norm()) < 1e-9);
    CHECK(std::abs((p.components(0, 1) - p.components(1, 0)) / 2.0 - p.Vhat) < 1e-14);
    CHECK(std::abs((p.components(0, 1) + p.components(1, 0)) / 2.0 - p.A[2]) < 1e-14);
    const auto m = phi_monopole_residual(lg, x);
    CHECK(m.max_abs < 1e-5);
    CHECK(m.grad_vhat.norm() > 1e-2);
  }
}

TEST_CASE("contour validation", "[twistor]") {
  const Eigen::Vector3d x(0.5, 0.5, 1.0);
  const IncidenceSection sec(x);
  const auto F = kernels::inv_mu();
  const cplx lp = *sec.lambda_plus(), lm = *sec.lambda_minus();
  // encloses both roots: wrong separation
  CHECK_THROWS_AS(penrose_transform(F, x, Contour{0.5 * (lp + lm), std::abs(lp - lm)}), ContourError);
  // passes through a root
  CHECK_THROWS_AS(penrose_transform(F, x, Contour{lp, std::abs(lp - lm)}), ContourError);
  // misses lambda_+
  CHECK_THROWS_AS(penrose_transform(F, x, Contour{lm, 0.1 * std::abs(lp - lm)}), ContourError);
  CHECK_THROWS_AS(penrose_transform(kernels::neg_log_mu(), x), ConfigurationError);

  const auto placed = auto_contour(sec, F);
  CHECK(placed.clearance > 0.4);
  CHECK_THROWS_AS(splitting(kernels::mu_over_lambda(), x, 0.3, Contour{0.0, 0.2}, Contour{0.0, 0.1}), ContourError);
}

TEST_CASE("rational kernel spec", "[twistor]") {
  RationalKernelSpec spec;
  spec.numerator = {{0, 0, {1.0, 0.0}}};
  spec.mu_power = 1;
  const auto k = kernels::rational(spec);
  const Eigen::Vector3d x(0.3, 1.2, -0.4);
  CHECK(std::abs(penrose_transform(k, x) - penrose_transform(kernels::inv_mu(), x)) < 1e-13);
  CHECK(std::abs(k.derivative_mu(0.3, cplx(0.2, 0.5)) + 1.0 / std::pow(cplx(0.2, 0.5), 2)) < 1e-14);
  spec.mu_power = -1;
  CHECK_THROWS_AS(kernels::rational(spec), ConfigurationError);
  CHECK_THROWS_AS(kernels::by_name("nope"), ConfigurationError);
}
