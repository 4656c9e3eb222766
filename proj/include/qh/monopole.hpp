#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "qh/numerics.hpp"

namespace qh {

struct MonopoleResidual {
  Eigen::Vector3cd grad_vhat = Eigen::Vector3cd::Zero();
  Eigen::Vector3cd curl_a = Eigen::Vector3cd::Zero();
  double max_abs = 0.0;
};

/// *dVhat - dA on flat R^3, i.e. grad Vhat - curl A, by finite differences.
/// `vhat` maps a point to a scalar, `a` to a 3-vector; either may be real or
/// complex valued.
template <class VHat, class A>
MonopoleResidual monopole_residual(VHat&& vhat, A&& a, const Eigen::Vector3d& x,
                                   const FDScheme& scheme = FDScheme{1e-3, 4, true}) {
  const Eigen::VectorXd p = x;
  auto v = [&](const Eigen::VectorXd& y) { return cplx(vhat(Eigen::Vector3d(y))); };
  MonopoleResidual out;
  const auto gv = fd_gradient(v, p, scheme);
  for (int i = 0; i < 3; ++i) out.grad_vhat[i] = gv[i];

  Eigen::Matrix3cd J;  // J(i, j) = d A_i / d x_j
  for (int i = 0; i < 3; ++i) {
    auto comp = [&](const Eigen::VectorXd& y) {
      const auto val = a(Eigen::Vector3d(y));
      return cplx(val[i]);
    };
    const auto g = fd_gradient(comp, p, scheme);
    for (int j = 0; j < 3; ++j) J(i, j) = g[j];
  }
  out.curl_a << J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1);
  out.max_abs = (out.grad_vhat - out.curl_a).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace qh
