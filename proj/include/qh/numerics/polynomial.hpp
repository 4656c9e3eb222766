#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "qh/errors.hpp"
#include "qh/numerics/defaults.hpp"

namespace qh {

using cplx = std::complex<double>;

/// Dense univariate polynomial, coefficients in ascending degree order.
/// Trailing zero coefficients are trimmed; the zero polynomial is {0}.
class Polynomial {
public:
  Polynomial() : coeffs_{cplx{0.0}} {}

  explicit Polynomial(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

  static Polynomial real(std::initializer_list<double> coeffs) {
    return Polynomial(std::vector<cplx>(coeffs.begin(), coeffs.end()));
  }

  static Polynomial constant(cplx c) { return Polynomial(std::vector<cplx>{c}); }

  /// (t - root)
  static Polynomial linear_factor(cplx root) { return Polynomial(std::vector<cplx>{-root, 1.0}); }

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == cplx{0.0}; }
  const std::vector<cplx>& coefficients() const { return coeffs_; }
  cplx coefficient(int k) const {
    return (k >= 0 && k <= degree()) ? coeffs_[static_cast<std::size_t>(k)] : cplx{0.0};
  }

  cplx operator()(cplx t) const {
    cplx acc{0.0};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  /// Evaluates the real part of the coefficients at a real argument.
  double eval_real(double t) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * t + it->real();
    return acc;
  }

  Polynomial derivative() const {
    if (degree() == 0) return Polynomial();
    std::vector<cplx> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = coeffs_[k] * static_cast<double>(k);
    return Polynomial(std::move(d));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<cplx> c(std::max(a.coeffs_.size(), b.coeffs_.size()), cplx{0.0});
    for (std::size_t k = 0; k < a.coeffs_.size(); ++k) c[k] += a.coeffs_[k];
    for (std::size_t k = 0; k < b.coeffs_.size(); ++k) c[k] += b.coeffs_[k];
    return Polynomial(std::move(c));
  }

  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::vector<cplx> c(a.coeffs_.size() + b.coeffs_.size() - 1, cplx{0.0});
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(c));
  }

  friend Polynomial operator*(cplx s, const Polynomial& p) {
    std::vector<cplx> c = p.coeffs_;
    for (auto& v : c) v *= s;
    return Polynomial(std::move(c));
  }

private:
  void trim() {
    while (coeffs_.size() > 1 && coeffs_.back() == cplx{0.0}) coeffs_.pop_back();
    if (coeffs_.empty()) coeffs_.push_back(cplx{0.0});
  }

  std::vector<cplx> coeffs_;
};

namespace detail {

// Safeguarded Newton inside a sign-change bracket; falls back to bisection
// whenever the Newton iterate leaves the bracket.
inline double polish_bracketed_root(const Polynomial& p, const Polynomial& dp, double lo, double hi) {
  double flo = p.eval_real(lo);
  double fhi = p.eval_real(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = p.eval_real(x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double width = hi - lo;
    if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
    const double dfx = dp.eval_real(x);
    double next = (dfx != 0.0) ? x - fx / dfx : lo - 1.0;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  if (!std::isfinite(x)) throw NumericalFailure("real root polish did not converge");
  return x;
}

inline double max_abs_on_grid(const Polynomial& p, double lo, double hi, int cells) {
  double m = 0.0;
  for (int k = 0; k <= cells; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / cells;
    m = std::max(m, std::abs(p.eval_real(t)));
  }
  return m;
}

}  // namespace detail

/// Real roots of p (real parts of its coefficients) inside [lo, hi], sorted,
/// with coincident roots collapsed.
///
/// Odd-multiplicity roots are bracketed by sign changes on a uniform grid and
/// polished; even-multiplicity (touching) roots are picked up as critical
/// points of p, found recursively, where |p| vanishes to rounding level.
inline std::vector<double> find_real_roots(const Polynomial& p, double lo, double hi,
                                           int cells = defaults::root_grid_cells) {
  if (!(std::isfinite(lo) && std::isfinite(hi)) || hi < lo)
    throw ConfigurationError("find_real_roots: interval must be finite with lo <= hi");
  std::vector<double> roots;
  if (p.degree() <= 0) return roots;

  const Polynomial dp = p.derivative();
  double prev_t = lo;
  double prev_f = p.eval_real(lo);
  if (prev_f == 0.0) roots.push_back(lo);
  for (int k = 1; k <= cells; ++k) {
    const double t = (k == cells) ? hi : lo + (hi - lo) * static_cast<double>(k) / cells;
    const double f = p.eval_real(t);
    if (f == 0.0) {
      roots.push_back(t);
    } else if (prev_f != 0.0 && (f < 0.0) != (prev_f < 0.0)) {
      roots.push_back(detail::polish_bracketed_root(p, dp, prev_t, t));
    }
    prev_t = t;
    prev_f = f;
  }

  if (p.degree() >= 2) {
    const double scale = 1.0 + detail::max_abs_on_grid(p, lo, hi, cells);
    for (double c : find_real_roots(dp, lo, hi, cells)) {
      if (std::abs(p.eval_real(c)) <= 1e-13 * scale) roots.push_back(c);
    }
  }

  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  for (double r : roots) {
    if (!std::isfinite(r)) throw NumericalFailure("find_real_roots: non-finite root");
    if (unique.empty() || std::abs(r - unique.back()) > 1e-9 * std::max(1.0, std::abs(r)))
      unique.push_back(r);
  }
  return unique;
}

}  // namespace qh
