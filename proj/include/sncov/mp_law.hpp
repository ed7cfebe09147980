#pragma once

// Standard Marcenko-Pastur law F_y: support, density, CDF, moments, the
// Stieltjes transform of the companion law and a quadrature rule against F_y.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>

#include "sncov/errors.hpp"

namespace sncov {

using ComplexPoint = std::complex<double>;

namespace detail {

inline void require_ratio(double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("aspect ratio y must be positive and finite, got " + std::to_string(y));
}

inline bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::floor(v); }

}  // namespace detail

/// Returns ((1 - sqrt(y))^2, (1 + sqrt(y))^2).
inline std::pair<double, double> support_edges(double y) {
  detail::require_ratio(y);
  const double s = std::sqrt(y);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

struct MPLaw {
  double y;
  double a_minus;
  double a_plus;
  double point_mass_at_zero;

  explicit MPLaw(double ratio) : y(ratio) {
    std::tie(a_minus, a_plus) = support_edges(ratio);
    point_mass_at_zero = ratio > 1.0 ? 1.0 - 1.0 / ratio : 0.0;
  }
};

/// Absolutely continuous part of F_y. The atom at zero (y > 1) is not included.
inline double density(double x, double y) {
  const MPLaw law(y);
  if (x <= 0.0 || x < law.a_minus || x > law.a_plus) return 0.0;
  const double v = (x - law.a_minus) * (law.a_plus - x);
  if (v <= 0.0) return 0.0;
  return std::sqrt(v) / (2.0 * std::numbers::pi * x * y);
}

/// F_y(x), atom included. Closed form obtained by integrating the density
/// under x = 1 + y - 2 sqrt(y) cos(theta).
inline double mp_cdf(double x, double y) {
  const MPLaw law(y);
  if (x < 0.0) return 0.0;
  if (x >= law.a_plus) return 1.0;
  if (x <= law.a_minus) return law.point_mass_at_zero;
  const double sy = std::sqrt(y);
  const double c = std::clamp((1.0 + y - x) / (2.0 * sy), -1.0, 1.0);
  const double theta = std::acos(c);
  const double arc = std::atan2((1.0 + sy) * std::sin(0.5 * theta), std::abs(1.0 - sy) * std::cos(0.5 * theta));
  const double integral =
      std::sin(theta) / (2.0 * sy) + (1.0 + y) * theta / (4.0 * y) - std::abs(1.0 - y) / (2.0 * y) * arc;
  return std::clamp(law.point_mass_at_zero + 2.0 / std::numbers::pi * integral, 0.0, 1.0);
}

/// Terminating Gauss hypergeometric series 2F1(a, b; c; x). One of a, b must
/// be a nonpositive integer; the sum stops at the first vanishing Pochhammer factor.
inline double hyp2f1_terminating(double a, double b, double c, double x) {
  const bool a_term = detail::is_nonpositive_integer(a);
  const bool b_term = detail::is_nonpositive_integer(b);
  if (!a_term && !b_term) {
    throw UnsupportedParameters("2F1 needs a or b to be a nonpositive integer (a=" + std::to_string(a) +
                                ", b=" + std::to_string(b) + ")");
  }
  int terms = 0;
  if (a_term) terms = static_cast<int>(-a);
  if (b_term) terms = a_term ? std::min(terms, static_cast<int>(-b)) : static_cast<int>(-b);
  double term = 1.0;
  double sum = 1.0;
  for (int m = 0; m < terms; ++m) {
    const double denom = (c + m) * (m + 1.0);
    if (denom == 0.0) throw DomainError("2F1 parameter c is a nonpositive integer inside the series");
    term *= (a + m) * (b + m) / denom * x;
    sum += term;
  }
  return sum;
}

inline constexpr int kMaxMomentOrder = 50;

/// k-th moment of F_y (atom included).
inline double mp_moment(int k, double y) {
  detail::require_ratio(y);
  if (k < 0 || k > kMaxMomentOrder) throw DomainError("moment order must be in [0, 50], got " + std::to_string(k));
  if (k == 0) return 1.0;
  const double kd = static_cast<double>(k);
  const double arg = 4.0 * y / ((1.0 + y) * (1.0 + y));
  return std::pow(1.0 + y, kd - 1.0) * hyp2f1_terminating((1.0 - kd) / 2.0, 1.0 - kd / 2.0, 2.0, arg);
}

/// Stieltjes transform of the companion law (1 - y) delta_0 + y F_y.
///
/// Root of z m^2 + (z + 1 - y) m + 1 = 0 with the branch that behaves like
/// -1/z at infinity; sqrt((z - a-)(z - a+)) is formed as a product of two
/// principal roots so that it is analytic off [a-, a+]. Real z approaches
/// the axis from the upper half-plane.
inline ComplexPoint stieltjes_m_underline(ComplexPoint z, double y) {
  const MPLaw law(y);
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw DomainError("non-finite z");
  if (z.imag() == 0.0) {
    const double x = z.real();
    if (x >= law.a_minus && x <= law.a_plus) throw DomainError("z lies inside the support of the MP law");
    if (x == 0.0 && y <= 1.0) throw DomainError("z = 0 carries an atom of the companion law");
    z = ComplexPoint(x, +0.0);
  }
  const ComplexPoint b = z + (1.0 - y);
  const ComplexPoint s = std::sqrt(z - law.a_minus) * std::sqrt(z - law.a_plus);
  const ComplexPoint plus = -b + s;
  const ComplexPoint minus = -b - s;
  // Same root written two ways; pick the one without cancellation.
  if (std::abs(plus) >= std::abs(minus)) return plus / (2.0 * z);
  return 2.0 / minus;
}

/// d m(z) / dz from the inverse relation z = -1/m + y/(1 + m).
inline ComplexPoint stieltjes_m_underline_derivative(ComplexPoint m, double y) {
  const ComplexPoint one_plus = 1.0 + m;
  return 1.0 / (1.0 / (m * m) - y / (one_plus * one_plus));
}

struct QuadratureOptions {
  double rel_tol = 1e-13;
  int initial_nodes = 64;
  int max_nodes = 5'000'000;
};

/// Integral of f against F_y (atom at zero included when y > 1).
///
/// The substitution x = 1 + y - 2 sqrt(y) cos(theta) removes the square-root
/// edges; the transformed integrand is smooth and even-periodic in theta, so a
/// midpoint rule refined by tripling converges geometrically.
template <class F>
auto mp_quadrature(F&& f, double y, QuadratureOptions opts = {}) {
  using Value = std::decay_t<std::invoke_result_t<F&, double>>;
  const MPLaw law(y);
  const double sy = std::sqrt(y);
  auto finite = [](const Value& v) {
    if constexpr (std::is_arithmetic_v<Value>) {
      return std::isfinite(v);
    } else {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    }
  };
  auto sample = [&](double theta) -> Value {
    const double half = std::sin(0.5 * theta);
    const double x = (1.0 - sy) * (1.0 - sy) + 4.0 * sy * half * half;  // no cancellation near theta = 0
    const double s = std::sin(theta);
    const Value v = f(x);
    if (!finite(v)) throw NumericalError("integrand is not finite at x=" + std::to_string(x));
    return v * (s * s / x);
  };

  long n = opts.initial_nodes;
  Value raw{};
  for (long j = 0; j < n; ++j) raw += sample((j + 0.5) * std::numbers::pi / n);
  Value estimate = raw * (2.0 / n);
  int agreeing = 0;
  while (agreeing < 2) {
    if (3 * n > opts.max_nodes) throw NumericalError("mp_quadrature did not converge");
    const double h = std::numbers::pi / (3.0 * n);
    Value added{};
    for (long j = 0; j < n; ++j) {
      added += sample((3 * j + 0.5) * h);
      added += sample((3 * j + 2.5) * h);
    }
    raw += added;
    n *= 3;
    const Value next = raw * (2.0 / n);
    const double scale = std::max(1.0, std::abs(next));
    agreeing = std::abs(next - estimate) <= opts.rel_tol * scale ? agreeing + 1 : 0;
    estimate = next;
  }
  if (law.point_mass_at_zero > 0.0) {
    const Value at0 = f(0.0);
    if (!finite(at0)) throw NumericalError("integrand is not finite at the atom x=0");
    estimate += at0 * law.point_mass_at_zero;
  }
  return estimate;
}

}  // namespace sncov
