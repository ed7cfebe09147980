#pragma once

// Centering and scaling of the self-normalized LSS: closed forms for log, x^2
// and x^k, and a contour-integral evaluation of the limiting mean/covariance
// functionals used to cross-check them.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "sncov/errors.hpp"
#include "sncov/mp_law.hpp"
#include "sncov/spectra.hpp"
#include "sncov/spectral_function.hpp"

namespace sncov {

struct CenterScale {
  double center;
  double sd;
};

/// Circle |z - center_re| = radius sampled at `nodes` equispaced angles.
struct ContourSpec {
  double center_re;
  double radius;
  int nodes;
};

/// Centering and scale for sum_i log(lambda_i), valid for y_n = p/n in (0, 1).
inline CenterScale log_center_scale(long p, long n) {
  if (p < 1 || n < 1) throw DomainError("p and n must be positive");
  const double y = static_cast<double>(p) / static_cast<double>(n);
  if (!(y < 1.0)) throw UnsupportedRegime("log statistic requires p/n < 1, got " + std::to_string(y));
  const double l1y = std::log1p(-y);
  const double center = static_cast<double>(p) * mp_log_moment(y) + y + 0.5 * l1y;
  const double var = -2.0 * y - 2.0 * l1y;
  if (!(var > 0.0)) throw NumericalError("non-positive log-statistic variance");
  return {center, std::sqrt(var)};
}

/// (T + 1) / 2 with T = sum_i lambda_i^2 / y_n - n - p.
inline double jhn_standardize(const SpectralSummary& summary) {
  double sq = 0.0;
  for (double v : summary.eigenvalues) sq += v * v;
  const double t = sq / summary.y_n - static_cast<double>(summary.n) - static_cast<double>(summary.p);
  return 0.5 * (t + 1.0);
}

namespace detail {

inline double binomial(int n, int r) {
  if (r < 0 || n < 0 || r > n) return 0.0;
  r = std::min(r, n - r);
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

inline void require_moment_order(int k) {
  if (k < 2 || k > kMaxMomentOrder) throw DomainError("moment test order must be in [2, 50], got " + std::to_string(k));
}

// Neumaier compensated sum of complex terms; order is fixed by the caller.
class CompensatedSum {
 public:
  void add(std::complex<double> v) {
    re_.add(v.real());
    im_.add(v.imag());
  }
  std::complex<double> value() const { return {re_.value(), im_.value()}; }

 private:
  struct Part {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
      const double t = sum + v;
      comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
      sum = t;
    }
    double value() const { return sum + comp; }
  };
  Part re_, im_;
};

}  // namespace detail

/// Asymptotic mean of G(x^k) evaluated at y_n.
inline double moment_mu(int k, double y) {
  detail::require_moment_order(k);
  detail::require_ratio(y);
  const double kd = k;
  const double arg = 4.0 * y / ((1.0 + y) * (1.0 + y));
  const double h1 = hyp2f1_terminating((3.0 - kd) / 2.0, 1.0 - kd / 2.0, 1.0, arg);
  const double h2 = hyp2f1_terminating((3.0 - kd) / 2.0, 1.0 - kd / 2.0, 2.0, arg);
  const double lead = -2.0 * kd * (kd - 1.0) * std::pow(1.0 + y, kd - 2.0) / ((kd + 1.0) * (kd + 2.0));
  const double block = lead * ((y - 1.0) * (y - 1.0) * h1 + (-1.0 + 4.0 * kd * y - y * y) * h2);
  const double sy = std::sqrt(y);
  const double edges = 0.25 * (std::pow(1.0 + sy, 2.0 * kd) + std::pow(1.0 - sy, 2.0 * kd));
  double binom_sum = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double c = detail::binomial(k, i);
    binom_sum += c * c * std::pow(y, i);
  }
  return block + edges - 0.5 * binom_sum;
}

/// Asymptotic variance of G(x^k) evaluated at y_n.
///
/// The powers ((1-y)/y)^e are folded with the neighbouring (1-y)^k and y^{2k}
/// factors so that every exponent is nonnegative and y = 1 stays finite. The
/// factorial ratio (k+i-1)!/((i-1)!(k+1)!) equals C(k+i-1, k)/(k+1) and vanishes at i = 0.
inline double moment_sigma2(int k, double y) {
  detail::require_moment_order(k);
  detail::require_ratio(y);
  const double q = 1.0 - y;

  double inner = 0.0;
  for (int i = 1; i <= k + 1; ++i) {
    const double ratio = detail::binomial(k + i - 1, k) / (k + 1.0);
    inner += detail::binomial(k + 1, i) * std::pow(q, k + 1 - i) * std::pow(y, i - 1) * ratio;
  }
  const double first = k * inner;

  double second = 0.0;
  for (int i = 0; i <= k - 1; ++i) {
    for (int j = 0; j <= k; ++j) {
      double ell_sum = 0.0;
      for (int l = 1; l <= k - i; ++l) {
        ell_sum += l * detail::binomial(2 * k - 1 - (i + l), k - 1) * detail::binomial(2 * k - 1 - j + l, k - 1);
      }
      second += detail::binomial(k, i) * detail::binomial(k, j) * std::pow(y, 2 * k - i - j) * std::pow(q, i + j) *
                ell_sum;
    }
  }
  const double sigma2 = -2.0 * y * first * first + 2.0 * second;
  if (!(sigma2 > 0.0)) {
    throw NumericalError("moment variance is not positive for k=" + std::to_string(k) + ", y=" + std::to_string(y));
  }
  return sigma2;
}

struct LimitMoments {
  double mean;
  double variance;
};

/// Closed-form limiting mean and variance of G(f) at ratio y.
inline LimitMoments closed_form_moments(const SpectralFunction& f, double y) {
  detail::require_ratio(y);
  if (f.is_log()) {
    if (!(y < 1.0)) throw UnsupportedRegime("log functional requires y < 1");
    const double l1y = std::log1p(-y);
    return {y + 0.5 * l1y, -2.0 * y - 2.0 * l1y};
  }
  if (f.exponent() == 1) return {0.0, 0.0};
  return {moment_mu(f.exponent(), y), moment_sigma2(f.exponent(), y)};
}

/// Left end of the interval a contour must enclose: a- for y < 1, 0 otherwise.
inline double contour_interval_left(double y) { return y < 1.0 ? MPLaw(y).a_minus : 0.0; }

inline void validate_contour(const SpectralFunction& f, double y, const ContourSpec& spec) {
  const MPLaw law(y);
  if (!(spec.radius > 0.0) || spec.nodes < 8) throw DomainError("contour needs a positive radius and at least 8 nodes");
  const double left = spec.center_re - spec.radius;
  const double right = spec.center_re + spec.radius;
  if (!(left < contour_interval_left(y) && right > law.a_plus)) {
    throw DomainError("contour does not enclose the support interval");
  }
  if (f.is_log()) {
    if (!(y < 1.0)) throw UnsupportedRegime("log functional requires y < 1");
    if (!(left > 0.0)) throw DomainError("contour for log must keep the origin outside");
  }
  if (y <= 1.0 && std::abs(left) < 1e-12) throw DomainError("contour passes through the origin");
}

/// Default single contour: concentric with the support, radius 1 + y + 0.3 for
/// powers (the integrand is regular at the origin), or a circle squeezed
/// between the origin and a- for log.
inline ContourSpec default_contour(const SpectralFunction& f, double y) {
  const MPLaw law(y);
  if (!f.is_log()) return {1.0 + y, 1.0 + y + 0.3, 2048};
  if (!(y < 1.0)) throw UnsupportedRegime("log functional requires y < 1");
  const double left = law.a_minus * (2.0 / 3.0);
  const double right = law.a_plus + 0.3;
  const double radius = 0.5 * (right - left);
  const double gap = law.a_minus / 3.0;
  const double wanted = std::clamp(36.0 * radius / gap, 2048.0, 32768.0);
  return {0.5 * (left + right), radius, static_cast<int>(std::bit_ceil(static_cast<unsigned>(wanted)))};
}

/// Pair of nowhere-intersecting nested contours for the covariance functional.
inline std::pair<ContourSpec, ContourSpec> default_contour_pair(const SpectralFunction& f, const SpectralFunction& g,
                                                                double y) {
  if (!f.is_log() && !g.is_log()) {
    const ContourSpec inner = default_contour(f, y);
    return {inner, ContourSpec{inner.center_re, 1.3 * inner.radius, inner.nodes}};
  }
  const MPLaw law(y);
  const ContourSpec inner = default_contour(SpectralFunction::log(), y);
  const double left = law.a_minus / 3.0;
  const double right = law.a_plus + 0.6;
  return {inner, ContourSpec{0.5 * (left + right), 0.5 * (right - left), inner.nodes}};
}

namespace detail {

struct ContourSample {
  std::complex<double> z;
  std::complex<double> dz;  // z'(theta) * 2 pi / N
  std::complex<double> m;
  std::complex<double> dm;
};

inline std::vector<ContourSample> sample_contour(const ContourSpec& spec, double y) {
  std::vector<ContourSample> out(static_cast<std::size_t>(spec.nodes));
  const double step = 2.0 * std::numbers::pi / spec.nodes;
  for (int j = 0; j < spec.nodes; ++j) {
    const double theta = j * step;
    const std::complex<double> e(std::cos(theta), std::sin(theta));
    ContourSample& s = out[static_cast<std::size_t>(j)];
    s.z = spec.center_re + spec.radius * e;
    s.dz = std::complex<double>(0.0, 1.0) * spec.radius * e * step;
    s.m = stieltjes_m_underline(s.z, y);
    s.dm = stieltjes_m_underline_derivative(s.m, y);
  }
  return out;
}

inline double real_part_checked(std::complex<double> v, const char* what) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericalError(std::string(what) + " is not finite");
  if (std::abs(v.imag()) > 1e-8 * std::max(1.0, std::abs(v.real()))) {
    throw NumericalError(std::string(what) + " has a non-negligible imaginary part (" + std::to_string(v.imag()) + ")");
  }
  return v.real();
}

}  // namespace detail

/// Limiting mean of G(f) by trapezoidal quadrature of the two contour
/// integrals in the self-normalized CLT.
inline double contour_mean(const SpectralFunction& f, double y, const ContourSpec& spec) {
  validate_contour(f, y, spec);
  detail::CompensatedSum acc;
  for (const auto& s : detail::sample_contour(spec, y)) {
    const std::complex<double> r = s.m / (1.0 + s.m);
    const std::complex<double> a = y * r * r * r;
    const std::complex<double> inv = 1.0 / (1.0 - y * r * r);
    // (1/(pi i)) f a inv dz - (1/(2 pi i)) f a inv^2 dz
    acc.add(f(s.z) * a * (2.0 * inv - inv * inv) * s.dz);
  }
  const std::complex<double> value = acc.value() / (2.0 * std::numbers::pi * std::complex<double>(0.0, 1.0));
  return detail::real_part_checked(value, "contour mean");
}

/// Limiting covariance of (G(f), G(g)); f lives on `first`, g on `second`.
inline double contour_cov(const SpectralFunction& f, const SpectralFunction& g, double y, const ContourSpec& first,
                          const ContourSpec& second) {
  validate_contour(f, y, first);
  validate_contour(g, y, second);
  const bool nested_in = second.center_re - second.radius < first.center_re - first.radius &&
                         second.center_re + second.radius > first.center_re + first.radius;
  const bool nested_out = first.center_re - first.radius < second.center_re - second.radius &&
                          first.center_re + first.radius > second.center_re + second.radius;
  if (!nested_in && !nested_out) throw DomainError("covariance contours must be nested without touching");

  const auto c1 = detail::sample_contour(first, y);
  const auto c2 = detail::sample_contour(second, y);
  std::vector<std::complex<double>> u(c1.size());
  std::vector<std::complex<double>> v(c2.size());
  detail::CompensatedSum sep1, sep2;
  for (std::size_t j = 0; j < c1.size(); ++j) {
    u[j] = f(c1[j].z) * c1[j].dm * c1[j].dz;
    sep1.add(u[j] / ((1.0 + c1[j].m) * (1.0 + c1[j].m)));
  }
  for (std::size_t k = 0; k < c2.size(); ++k) {
    v[k] = g(c2[k].z) * c2[k].dm * c2[k].dz;
    sep2.add(v[k] / ((1.0 + c2[k].m) * (1.0 + c2[k].m)));
  }
  detail::CompensatedSum cross;
  for (std::size_t k = 0; k < c2.size(); ++k) {
    const std::complex<double> m2 = c2[k].m;
    std::complex<double> row{};
    for (std::size_t j = 0; j < c1.size(); ++j) {
      const std::complex<double> d = m2 - c1[j].m;
      row += u[j] / (d * d);
    }
    cross.add(row * v[k]);
  }
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const std::complex<double> value = y / (2.0 * pi2) * sep1.value() * sep2.value() - cross.value() / (2.0 * pi2);
  return detail::real_part_checked(value, "contour covariance");
}

}  // namespace sncov
