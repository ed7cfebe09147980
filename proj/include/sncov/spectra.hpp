#pragma once

// Self-normalized sample covariance (p/n) sum_i Y_i Y_i^T / |Y_i|^2, its
// spectrum and the centered linear spectral statistics built on it.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sncov/errors.hpp"
#include "sncov/mp_law.hpp"
#include "sncov/spectral_function.hpp"
#include "sncov/stats.hpp"

namespace sncov {

/// p x n panel; column i is the observation Y_i.
class ObservationMatrix {
 public:
  explicit ObservationMatrix(Eigen::MatrixXd data) : data_(std::move(data)) {
    if (data_.rows() < 2 || data_.cols() < 2) {
      throw DomainError("observation matrix needs p >= 2 and n >= 2, got " + std::to_string(data_.rows()) + "x" +
                        std::to_string(data_.cols()));
    }
    if (!data_.allFinite()) throw DomainError("observation matrix contains non-finite entries");
  }

  Eigen::Index p() const { return data_.rows(); }
  Eigen::Index n() const { return data_.cols(); }
  double ratio() const { return static_cast<double>(p()) / static_cast<double>(n()); }
  const Eigen::MatrixXd& data() const { return data_; }

 private:
  Eigen::MatrixXd data_;
};

struct SpectralSummary {
  Eigen::Index p = 0;
  Eigen::Index n = 0;
  double y_n = 0.0;
  std::vector<double> eigenvalues;  // nonincreasing, clamped at zero
  std::optional<double> log_det{};  // sum of log eigenvalues via QR of the data; see snc_log_det

  double max_eigenvalue() const { return eigenvalues.empty() ? 0.0 : eigenvalues.front(); }
  // Eigenvalues at or below this are treated as zero.
  double eigen_floor() const { return 1e-10 * max_eigenvalue(); }
};

/// Divides each column by its Euclidean norm; zero columns stay zero.
inline ObservationMatrix self_normalize(const ObservationMatrix& obs) {
  Eigen::MatrixXd x = obs.data();
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const double norm = x.col(i).norm();
    if (norm > 0.0) x.col(i) /= norm;
  }
  return ObservationMatrix(std::move(x));
}

enum class EigenRoute { Auto, Outer, Gram };

namespace detail {

inline std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace detail

/// Eigenvalues of the self-normalized covariance, sorted nonincreasing.
///
/// Auto picks the p x p outer product when p <= n and the n x n Gram matrix
/// otherwise; the Gram route is padded with p - n exact zeros.
inline SpectralSummary snc_eigenvalues(const ObservationMatrix& obs, EigenRoute route = EigenRoute::Auto) {
  const Eigen::Index p = obs.p();
  const Eigen::Index n = obs.n();
  const double y = obs.ratio();
  if (route == EigenRoute::Auto) route = p <= n ? EigenRoute::Outer : EigenRoute::Gram;

  const Eigen::MatrixXd x = self_normalize(obs).data();
  std::vector<double> ev;
  if (route == EigenRoute::Outer) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
    s.selfadjointView<Eigen::Lower>().rankUpdate(x, y);
    ev = detail::symmetric_eigenvalues(s);
  } else {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), y);
    ev = detail::symmetric_eigenvalues(g);
    ev.resize(static_cast<std::size_t>(std::max(p, n)), 0.0);
  }
  for (double& v : ev) v = std::max(v, 0.0);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  ev.resize(static_cast<std::size_t>(p));
  return SpectralSummary{p, n, y, std::move(ev)};
}

/// log det of the self-normalized sample covariance for p < n, from a
/// Householder QR of the normalized data. Relative error in the small
/// eigenvalues grows like sqrt(cond) here instead of cond for an eigensolver.
inline double snc_log_det(const ObservationMatrix& obs) {
  const Eigen::Index p = obs.p();
  if (!(p < obs.n())) throw UnsupportedRegime("log determinant requires p/n < 1");
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(self_normalize(obs).data().transpose());
  double sum = static_cast<double>(p) * std::log(obs.ratio());
  for (Eigen::Index i = 0; i < p; ++i) {
    const double r = std::abs(qr.matrixQR()(i, i));
    if (!(r > 0.0)) throw DegenerateSpectrum("singular self-normalized sample covariance");
    sum += 2.0 * std::log(r);
  }
  return sum;
}

/// Integral of log against F_y, defined for y < 1.
inline double mp_log_moment(double y) {
  if (!(y > 0.0 && y < 1.0)) throw UnsupportedRegime("log moment of the MP law needs y in (0, 1)");
  return (y - 1.0) / y * std::log1p(-y) - 1.0;
}

/// G(f) = sum_i f(lambda_i) - p * integral of f against F_{y_n}.
inline double lss_g(const SpectralSummary& summary, const SpectralFunction& f) {
  const double p = static_cast<double>(summary.p);
  if (f.is_log()) {
    if (!(summary.y_n < 1.0)) throw UnsupportedRegime("log statistic requires y_n < 1");
    const double floor = summary.eigen_floor();
    double sum = 0.0;
    for (double v : summary.eigenvalues) {
      if (v <= floor) throw DegenerateSpectrum("log statistic with an eigenvalue at or below the eigen floor");
      sum += std::log(v);
    }
    if (summary.log_det) sum = *summary.log_det;
    return sum - p * mp_log_moment(summary.y_n);
  }
  const int k = f.exponent();
  double sum = 0.0;
  for (double v : summary.eigenvalues) sum += std::pow(v, k);
  return sum - p * mp_moment(k, summary.y_n);
}

/// Kolmogorov-Smirnov distance between the empirical spectral distribution and F_{y_n}.
inline double esd_ks_distance(const SpectralSummary& summary) {
  std::vector<double> ev(summary.eigenvalues.rbegin(), summary.eigenvalues.rend());
  const double p = static_cast<double>(ev.size());
  const double y = summary.y_n;
  double d = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const double f = mp_cdf(ev[i], y);
    const double f_left = ev[i] <= 0.0 ? 0.0 : f;
    d = std::max({d, (static_cast<double>(i) + 1.0) / p - f, f_left - static_cast<double>(i) / p});
  }
  return d;
}

}  // namespace sncov
