#pragma once

// Sphericity tests on self-normalized observations (LR-SN, JHN-SN, moment-k)
// and the reduction of H0: Sigma proportional to Sigma0 to the identity case.

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "sncov/clt.hpp"
#include "sncov/errors.hpp"
#include "sncov/spectra.hpp"
#include "sncov/stats.hpp"

namespace sncov {

class TestSelector {
 public:
  enum class Kind { LrSn, JhnSn, Moment };

  static TestSelector lr_sn() { return TestSelector(Kind::LrSn, 0); }
  static TestSelector jhn_sn() { return TestSelector(Kind::JhnSn, 2); }
  static TestSelector moment(int k) {
    if (k < 2 || k > 8) throw DomainError("moment test order must be in [2, 8], got " + std::to_string(k));
    return TestSelector(Kind::Moment, k);
  }

  // "lr-sn", "jhn-sn" or "moment:k".
  static TestSelector parse(const std::string& text) {
    if (text == "lr-sn") return lr_sn();
    if (text == "jhn-sn") return jhn_sn();
    const std::string prefix = "moment:";
    if (text.rfind(prefix, 0) == 0) {
      const std::string digits = text.substr(prefix.size());
      if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos || digits.size() > 3) {
        throw DomainError("bad test selector '" + text + "'");
      }
      return moment(std::stoi(digits));
    }
    throw DomainError("unknown test '" + text + "' (expected lr-sn, jhn-sn or moment:k)");
  }

  Kind kind() const { return kind_; }
  int order() const { return k_; }

  std::string name() const {
    switch (kind_) {
      case Kind::LrSn: return "LR-SN";
      case Kind::JhnSn: return "JHN-SN";
      case Kind::Moment: return "MOMENT-" + std::to_string(k_);
    }
    return {};
  }

  friend bool operator==(const TestSelector&, const TestSelector&) = default;

 private:
  TestSelector(Kind kind, int k) : kind_(kind), k_(k) {}
  Kind kind_;
  int k_;
};

struct TestReport {
  std::string test_name;
  int k = 0;                 // moment order; 2 for JHN-SN, 0 for LR-SN
  double statistic = 0.0;    // L_n, T_n or G(x^k)
  double z = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  long p = 0;
  long n = 0;
  double y_n = 0.0;
  std::string target = "identity";
};

class TargetSpec {
 public:
  enum class Kind { Identity, Diagonal, FullPSD };

  static TargetSpec identity() { return TargetSpec(Kind::Identity); }

  static TargetSpec diagonal(Eigen::VectorXd d) {
    if (d.size() == 0 || !d.allFinite() || (d.array() <= 0.0).any()) {
      throw DomainError("diagonal target entries must be finite and positive");
    }
    TargetSpec t(Kind::Diagonal);
    t.diag_ = std::move(d);
    return t;
  }

  static TargetSpec full(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) throw DomainError("full target must be square and finite");
    if (!m.isApprox(m.transpose(), 1e-12)) throw DomainError("full target must be symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(m).info() != Eigen::Success) throw DomainError("full target is not positive definite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
      throw DomainError("full target is not positive definite");
    }
    TargetSpec t(Kind::FullPSD);
    t.inv_sqrt_ = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                  eig.eigenvectors().transpose();
    return t;
  }

  Kind kind() const { return kind_; }
  Eigen::Index dimension() const {
    switch (kind_) {
      case Kind::Diagonal: return diag_.size();
      case Kind::FullPSD: return inv_sqrt_.rows();
      case Kind::Identity: break;
    }
    return 0;
  }
  std::string name() const {
    switch (kind_) {
      case Kind::Identity: return "identity";
      case Kind::Diagonal: return "diagonal";
      case Kind::FullPSD: return "full";
    }
    return {};
  }

  /// Sigma0^{-1/2} Y_i for every column; the symmetric square root for full targets.
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& y) const {
    switch (kind_) {
      case Kind::Identity: return y;
      case Kind::Diagonal:
        if (diag_.size() != y.rows()) throw DomainError("diagonal target dimension does not match p");
        return diag_.cwiseSqrt().cwiseInverse().asDiagonal() * y;
      case Kind::FullPSD:
        if (inv_sqrt_.rows() != y.rows()) throw DomainError("full target dimension does not match p");
        return inv_sqrt_ * y;
    }
    return y;
  }

 private:
  explicit TargetSpec(Kind kind) : kind_(kind) {}
  Kind kind_;
  Eigen::VectorXd diag_;
  Eigen::MatrixXd inv_sqrt_;
};

namespace detail {

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

inline TestReport finish_report(TestReport r) {
  r.p_value = two_sided_p_value(r.z);
  r.reject = r.p_value < r.alpha;
  return r;
}

}  // namespace detail

/// Runs one identity test on an already computed spectrum.
inline TestReport evaluate_test(const TestSelector& test, const SpectralSummary& s, double alpha) {
  detail::require_alpha(alpha);
  TestReport r;
  r.test_name = test.name();
  r.k = test.order();
  r.alpha = alpha;
  r.p = static_cast<long>(s.p);
  r.n = static_cast<long>(s.n);
  r.y_n = s.y_n;
  switch (test.kind()) {
    case TestSelector::Kind::LrSn: {
      if (!(s.y_n < 1.0)) throw UnsupportedRegime("LR-SN requires p/n < 1");
      const double g = lss_g(s, SpectralFunction::log());
      const CenterScale cs = log_center_scale(r.p, r.n);
      r.statistic = g + static_cast<double>(s.p) * mp_log_moment(s.y_n);
      r.z = (r.statistic - cs.center) / cs.sd;
      break;
    }
    case TestSelector::Kind::JhnSn: {
      r.z = jhn_standardize(s);
      r.statistic = 2.0 * r.z - 1.0;
      break;
    }
    case TestSelector::Kind::Moment: {
      const int k = test.order();
      r.statistic = lss_g(s, SpectralFunction::power(k));
      r.z = (r.statistic - moment_mu(k, s.y_n)) / std::sqrt(moment_sigma2(k, s.y_n));
      break;
    }
  }
  return detail::finish_report(r);
}

inline TestReport test_jhn_sn(const ObservationMatrix& obs, double alpha) {
  detail::require_alpha(alpha);
  return evaluate_test(TestSelector::jhn_sn(), snc_eigenvalues(obs), alpha);
}

inline TestReport test_lr_sn(const ObservationMatrix& obs, double alpha) {
  detail::require_alpha(alpha);
  if (!(obs.ratio() < 1.0)) throw UnsupportedRegime("LR-SN requires p/n < 1, got p/n = " + std::to_string(obs.ratio()));
  SpectralSummary s = snc_eigenvalues(obs);
  s.log_det = snc_log_det(obs);
  return evaluate_test(TestSelector::lr_sn(), s, alpha);
}

inline TestReport test_moment_k(const ObservationMatrix& obs, int k, double alpha) {
  const TestSelector sel = TestSelector::moment(k);
  detail::require_alpha(alpha);
  return evaluate_test(sel, snc_eigenvalues(obs), alpha);
}

inline TestReport run_test(const ObservationMatrix& obs, const TestSelector& test, double alpha) {
  switch (test.kind()) {
    case TestSelector::Kind::LrSn: return test_lr_sn(obs, alpha);
    case TestSelector::Kind::JhnSn: return test_jhn_sn(obs, alpha);
    case TestSelector::Kind::Moment: return test_moment_k(obs, test.order(), alpha);
  }
  throw DomainError("unknown test");
}

/// Tests H0: Sigma proportional to the target by whitening with Sigma0^{-1/2}.
inline TestReport test_proportional_to(const ObservationMatrix& obs, const TargetSpec& target, const TestSelector& test,
                                       double alpha) {
  TestReport r = target.kind() == TargetSpec::Kind::Identity
                     ? run_test(obs, test, alpha)
                     : run_test(ObservationMatrix(target.whiten(obs.data())), test, alpha);
  r.target = target.name();
  return r;
}

}  // namespace sncov
