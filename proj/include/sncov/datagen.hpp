#pragma once

// Panel generators: iid Gaussian, elliptical with half-normal scalars, and a
// GARCH-type recursion driven by standardized t(4) innovations.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sncov/errors.hpp"
#include "sncov/random.hpp"
#include "sncov/spectra.hpp"

namespace sncov {

struct SigmaSpec {
  enum class Kind { Identity, Toeplitz };
  Kind kind = Kind::Identity;
  double rho = 0.0;

  static SigmaSpec identity() { return {}; }
  static SigmaSpec toeplitz(double rho) {
    if (!(std::abs(rho) < 1.0)) throw DomainError("Toeplitz rho must lie in (-1, 1)");
    return {Kind::Toeplitz, rho};
  }

  /// "identity" or "toeplitz:<rho>".
  static SigmaSpec parse(const std::string& text) {
    if (text == "identity") return identity();
    const std::string prefix = "toeplitz:";
    if (text.rfind(prefix, 0) == 0) {
      const std::string num = text.substr(prefix.size());
      std::size_t used = 0;
      double rho = 0.0;
      try {
        rho = std::stod(num, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (num.empty() || used != num.size()) throw DomainError("bad Toeplitz coefficient in '" + text + "'");
      return toeplitz(rho);
    }
    throw DomainError("unknown sigma '" + text + "' (expected identity or toeplitz:<rho>)");
  }

  std::string name() const;

  friend bool operator==(const SigmaSpec&, const SigmaSpec&) = default;
};

enum class ModelKind { IidGaussian, Elliptical, GarchT4 };

inline std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::IidGaussian: return "iid";
    case ModelKind::Elliptical: return "elliptical";
    case ModelKind::GarchT4: return "garch-t4";
  }
  return {};
}

inline ModelKind parse_model_kind(const std::string& text) {
  if (text == "iid") return ModelKind::IidGaussian;
  if (text == "elliptical") return ModelKind::Elliptical;
  if (text == "garch-t4") return ModelKind::GarchT4;
  throw DomainError("unknown model '" + text + "' (expected iid, elliptical or garch-t4)");
}

struct GenModel {
  ModelKind kind = ModelKind::IidGaussian;
  SigmaSpec sigma;
  long p = 2;
  long n = 2;
  std::uint64_t seed = 42;
};

inline Eigen::MatrixXd sigma_matrix(const SigmaSpec& spec, long p) {
  if (p < 1) throw DomainError("dimension must be positive");
  if (spec.kind == SigmaSpec::Kind::Identity) return Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd m(p, p);
  for (long i = 0; i < p; ++i) {
    for (long j = 0; j < p; ++j) m(i, j) = std::pow(spec.rho, std::abs(i - j));
  }
  return m;
}

/// Lower Cholesky factor L with L L^T = Sigma.
inline Eigen::MatrixXd sigma_sqrt(const SigmaSpec& spec, long p) {
  if (spec.kind == SigmaSpec::Kind::Identity) return Eigen::MatrixXd::Identity(p, p);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_matrix(spec, p));
  if (llt.info() != Eigen::Success) throw DomainError("sigma is not positive definite");
  return llt.matrixL();
}

inline double sigma_trace(const SigmaSpec&, long p) { return static_cast<double>(p); }

inline std::string SigmaSpec::name() const {
  if (kind == Kind::Identity) return "identity";
  std::ostringstream out;
  out.precision(17);
  out << "toeplitz:" << rho;
  return out.str();
}

inline std::vector<double> std_t4_sample(std::size_t count, RandomStream& stream) {
  std::vector<double> out(count);
  for (double& v : out) v = stream.std_t4();
  return out;
}

inline constexpr double kGarchConst = 0.01;
inline constexpr double kGarchPersistence = 0.85;
inline constexpr double kGarchShock = 0.1;
inline constexpr double kGarchStart = 0.2;
inline constexpr int kGarchBurnIn = 100;

inline double garch_next_variance(double prev_omega2, double prev_norm2, double trace) {
  return kGarchConst + kGarchPersistence * prev_omega2 + kGarchShock * prev_norm2 / trace;
}

/// A generated panel with the scalar sequence that produced it.
struct GeneratedPanel {
  ObservationMatrix obs;
  std::vector<double> omega2;     // omega_i^2 per column; all ones for the iid model
  double omega2_before = 0.0;     // last burn-in state (GARCH only)
  double norm2_before = 0.0;      // |Y|^2 of the last burn-in column (GARCH only)
};

namespace detail {

// Stream tags within one panel seed.
inline constexpr std::uint64_t kInnovationStream = 0;
inline constexpr std::uint64_t kScalarStream = 1;
inline constexpr std::uint64_t kBurnInStream = 2;

inline Eigen::MatrixXd draw_innovations(RandomStream& stream, long p, long n, bool t4) {
  Eigen::MatrixXd z(p, n);
  double* data = z.data();
  for (Eigen::Index i = 0; i < z.size(); ++i) data[i] = t4 ? stream.std_t4() : stream.normal();
  return z;
}

inline Eigen::MatrixXd color(const Eigen::MatrixXd& l, const SigmaSpec& spec, Eigen::MatrixXd z) {
  if (spec.kind == SigmaSpec::Kind::Identity) return z;
  return l.triangularView<Eigen::Lower>() * z;
}

}  // namespace detail

inline GeneratedPanel gen_panel_detailed(const GenModel& model) {
  if (model.p < 2 || model.n < 2) throw DomainError("panel needs p >= 2 and n >= 2");
  const long p = model.p;
  const long n = model.n;
  const Eigen::MatrixXd l = sigma_sqrt(model.sigma, p);
  const RandomStream root(model.seed);
  RandomStream innovations = root.substream(detail::kInnovationStream);
  const bool t4 = model.kind == ModelKind::GarchT4;

  Eigen::MatrixXd y = detail::color(l, model.sigma, detail::draw_innovations(innovations, p, n, t4));
  std::vector<double> omega2(static_cast<std::size_t>(n), 1.0);
  double omega2_before = 0.0;
  double norm2_before = 0.0;

  switch (model.kind) {
    case ModelKind::IidGaussian: break;
    case ModelKind::Elliptical: {
      RandomStream scalars = root.substream(detail::kScalarStream);
      for (long i = 0; i < n; ++i) {
        const double w = std::abs(scalars.normal());
        omega2[static_cast<std::size_t>(i)] = w * w;
        y.col(i) *= w;
      }
      break;
    }
    case ModelKind::GarchT4: {
      const double trace = sigma_trace(model.sigma, p);
      RandomStream burn = root.substream(detail::kBurnInStream);
      Eigen::VectorXd col(p);
      double w2 = kGarchStart;
      double norm2 = 0.0;
      for (int b = 0; b < kGarchBurnIn; ++b) {
        if (b > 0) w2 = garch_next_variance(w2, norm2, trace);
        for (long j = 0; j < p; ++j) col(j) = burn.std_t4();
        if (model.sigma.kind != SigmaSpec::Kind::Identity) col = l.triangularView<Eigen::Lower>() * col;
        col *= std::sqrt(w2);
        norm2 = col.squaredNorm();
      }
      omega2_before = w2;
      norm2_before = norm2;
      for (long i = 0; i < n; ++i) {
        w2 = garch_next_variance(w2, norm2, trace);
        omega2[static_cast<std::size_t>(i)] = w2;
        y.col(i) *= std::sqrt(w2);
        norm2 = y.col(i).squaredNorm();
      }
      break;
    }
  }
  return GeneratedPanel{ObservationMatrix(std::move(y)), std::move(omega2), omega2_before, norm2_before};
}

inline ObservationMatrix gen_panel(const GenModel& model) { return gen_panel_detailed(model).obs; }

}  // namespace sncov
