#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sncov/datagen.hpp"
#include "sncov/hypothesis.hpp"

using namespace sncov;

namespace {

ObservationMatrix panel(ModelKind kind, long p, long n, std::uint64_t seed, SigmaSpec sigma = SigmaSpec::identity()) {
  return gen_panel(GenModel{kind, sigma, p, n, seed});
}

void expect_same_report(const TestReport& a, const TestReport& b, double tol) {
  EXPECT_EQ(a.test_name, b.test_name);
  EXPECT_NEAR(a.statistic, b.statistic, tol * std::max(1.0, std::abs(a.statistic)));
  EXPECT_NEAR(a.z, b.z, tol * std::max(1.0, std::abs(a.z)));
  EXPECT_NEAR(a.p_value, b.p_value, tol);
  EXPECT_EQ(a.reject, b.reject);
  EXPECT_EQ(a.p, b.p);
  EXPECT_EQ(a.n, b.n);
}

}  // namespace

TEST(TestSelector, Parse) {
  EXPECT_EQ(TestSelector::parse("lr-sn"), TestSelector::lr_sn());
  EXPECT_EQ(TestSelector::parse("jhn-sn"), TestSelector::jhn_sn());
  EXPECT_EQ(TestSelector::parse("moment:4").order(), 4);
  EXPECT_EQ(TestSelector::parse("moment:4").name(), "MOMENT-4");
  EXPECT_THROW(TestSelector::parse("moment:9"), DomainError);
  EXPECT_THROW(TestSelector::parse("moment:1"), DomainError);
  EXPECT_THROW(TestSelector::parse("moment:x"), DomainError);
  EXPECT_THROW(TestSelector::parse("john"), DomainError);
}

TEST(Jhn, IdentitySpectrumIsTooRigid) {
  const auto r = test_jhn_sn(ObservationMatrix(Eigen::MatrixXd::Identity(12, 12)), 0.05);
  EXPECT_NEAR(r.z, (1.0 - 12.0) / 2.0, 1e-12);
  EXPECT_LT(r.p_value, 1e-6);
  EXPECT_TRUE(r.reject);
}

TEST(Report, InvariantsHold) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto obs = panel(ModelKind::Elliptical, 30, 60, seed);
    for (const auto& sel : {TestSelector::lr_sn(), TestSelector::jhn_sn(), TestSelector::moment(3)}) {
      const auto r = run_test(obs, sel, 0.1);
      EXPECT_EQ(r.reject, r.p_value < r.alpha);
      EXPECT_NEAR(r.p_value, 2.0 * (1.0 - 0.5 * std::erfc(-std::abs(r.z) / std::sqrt(2.0))), 1e-12);
      EXPECT_GE(r.p_value, 0.0);
      EXPECT_LE(r.p_value, 1.0);
      EXPECT_EQ(r.p, 30);
      EXPECT_EQ(r.n, 60);
      EXPECT_DOUBLE_EQ(r.y_n, 0.5);
    }
  }
}

TEST(Lr, StatisticIsSumOfLogs) {
  const auto obs = panel(ModelKind::IidGaussian, 20, 50, 3);
  const auto s = snc_eigenvalues(obs);
  double sum = 0.0;
  for (double v : s.eigenvalues) sum += std::log(v);
  const auto r = test_lr_sn(obs, 0.05);
  EXPECT_NEAR(r.statistic, sum, 1e-10);
  const auto cs = log_center_scale(20, 50);
  EXPECT_NEAR(r.z, (sum - cs.center) / cs.sd, 1e-10);
}

TEST(Lr, Errors) {
  EXPECT_THROW(test_lr_sn(panel(ModelKind::IidGaussian, 300, 200, 1), 0.05), UnsupportedRegime);
  EXPECT_THROW(test_lr_sn(panel(ModelKind::IidGaussian, 20, 20, 1), 0.05), UnsupportedRegime);
  Eigen::MatrixXd m = panel(ModelKind::IidGaussian, 10, 30, 1).data();
  m.row(9).setZero();
  EXPECT_THROW(test_lr_sn(ObservationMatrix(m), 0.05), DegenerateSpectrum);
}

TEST(Alpha, MustBeInOpenUnitInterval) {
  const auto obs = panel(ModelKind::IidGaussian, 10, 30, 1);
  EXPECT_THROW(test_jhn_sn(obs, 0.0), DomainError);
  EXPECT_THROW(test_jhn_sn(obs, 1.0), DomainError);
  EXPECT_THROW(test_moment_k(obs, 3, -0.1), DomainError);
}

TEST(Moment, OrderRange) {
  const auto obs = panel(ModelKind::IidGaussian, 10, 30, 1);
  EXPECT_THROW(test_moment_k(obs, 1, 0.05), DomainError);
  EXPECT_THROW(test_moment_k(obs, 9, 0.05), DomainError);
}

TEST(Moment, OrderTwoEqualsJhn) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    for (auto [p, n] : {std::pair{20L, 40L}, {40L, 20L}}) {
      const auto obs = panel(ModelKind::GarchT4, p, n, seed);
      EXPECT_NEAR(test_moment_k(obs, 2, 0.05).z, test_jhn_sn(obs, 0.05).z, 1e-10);
    }
  }
}

TEST(ScaleInvariance, PerColumnScaling) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto obs = panel(ModelKind::IidGaussian, 25, 50, seed);
    Eigen::MatrixXd m = obs.data();
    for (Eigen::Index i = 0; i < m.cols(); ++i) m.col(i) *= std::exp(u(rng));
    const ObservationMatrix scaled(m);
    for (const auto& sel : {TestSelector::lr_sn(), TestSelector::jhn_sn(), TestSelector::moment(4)}) {
      expect_same_report(run_test(obs, sel, 0.05), run_test(scaled, sel, 0.05), 1e-12);
    }
  }
}

TEST(Proportional, IdentityTargetIsDirectTest) {
  const auto obs = panel(ModelKind::Elliptical, 30, 45, 2);
  const auto direct = test_lr_sn(obs, 0.05);
  const auto via = test_proportional_to(obs, TargetSpec::identity(), TestSelector::lr_sn(), 0.05);
  expect_same_report(direct, via, 0.0);
  EXPECT_EQ(via.target, "identity");
}

TEST(Proportional, UniformDiagonalMatchesIdentity) {
  const auto obs = panel(ModelKind::IidGaussian, 30, 45, 2);
  const auto direct = test_jhn_sn(obs, 0.05);
  const auto via = test_proportional_to(obs, TargetSpec::diagonal(Eigen::VectorXd::Constant(30, 4.0)),
                                        TestSelector::jhn_sn(), 0.05);
  expect_same_report(direct, via, 1e-12);
  EXPECT_EQ(via.target, "diagonal");
}

TEST(Proportional, FullTargetWhitensToeplitz) {
  const long p = 40;
  const auto sigma = SigmaSpec::toeplitz(0.6);
  const auto obs = panel(ModelKind::IidGaussian, p, 80, 4, sigma);
  const Eigen::MatrixXd full = sigma_matrix(sigma, p);
  // Whitening by the symmetric root gives the same spectrum as removing the Cholesky factor.
  const Eigen::MatrixXd white = sigma_sqrt(sigma, p).triangularView<Eigen::Lower>().solve(obs.data());
  const auto expect = test_jhn_sn(ObservationMatrix(white), 0.05);
  const auto got = test_proportional_to(obs, TargetSpec::full(full), TestSelector::jhn_sn(), 0.05);
  EXPECT_NEAR(got.z, expect.z, 1e-9);
  EXPECT_EQ(got.target, "full");
}

TEST(Proportional, DiagonalTargetSize) {
  // Sigma = diag(d) with elliptical scalars: rejection rate near the nominal level.
  const long p = 40;
  Eigen::VectorXd d(p);
  for (long j = 0; j < p; ++j) d(j) = 0.5 + 0.1 * j;
  int rejections = 0;
  const int reps = 600;
  for (int r = 0; r < reps; ++r) {
    Eigen::MatrixXd m = panel(ModelKind::Elliptical, p, 80, 1000 + r).data();
    m = d.cwiseSqrt().asDiagonal() * m;
    rejections += test_proportional_to(ObservationMatrix(m), TargetSpec::diagonal(d), TestSelector::jhn_sn(), 0.05).reject;
  }
  const double rate = static_cast<double>(rejections) / reps;
  EXPECT_NEAR(rate, 0.05, 3.0 * std::sqrt(0.05 * 0.95 / reps) + 0.01);
}

TEST(TargetSpec, Validation) {
  EXPECT_THROW(TargetSpec::diagonal(Eigen::VectorXd::Zero(3)), DomainError);
  Eigen::VectorXd neg(2);
  neg << 1.0, -1.0;
  EXPECT_THROW(TargetSpec::diagonal(neg), DomainError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.2, 1;
  EXPECT_THROW(TargetSpec::full(asym), DomainError);
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 2, 2, 1;
  EXPECT_THROW(TargetSpec::full(indef), DomainError);
  const auto obs = panel(ModelKind::IidGaussian, 5, 10, 1);
  EXPECT_THROW(test_proportional_to(obs, TargetSpec::diagonal(Eigen::VectorXd::Ones(4)), TestSelector::jhn_sn(), 0.05),
               DomainError);
}

TEST(NullCalibration, IidGaussianSizes) {
  int jhn = 0;
  int m3 = 0;
  const int reps = 1500;
  for (int r = 0; r < reps; ++r) {
    const auto s = snc_eigenvalues(panel(ModelKind::IidGaussian, 100, 200, 50000 + r));
    jhn += evaluate_test(TestSelector::jhn_sn(), s, 0.05).reject;
    m3 += evaluate_test(TestSelector::moment(3), s, 0.05).reject;
  }
  const double se = std::sqrt(0.05 * 0.95 / reps);
  EXPECT_NEAR(static_cast<double>(jhn) / reps, 0.05, 3.0 * se + 0.005);
  EXPECT_NEAR(static_cast<double>(m3) / reps, 0.05, 0.015);
}

TEST(Power, MomentThreeDetectsToeplitz) {
  int rejections = 0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    const auto obs = panel(ModelKind::IidGaussian, 500, 1000, 7000 + r, SigmaSpec::toeplitz(0.1));
    rejections += test_moment_k(obs, 3, 0.05).reject;
  }
  EXPECT_GT(static_cast<double>(rejections) / reps, 0.5);
}
