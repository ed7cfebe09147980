// Acceptance suite: prints one PASS/FAIL line per criterion, exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sncov/io.hpp"
#include "sncov/sncov.hpp"
#include "support/three_factor_sim.hpp"

using namespace sncov;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}

int threads() { return default_thread_count(); }

// ---- 1 -----------------------------------------------------------------------

Outcome moments_vs_quadrature() {
  Outcome o;
  const Timer t;
  double worst = 0.0;
  for (double y : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    for (int k = 1; k <= 8; ++k) {
      const double closed = mp_moment(k, y);
      const double quad = mp_quadrature([k](double x) { return std::pow(x, k); }, y);
      worst = std::max(worst, std::abs(closed - quad) / std::abs(closed));
    }
  }
  const double secs = t.seconds();
  o.pass = worst < 1e-9 && secs < 1.0;
  o.detail = "max rel err " + fmt(worst) + ", " + fmt(secs) + " s";
  return o;
}

// ---- 2 -----------------------------------------------------------------------

Outcome contour_vs_closed_form() {
  Outcome o;
  const Timer t;
  double log_err = 0.0;
  for (double y : {0.25, 0.5, 0.75}) {
    const auto f = SpectralFunction::log();
    const auto [c1, c2] = default_contour_pair(f, f, y);
    const LimitMoments closed = closed_form_moments(f, y);
    log_err = std::max({log_err, std::abs(contour_mean(f, y, c1) - closed.mean),
                        std::abs(contour_cov(f, f, y, c1, c2) - closed.variance)});
  }
  double mean_rel = 0.0;
  double var_rel = 0.0;
  for (int k : {2, 3, 4}) {
    for (double y : {0.5, 2.0}) {
      const auto f = SpectralFunction::power(k);
      const auto [c1, c2] = default_contour_pair(f, f, y);
      const double mu = moment_mu(k, y);
      const double s2 = moment_sigma2(k, y);
      mean_rel = std::max(mean_rel, std::abs(contour_mean(f, y, c1) - mu) / std::max(1.0, std::abs(mu)));
      var_rel = std::max(var_rel, std::abs(contour_cov(f, f, y, c1, c2) - s2) / std::abs(s2));
    }
  }
  const double secs = t.seconds();
  o.pass = log_err < 1e-6 && mean_rel < 1e-5 && var_rel < 1e-4 && secs < 30.0;
  o.detail = "log abs err " + fmt(log_err) + ", power mean rel " + fmt(mean_rel) + ", var rel " + fmt(var_rel) + ", " +
             fmt(secs) + " s";
  return o;
}

// ---- 3 -----------------------------------------------------------------------

Outcome moment2_equals_jhn() {
  Outcome o;
  double worst = 0.0;
  RandomStream sizes(303);
  for (int trial = 0; trial < 100; ++trial) {
    const long p = 5 + static_cast<long>(95.0 * sizes.uniform_open0());
    const long n = 5 + static_cast<long>(195.0 * sizes.uniform_open0());
    const auto kind = static_cast<ModelKind>(trial % 3);
    const ObservationMatrix obs = gen_panel({kind, SigmaSpec::identity(), p, n, derive_seed({303, std::uint64_t(trial)})});
    worst = std::max(worst, std::abs(test_moment_k(obs, 2, 0.05).z - test_jhn_sn(obs, 0.05).z));
  }
  o.pass = worst < 1e-10;
  o.detail = "max |z diff| " + fmt(worst);
  return o;
}

// ---- 4-6 ---------------------------------------------------------------------

struct Expect {
  long p;
  double y;
  const char* test;
  double target;  // percent
  double tol;     // percentage points
};

ExperimentConfig cell_config(const std::string& name, ModelKind model, SigmaSpec sigma, std::vector<long> ps, double y,
                             std::vector<TestSelector> tests) {
  ExperimentConfig c;
  c.name = name;
  c.model = model;
  c.sigma = sigma;
  c.p_list = std::move(ps);
  c.y_list = {y};
  c.tests = std::move(tests);
  c.replications = 2000;
  c.master_seed = 42;
  return c;
}

Outcome check_cells(const std::vector<ExperimentConfig>& cfgs, const std::vector<Expect>& expects) {
  const Timer t;
  const ExperimentReport report = run_experiments(cfgs, threads());
  Outcome o;
  std::ostringstream d;
  for (const auto& e : expects) {
    const CellResult* c = nullptr;
    for (const auto& cell : report.cells) {
      if (cell.p == e.p && cell.y == e.y && cell.test == e.test) c = &cell;
    }
    if (c == nullptr) {
      o.pass = false;
      d << e.test << "(" << e.p << "," << e.y << ") missing; ";
      continue;
    }
    const double pct = 100.0 * c->rejection_rate;
    const bool ok = std::abs(pct - e.target) <= e.tol;
    o.pass = o.pass && ok;
    d << e.test << "(" << e.p << "," << e.y << ")=" << fmt(pct) << (ok ? "" : "!") << " vs " << e.target << "; ";
  }
  d << fmt(t.seconds()) << " s";
  o.detail = d.str();
  return o;
}

const TestSelector kLr = TestSelector::lr_sn();
const TestSelector kJhn = TestSelector::jhn_sn();

Outcome table3_sizes() {
  return check_cells(
      {cell_config("table3", ModelKind::Elliptical, SigmaSpec::identity(), {100, 200, 500}, 0.5, {kLr, kJhn}),
       cell_config("table3", ModelKind::Elliptical, SigmaSpec::identity(), {100, 500}, 2.0, {kJhn})},
      {{100, 0.5, "JHN-SN", 5.2, 1.5},
       {200, 0.5, "JHN-SN", 4.9, 1.5},
       {500, 0.5, "JHN-SN", 5.2, 1.5},
       {100, 2.0, "JHN-SN", 4.9, 1.5},
       {500, 2.0, "JHN-SN", 5.2, 1.5},
       {100, 0.5, "LR-SN", 4.6, 1.5},
       {500, 0.5, "LR-SN", 4.9, 1.5}});
}

Outcome table4_powers() {
  const SigmaSpec toe = SigmaSpec::toeplitz(0.1);
  return check_cells({cell_config("table4", ModelKind::Elliptical, toe, {200}, 0.5, {kLr, kJhn}),
                      cell_config("table4", ModelKind::Elliptical, toe, {500}, 2.0, {kJhn})},
                     {{200, 0.5, "JHN-SN", 97.0, 3.0}, {200, 0.5, "LR-SN", 88.7, 3.0}, {500, 2.0, "JHN-SN", 70.5, 4.0}});
}

Outcome garch_tables() {
  const Outcome sizes = check_cells({cell_config("table5", ModelKind::GarchT4, SigmaSpec::identity(), {200}, 0.5, {kLr, kJhn})},
                                    {{200, 0.5, "LR-SN", 5.7, 1.5}, {200, 0.5, "JHN-SN", 5.4, 1.5}});
  const Outcome powers =
      check_cells({cell_config("table6", ModelKind::GarchT4, SigmaSpec::toeplitz(0.1), {200}, 0.5, {kLr, kJhn})},
                  {{200, 0.5, "LR-SN", 87.8, 3.0}, {200, 0.5, "JHN-SN", 96.6, 3.0}});
  return {sizes.pass && powers.pass, "size: " + sizes.detail + " | power: " + powers.detail};
}

// ---- 7 -----------------------------------------------------------------------

Outcome esd_convergence() {
  Outcome o;
  double worst = 0.0;
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const double d = esd_ks_distance(snc_eigenvalues(gen_panel({ModelKind::IidGaussian, SigmaSpec::identity(), 1000, 2000, seed})));
    worst = std::max(worst, d);
    good += d < 0.05;
  }
  o.pass = good == 10;
  o.detail = std::to_string(good) + "/10 seeds, max KS " + fmt(worst);
  return o;
}

// ---- 8 -----------------------------------------------------------------------

Outcome scale_invariance() {
  Outcome o;
  RandomStream rng(808);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const long p = 5 + static_cast<long>(60.0 * rng.uniform_open0());
    const long n = 5 + static_cast<long>(120.0 * rng.uniform_open0());
    const auto kind = static_cast<ModelKind>(trial % 3);
    const ObservationMatrix obs = gen_panel({kind, SigmaSpec::identity(), p, n, derive_seed({808, std::uint64_t(trial)})});
    Eigen::MatrixXd scaled = obs.data();
    for (long i = 0; i < n; ++i) scaled.col(i) *= std::exp(4.0 * rng.normal());
    const ObservationMatrix obs2(std::move(scaled));
    std::vector<TestSelector> tests{kJhn, TestSelector::moment(3), TestSelector::moment(4)};
    if (p < n) tests.push_back(kLr);
    for (const auto& sel : tests) worst = std::max(worst, std::abs(run_test(obs, sel, 0.05).z - run_test(obs2, sel, 0.05).z));
  }
  double spectra = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto a = snc_eigenvalues(gen_panel({ModelKind::IidGaussian, SigmaSpec::toeplitz(0.3), 40, 60, seed}));
    const auto b = snc_eigenvalues(gen_panel({ModelKind::Elliptical, SigmaSpec::toeplitz(0.3), 40, 60, seed}));
    for (std::size_t i = 0; i < a.eigenvalues.size(); ++i) spectra = std::max(spectra, std::abs(a.eigenvalues[i] - b.eigenvalues[i]));
  }
  o.pass = worst <= 1e-12 && spectra <= 1e-12;
  o.detail = "max |z diff| " + fmt(worst) + " over 200 trials, elliptical vs iid spectra " + fmt(spectra);
  return o;
}

// ---- 9 -----------------------------------------------------------------------

Outcome pipeline_simulation() {
  constexpr int kPaths = 20;
  const sim::Calibration cal = sim::calibrate(sim::reference_panel(2012));
  std::vector<double> z;
  std::size_t skipped = 0;
  for (int path = 0; path < kPaths; ++path) {
    const sim::Panels s = sim::simulate(cal, 1000 + static_cast<std::uint64_t>(path));
    const RollingOutput out = rolling_diag_test(s.returns, s.factors, FactorModel::Ff3, 0.05);
    skipped += out.skipped.size();
    for (const auto& r : out.results) z.push_back(r.report.z);
  }
  const ZSummary s = summarize_z(z);
  Outcome o;
  const double within = 100.0 * s.fraction_within;
  o.pass = std::abs(within - 94.5) <= 4.0 && std::abs(s.mean - 0.6) <= 0.3 && std::abs(s.sd - 0.9) <= 0.3;
  o.detail = std::to_string(kPaths) + " paths x " + std::to_string(z.size() / kPaths) + " months (" +
             std::to_string(skipped) + " skipped): within " + fmt(within) + "%, mean " + fmt(s.mean) + ", sd " +
             fmt(s.sd);
  return o;
}

// ---- 10 ----------------------------------------------------------------------

Outcome null_p_uniformity() {
  constexpr std::size_t kReps = 5000;
  std::vector<double> pv(kReps);
  parallel_for(kReps, threads(), [&](std::size_t r) {
    pv[r] = test_jhn_sn(gen_panel({ModelKind::IidGaussian, SigmaSpec::identity(), 100, 200, derive_seed({1010, r})}), 0.05)
                .p_value;
  });
  const double d = ks_distance(pv, [](double u) { return std::clamp(u, 0.0, 1.0); });
  const double p = kolmogorov_p_value(d, kReps);
  return {p >= 0.01, "KS D " + fmt(d) + ", p-value " + fmt(p)};
}

// ---- 11 ----------------------------------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome thread_determinism() {
  const auto dir = std::filesystem::temp_directory_path();
  std::vector<std::string> outputs;
  for (int t : {1, 4, 16}) {
    const std::string path = (dir / ("sncov_accept_" + std::to_string(t) + ".json")).string();
    const std::string cmd = std::string(SNCOV_CLI_PATH) + " simulate --design table5 --reps 25 --seed 7 --threads " +
                            std::to_string(t) + " --out " + path;
    if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + cmd};
    outputs.push_back(slurp(path));
    std::remove(path.c_str());
  }
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
  return {same, std::to_string(outputs[0].size()) + " bytes, " + (same ? "identical" : "different") +
                    " at 1/4/16 threads"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"MP moments vs quadrature", moments_vs_quadrature},
      {"contour CLT vs closed form", contour_vs_closed_form},
      {"moment-2 z equals JHN-SN z", moment2_equals_jhn},
      {"elliptical sizes", table3_sizes},
      {"elliptical powers", table4_powers},
      {"GARCH-t4 sizes and powers", garch_tables},
      {"ESD converges to MP", esd_convergence},
      {"scale invariance", scale_invariance},
      {"rolling pipeline simulation", pipeline_simulation},
      {"null p-value uniformity", null_p_uniformity},
      {"thread-count determinism", thread_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
