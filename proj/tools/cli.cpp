#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sncov/sncov.hpp"

namespace sncov::cli {
namespace {

enum class LogLevel { Quiet, Info, Debug };

struct GlobalOptions {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out_path;
  LogLevel log_level = LogLevel::Info;
};

int env_or_default_threads() {
  if (const char* env = std::getenv("SNCOV_THREADS"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const int n = std::stoi(env, &used);
      if (used == std::string(env).size() && n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("SNCOV_THREADS must be a positive integer, got '") + env + "'");
  }
  return default_thread_count();
}

// Writes to --out when given, otherwise to the command's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw DomainError("cannot write '" + path + "'");
    }
    stream_ = file_ ? file_.get() : &fallback;
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void print_json(std::ostream& out, const nlohmann::ordered_json& j) { out << j.dump(2) << '\n'; }

TargetSpec parse_target(const std::string& text, long p) {
  if (text == "identity") return TargetSpec::identity();
  if (text.rfind("diag:", 0) == 0) {
    const Eigen::MatrixXd m = read_matrix_csv(text.substr(5));
    Eigen::VectorXd d = m.reshaped();
    if (d.size() != p) {
      throw DomainError("diagonal target has " + std::to_string(d.size()) + " entries, data has p = " + std::to_string(p));
    }
    return TargetSpec::diagonal(std::move(d));
  }
  if (text.rfind("full:", 0) == 0) {
    const Eigen::MatrixXd m = read_matrix_csv(text.substr(5));
    if (m.rows() != p) throw DomainError("full target dimension does not match p = " + std::to_string(p));
    return TargetSpec::full(m);
  }
  throw DomainError("unknown target '" + text + "' (expected identity, diag:file.csv or full:file.csv)");
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  GlobalOptions g;
  std::string log_level = "info";
  std::optional<int> threads_flag;

  CLI::App app{"Sphericity tests for high-dimensional data via the self-normalized sample covariance", "sncov"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "Random seed (default 42)");
  app.add_option("--threads", threads_flag, "Worker threads (default: SNCOV_THREADS or logical cores)");
  app.add_option("--out", g.out_path, "Write the primary output to this file instead of stdout");
  app.add_option("--log-level", log_level, "Diagnostics on stderr: quiet, info or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  // mp
  auto* mp = app.add_subcommand("mp", "Marchenko-Pastur law: moments, density, CDF, Stieltjes transform");
  mp->require_subcommand(1);
  int mp_k = 0;
  double mp_y = 0.0;
  double mp_x = 0.0;
  double mp_re = 0.0;
  double mp_im = 0.0;
  auto* mp_moment_cmd = mp->add_subcommand("moment", "k-th moment of F_y");
  mp_moment_cmd->add_option("--k", mp_k, "Moment order (0..50)")->required();
  mp_moment_cmd->add_option("--y", mp_y, "Ratio y > 0")->required();
  auto* mp_density_cmd = mp->add_subcommand("density", "Density of the continuous part of F_y");
  mp_density_cmd->add_option("--x", mp_x, "Evaluation point")->required();
  mp_density_cmd->add_option("--y", mp_y, "Ratio y > 0")->required();
  auto* mp_cdf_cmd = mp->add_subcommand("cdf", "Distribution function F_y, atom included");
  mp_cdf_cmd->add_option("--x", mp_x, "Evaluation point")->required();
  mp_cdf_cmd->add_option("--y", mp_y, "Ratio y > 0")->required();
  auto* mp_edges_cmd = mp->add_subcommand("edges", "Support edges a-, a+");
  mp_edges_cmd->add_option("--y", mp_y, "Ratio y > 0")->required();
  auto* mp_st_cmd = mp->add_subcommand("stieltjes", "Companion Stieltjes transform; prints real then imaginary part");
  mp_st_cmd->add_option("--re", mp_re, "Real part of z")->required();
  mp_st_cmd->add_option("--im", mp_im, "Imaginary part of z")->required();
  mp_st_cmd->add_option("--y", mp_y, "Ratio y > 0")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a p x n panel (CSV, p rows, no header)");
  std::string gen_model;
  std::string gen_sigma = "identity";
  long gen_p = 0;
  long gen_n = 0;
  gen->add_option("--model", gen_model, "iid, elliptical or garch-t4")->required();
  gen->add_option("--p", gen_p, "Dimension")->required();
  gen->add_option("--n", gen_n, "Sample size")->required();
  gen->add_option("--sigma", gen_sigma, "identity or toeplitz:<rho>");

  // test
  auto* test = app.add_subcommand("test", "Run a sphericity test on a CSV panel (p rows x n columns)");
  std::string test_input;
  std::string test_name;
  std::string test_target = "identity";
  double test_alpha = 0.05;
  test->add_option("--input", test_input, "Data CSV")->required();
  test->add_option("--test", test_name, "lr-sn, jhn-sn or moment:k")->required();
  test->add_option("--alpha", test_alpha, "Level (default 0.05)");
  test->add_option("--target", test_target, "identity, diag:file.csv or full:file.csv");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo size/power experiment");
  std::string sim_design;
  std::optional<long> sim_reps;
  bool sim_render = false;
  bool sim_timing = false;
  sim->add_option("--design", sim_design, "table3, table4, table5, table6 or a JSON design file")->required();
  sim->add_option("--reps", sim_reps, "Replications per cell (default 2000)");
  sim->add_flag("--render", sim_render, "Print the rejection-rate table");
  sim->add_flag("--timing", sim_timing, "Include wall time in the JSON report");

  // verify-clt
  auto* vclt = app.add_subcommand("verify-clt", "Closed-form vs contour-integral mean and variance of G(f)");
  std::string vclt_f;
  double vclt_y = 0.0;
  std::optional<double> vclt_radius;
  std::optional<int> vclt_nodes;
  vclt->add_option("--f", vclt_f, "log or power:k")->required();
  vclt->add_option("--y", vclt_y, "Ratio y > 0")->required();
  vclt->add_option("--radius", vclt_radius, "Radius of the inner circle (outer is 1.3x)");
  vclt->add_option("--nodes", vclt_nodes, "Trapezoid nodes per circle");

  // empirical
  auto* emp = app.add_subcommand("empirical", "Rolling monthly JHN-SN test of factor-model residuals");
  std::string emp_returns;
  std::string emp_factors;
  std::string emp_model = "ff3";
  std::string emp_norms;
  double emp_alpha = 0.05;
  emp->add_option("--returns", emp_returns, "Returns CSV: date,ticker1,...")->required();
  emp->add_option("--factors", emp_factors, "Factors CSV: date,mktrf[,smb,hml]")->required();
  emp->add_option("--model", emp_model, "capm or ff3")->check(CLI::IsMember({"capm", "ff3"}));
  emp->add_option("--alpha", emp_alpha, "Level (default 0.05)");
  emp->add_option("--norms", emp_norms, "Also write daily residual norms to this CSV");

  if (argc > 1 && argv[1][0] != '-') {
    const std::string name = argv[1];
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == name;
    if (!known) {
      err << "error: unknown subcommand '" << name << "'\n" << app.help();
      return kUsageOrDomain;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help
    err << "error: " << e.what() << '\n';
    if (dynamic_cast<const CLI::ExtrasError*>(&e) != nullptr ||
        dynamic_cast<const CLI::RequiredError*>(&e) != nullptr) {
      err << app.help();
    }
    return kUsageOrDomain;
  }

  try {
    g.log_level = log_level == "quiet" ? LogLevel::Quiet : log_level == "debug" ? LogLevel::Debug : LogLevel::Info;
    g.threads = threads_flag ? *threads_flag : env_or_default_threads();
    if (g.threads < 1) throw ConfigError("--threads must be at least 1");

    if (mp->parsed()) {
      Sink sink(g.out_path, out);
      std::ostream& o = sink.get();
      if (mp_moment_cmd->parsed()) {
        o << format_double(mp_moment(mp_k, mp_y)) << '\n';
      } else if (mp_density_cmd->parsed()) {
        o << format_double(density(mp_x, mp_y)) << '\n';
      } else if (mp_cdf_cmd->parsed()) {
        o << format_double(mp_cdf(mp_x, mp_y)) << '\n';
      } else if (mp_edges_cmd->parsed()) {
        const MPLaw law(mp_y);
        o << format_double(law.a_minus) << '\n' << format_double(law.a_plus) << '\n';
      } else {
        const auto m = stieltjes_m_underline({mp_re, mp_im}, mp_y);
        o << format_double(m.real()) << '\n' << format_double(m.imag()) << '\n';
      }
    } else if (gen->parsed()) {
      const GenModel model{parse_model_kind(gen_model), SigmaSpec::parse(gen_sigma), gen_p, gen_n, g.seed};
      const ObservationMatrix obs = gen_panel(model);
      Sink sink(g.out_path, out);
      write_matrix_csv(sink.get(), obs.data());
    } else if (test->parsed()) {
      const TestSelector selector = TestSelector::parse(test_name);
      const ObservationMatrix obs(read_matrix_csv(test_input));
      const TargetSpec target = parse_target(test_target, static_cast<long>(obs.p()));
      const TestReport report = test_proportional_to(obs, target, selector, test_alpha);
      Sink sink(g.out_path, out);
      print_json(sink.get(), to_json(report));
    } else if (sim->parsed()) {
      std::vector<ExperimentConfig> configs;
      const bool builtin = sim_design.rfind("table", 0) == 0 && sim_design.find('.') == std::string::npos;
      if (builtin) {
        configs = design_configs(sim_design, sim_reps.value_or(2000), g.seed);
      } else {
        configs = read_experiments(sim_design);
        for (auto& c : configs) {
          if (sim_reps) c.replications = *sim_reps;
          if (app.count("--seed") > 0) c.master_seed = g.seed;
        }
      }
      const ExperimentReport report = run_experiments(configs, g.threads);
      if (g.log_level == LogLevel::Debug) {
        err << "simulate: " << report.cells.size() << " cells in " << report.wall_time_seconds << " s on " << g.threads
            << " threads\n";
      }
      if (!g.out_path.empty() || !sim_render) {
        Sink sink(g.out_path, out);
        print_json(sink.get(), to_json(report, sim_timing));
      }
      if (sim_render) out << render_table(report, builtin ? sim_design : "custom");
    } else if (vclt->parsed()) {
      const SpectralFunction f = SpectralFunction::parse(vclt_f);
      auto [first, second] = default_contour_pair(f, f, vclt_y);
      if (vclt_radius) {
        first.radius = *vclt_radius;
        second = ContourSpec{first.center_re, 1.3 * first.radius, first.nodes};
      }
      if (vclt_nodes) {
        first.nodes = *vclt_nodes;
        second.nodes = *vclt_nodes;
      }
      const LimitMoments closed = closed_form_moments(f, vclt_y);
      const double mean = contour_mean(f, vclt_y, first);
      const double var = contour_cov(f, f, vclt_y, first, second);
      nlohmann::ordered_json j{
          {"f", f.name()},
          {"y", vclt_y},
          {"contours",
           {{{"center", first.center_re}, {"radius", first.radius}, {"nodes", first.nodes}},
            {{"center", second.center_re}, {"radius", second.radius}, {"nodes", second.nodes}}}},
          {"mean", {{"closed_form", closed.mean}, {"contour", mean}, {"abs_diff", std::abs(mean - closed.mean)}}},
          {"variance", {{"closed_form", closed.variance}, {"contour", var}, {"abs_diff", std::abs(var - closed.variance)}}}};
      Sink sink(g.out_path, out);
      print_json(sink.get(), j);
    } else if (emp->parsed()) {
      const ReturnPanel returns = read_return_panel(emp_returns);
      const FactorPanel factors = read_factor_panel(emp_factors);
      const FactorModel model = parse_factor_model(emp_model);
      const RollingOutput rolled = rolling_diag_test(returns, factors, model, emp_alpha);
      if (g.log_level != LogLevel::Quiet) {
        for (const auto& s : rolled.skipped) err << "skipped " << s.month << ": " << s.reason << '\n';
      }
      nlohmann::ordered_json results = nlohmann::ordered_json::array();
      for (const auto& r : rolled.results) results.push_back(to_json(r));
      nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
      for (const auto& s : rolled.skipped) skipped.push_back({{"month", s.month}, {"reason", s.reason}});
      nlohmann::ordered_json j{{"model", emp_model},
                               {"results", std::move(results)},
                               {"summary", to_json(summarize_reports(rolled.results))},
                               {"skipped", std::move(skipped)}};
      Sink sink(g.out_path, out);
      print_json(sink.get(), j);
      if (!emp_norms.empty()) write_norms_csv(emp_norms, residual_norm_series(returns, factors, model));
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageOrDomain;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}

}  // namespace sncov::cli
