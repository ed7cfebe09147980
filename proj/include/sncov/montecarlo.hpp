#pragma once

// Size/power experiments: R independent panels per (p, y) cell, each test
// applied to the same panel, rejection counts reduced in replication order.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sncov/datagen.hpp"
#include "sncov/errors.hpp"
#include "sncov/hypothesis.hpp"
#include "sncov/random.hpp"

namespace sncov {

/// Runs body(i) for i in [0, count) on `threads` workers, each owning one
/// contiguous block. The first exception by index is rethrown after joining.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  if (threads < 1) throw DomainError("thread count must be at least 1");
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = count * w / workers;
      const std::size_t end = count * (w + 1) / workers;
      pool.emplace_back([&, w, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct ExperimentConfig {
  std::string name = "custom";
  ModelKind model = ModelKind::Elliptical;
  SigmaSpec sigma;
  std::vector<TestSelector> tests;
  std::vector<long> p_list;
  std::vector<double> y_list;
  long replications = 2000;
  double alpha = 0.05;
  std::uint64_t master_seed = 42;

  void validate() const {
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (tests.empty()) throw ConfigError("experiment '" + name + "' lists no tests");
    if (p_list.empty() || y_list.empty()) throw ConfigError("experiment '" + name + "' needs p and y values");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    for (long p : p_list) {
      if (p < 2) throw ConfigError("p must be at least 2");
    }
    for (double y : y_list) {
      if (!(y > 0.0) || !std::isfinite(y)) throw ConfigError("y must be positive and finite");
      for (long p : p_list) {
        if (cell_n(p, y) < 2) throw ConfigError("p / y must give n >= 2, got p = " + std::to_string(p));
      }
      for (const auto& t : tests) {
        if (t.kind() == TestSelector::Kind::LrSn && !(y < 1.0)) {
          throw ConfigError("LR-SN requested at y = " + std::to_string(y) + " >= 1 in experiment '" + name + "'");
        }
      }
    }
  }

  /// Sample size of a cell: n = round(p / y).
  static long cell_n(long p, double y) { return std::lround(static_cast<double>(p) / y); }
};

struct CellResult {
  std::string experiment;
  std::string model;
  std::string sigma;
  long p = 0;
  double y = 0.0;
  long n = 0;
  std::string test;
  long rejections = 0;
  long replications = 0;
  double rejection_rate = 0.0;
  double monte_carlo_se = 0.0;
};

struct ExperimentReport {
  std::vector<CellResult> cells;
  double wall_time_seconds = 0.0;

  const CellResult* find(const std::string& experiment, long p, double y, const std::string& test) const {
    for (const auto& c : cells) {
      if (c.experiment == experiment && c.p == p && c.y == y && c.test == test) return &c;
    }
    return nullptr;
  }
};

inline double monte_carlo_se(long rejections, long replications) {
  const double r = static_cast<double>(rejections) / static_cast<double>(replications);
  return std::sqrt(r * (1.0 - r) / static_cast<double>(replications));
}

inline std::uint64_t replication_seed(std::uint64_t master, long p, double y, ModelKind model, long rep) {
  return derive_seed({master, static_cast<std::uint64_t>(p), seed_part(y), static_cast<std::uint64_t>(model),
                      static_cast<std::uint64_t>(rep)});
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, int threads = 1) {
  cfg.validate();
  if (threads < 1) throw ConfigError("thread count must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  const std::size_t reps = static_cast<std::size_t>(cfg.replications);
  const std::size_t tests = cfg.tests.size();
  const bool needs_log_det = std::any_of(cfg.tests.begin(), cfg.tests.end(),
                                         [](const TestSelector& t) { return t.kind() == TestSelector::Kind::LrSn; });
  for (long p : cfg.p_list) {
    for (double y : cfg.y_list) {
      const long n = ExperimentConfig::cell_n(p, y);
      std::vector<unsigned char> reject(reps * tests, 0);
      parallel_for(reps, threads, [&](std::size_t r) {
        const GenModel model{cfg.model, cfg.sigma, p, n,
                             replication_seed(cfg.master_seed, p, y, cfg.model, static_cast<long>(r))};
        const ObservationMatrix obs = gen_panel(model);
        SpectralSummary summary = snc_eigenvalues(obs);
        if (needs_log_det && p < n) summary.log_det = snc_log_det(obs);
        for (std::size_t t = 0; t < tests; ++t) {
          reject[r * tests + t] = evaluate_test(cfg.tests[t], summary, cfg.alpha).reject ? 1 : 0;
        }
      });
      for (std::size_t t = 0; t < tests; ++t) {
        long count = 0;
        for (std::size_t r = 0; r < reps; ++r) count += reject[r * tests + t];
        CellResult cell;
        cell.experiment = cfg.name;
        cell.model = to_string(cfg.model);
        cell.sigma = cfg.sigma.name();
        cell.p = p;
        cell.y = y;
        cell.n = n;
        cell.test = cfg.tests[t].name();
        cell.rejections = count;
        cell.replications = cfg.replications;
        cell.rejection_rate = static_cast<double>(count) / static_cast<double>(cfg.replications);
        cell.monte_carlo_se = monte_carlo_se(count, cfg.replications);
        report.cells.push_back(std::move(cell));
      }
    }
  }
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

inline ExperimentReport run_experiments(const std::vector<ExperimentConfig>& cfgs, int threads = 1) {
  for (const auto& c : cfgs) c.validate();
  ExperimentReport all;
  for (const auto& c : cfgs) {
    ExperimentReport r = run_experiment(c, threads);
    all.cells.insert(all.cells.end(), r.cells.begin(), r.cells.end());
    all.wall_time_seconds += r.wall_time_seconds;
  }
  return all;
}

// ---- Built-in designs -------------------------------------------------------

namespace detail {

inline ExperimentConfig table_config(const std::string& name, ModelKind model, SigmaSpec sigma, double y,
                                     std::vector<TestSelector> tests, long reps, std::uint64_t seed) {
  ExperimentConfig c;
  c.name = name;
  c.model = model;
  c.sigma = sigma;
  c.tests = std::move(tests);
  c.p_list = {100, 200, 500};
  c.y_list = {y};
  c.replications = reps;
  c.master_seed = seed;
  return c;
}

}  // namespace detail

/// Table designs: elliptical null (3), elliptical Toeplitz(0.1) alternative (4),
/// GARCH-t(4) null (5) and alternative (6); y = 0.5 with LR-SN and JHN-SN, y = 2 with JHN-SN.
inline std::vector<ExperimentConfig> design_configs(const std::string& design, long reps, std::uint64_t seed) {
  ModelKind model;
  SigmaSpec sigma;
  if (design == "table3") {
    model = ModelKind::Elliptical;
  } else if (design == "table4") {
    model = ModelKind::Elliptical;
    sigma = SigmaSpec::toeplitz(0.1);
  } else if (design == "table5") {
    model = ModelKind::GarchT4;
  } else if (design == "table6") {
    model = ModelKind::GarchT4;
    sigma = SigmaSpec::toeplitz(0.1);
  } else {
    throw ConfigError("unknown design '" + design + "' (expected table3..table6 or a JSON file)");
  }
  return {detail::table_config(design, model, sigma, 0.5, {TestSelector::lr_sn(), TestSelector::jhn_sn()}, reps, seed),
          detail::table_config(design, model, sigma, 2.0, {TestSelector::jhn_sn()}, reps, seed)};
}

// ---- Rendering ---------------------------------------------------------------

namespace detail {

inline std::string format_percent(double rate) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << 100.0 * rate;
  return out.str();
}

inline std::string format_y(double y) {
  std::ostringstream out;
  out << y;
  return out.str();
}

inline std::string render_grid(const std::string& title, const std::vector<std::string>& header,
                               const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  out << title << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << " | ";
      out << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 3 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

}  // namespace detail

/// Renders a report as a text table of rejection percentages.
///
/// Layouts "table3".."table6" use rows p in {100, 200, 500} and columns
/// (y=0.5, LR-SN), (y=0.5, JHN-SN), (y=2, JHN-SN). Layout "custom" has one
/// row per (p, y) pair and one column per test, in report order.
inline std::string render_table(const ExperimentReport& report, const std::string& layout) {
  if (report.cells.empty()) throw IncompleteReport("report has no cells");
  if (layout == "custom") {
    std::vector<std::pair<long, double>> keys;
    std::vector<std::string> tests;
    for (const auto& c : report.cells) {
      if (std::find(keys.begin(), keys.end(), std::pair{c.p, c.y}) == keys.end()) keys.emplace_back(c.p, c.y);
      if (std::find(tests.begin(), tests.end(), c.test) == tests.end()) tests.push_back(c.test);
    }
    std::vector<std::string> header{"p", "y", "n"};
    header.insert(header.end(), tests.begin(), tests.end());
    std::vector<std::vector<std::string>> rows;
    for (const auto& [p, y] : keys) {
      std::vector<std::string> row{std::to_string(p), detail::format_y(y), std::to_string(ExperimentConfig::cell_n(p, y))};
      for (const auto& t : tests) {
        const CellResult* hit = nullptr;
        for (const auto& c : report.cells) {
          if (c.p == p && c.y == y && c.test == t) hit = &c;
        }
        row.push_back(hit ? detail::format_percent(hit->rejection_rate) : "-");
      }
      rows.push_back(std::move(row));
    }
    return detail::render_grid("rejection rates (%), R = " + std::to_string(report.cells.front().replications), header,
                               rows);
  }

  static const std::map<std::string, std::string> titles{
      {"table3", "elliptical null, Sigma = I: empirical size (%)"},
      {"table4", "elliptical, Sigma = Toeplitz(0.1): empirical power (%)"},
      {"table5", "GARCH-t(4) null, Sigma = I: empirical size (%)"},
      {"table6", "GARCH-t(4), Sigma = Toeplitz(0.1): empirical power (%)"}};
  const auto title = titles.find(layout);
  if (title == titles.end()) throw ConfigError("unknown table layout '" + layout + "'");

  const std::vector<std::pair<double, std::string>> columns{{0.5, "LR-SN"}, {0.5, "JHN-SN"}, {2.0, "JHN-SN"}};
  std::vector<std::string> header{"p"};
  for (const auto& [y, t] : columns) header.push_back("y=" + detail::format_y(y) + " " + t);
  std::vector<std::vector<std::string>> rows;
  long reps = 0;
  for (long p : {100L, 200L, 500L}) {
    std::vector<std::string> row{std::to_string(p)};
    for (const auto& [y, t] : columns) {
      const CellResult* c = report.find(layout, p, y, t);
      if (c == nullptr) {
        throw IncompleteReport("report lacks cell p=" + std::to_string(p) + ", y=" + detail::format_y(y) + ", " + t +
                               " for layout " + layout);
      }
      reps = c->replications;
      row.push_back(detail::format_percent(c->rejection_rate));
    }
    rows.push_back(std::move(row));
  }
  return detail::render_grid(title->second + ", R = " + std::to_string(reps), header, rows);
}

}  // namespace sncov
