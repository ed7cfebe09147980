#pragma once

// CSV readers/writers and JSON encodings of reports.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sncov/empirical.hpp"
#include "sncov/errors.hpp"
#include "sncov/hypothesis.hpp"
#include "sncov/montecarlo.hpp"

namespace sncov {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "': file not found or unreadable");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write '" + path + "'");
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last) {
    throw DomainError("non-numeric value '" + text + "' at " + where);
  }
  return v;
}

inline bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline Table read_table(const std::string& path, bool has_header) {
  std::ifstream in = open_input(path);
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    auto fields = split_csv_line(line);
    if (first && has_header) {
      t.header = std::move(fields);
    } else {
      const std::size_t width = has_header ? t.header.size() : (t.rows.empty() ? fields.size() : t.rows.front().size());
      if (fields.size() != width) {
        throw DomainError(path + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                          std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
      }
      t.rows.push_back(std::move(fields));
    }
    first = false;
  }
  if (t.rows.empty()) throw DomainError(path + ": no data rows");
  return t;
}

}  // namespace detail

/// Numeric CSV without header.
inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  const detail::Table t = detail::read_table(path, false);
  Eigen::MatrixXd m(t.rows.size(), t.rows.front().size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          detail::parse_number(t.rows[i][j], path + " row " + std::to_string(i + 1));
    }
  }
  return m;
}

inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out = detail::open_output(path);
  write_matrix_csv(out, m);
}

namespace detail {

struct DatedTable {
  std::vector<Date> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};

inline DatedTable read_dated(const std::string& path) {
  const Table t = read_table(path, true);
  if (t.header.size() < 2 || t.header.front() != "date") throw DomainError(path + ": header must start with 'date'");
  DatedTable d;
  d.names.assign(t.header.begin() + 1, t.header.end());
  d.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(d.names.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    d.dates.push_back(parse_date(t.rows[i][0]));
    for (std::size_t j = 1; j < t.rows[i].size(); ++j) {
      d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) =
          parse_number(t.rows[i][j], path + " row " + std::to_string(i + 2));
    }
  }
  return d;
}

}  // namespace detail

/// Header `date,ticker1,...`, one row per trading day.
inline ReturnPanel read_return_panel(const std::string& path) {
  auto d = detail::read_dated(path);
  return ReturnPanel(std::move(d.dates), std::move(d.names), std::move(d.values));
}

/// Header `date,mktrf[,smb,hml]`.
inline FactorPanel read_factor_panel(const std::string& path) {
  auto d = detail::read_dated(path);
  return FactorPanel(std::move(d.dates), std::move(d.names), std::move(d.values));
}

inline void write_norms_csv(const std::string& path, const std::vector<NormPoint>& norms) {
  std::ofstream out = detail::open_output(path);
  out << "date,norm\n";
  for (const auto& n : norms) out << format_date(n.date) << ',' << format_double(n.norm) << '\n';
}

// ---- JSON --------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const TestReport& r) {
  return {{"test_name", r.test_name}, {"k", r.k},         {"statistic", r.statistic}, {"z", r.z},
          {"p_value", r.p_value},     {"alpha", r.alpha}, {"reject", r.reject},       {"p", r.p},
          {"n", r.n},                 {"y_n", r.y_n},     {"target", r.target}};
}

inline nlohmann::ordered_json to_json(const CellResult& c) {
  return {{"experiment", c.experiment},
          {"model", c.model},
          {"sigma", c.sigma},
          {"p", c.p},
          {"y", c.y},
          {"n", c.n},
          {"test", c.test},
          {"rejections", c.rejections},
          {"replications", c.replications},
          {"rejection_rate", c.rejection_rate},
          {"monte_carlo_se", c.monte_carlo_se}};
}

/// Wall time is left out by default so reports are byte-reproducible.
inline nlohmann::ordered_json to_json(const ExperimentReport& r, bool include_wall_time = false) {
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : r.cells) cells.push_back(to_json(c));
  nlohmann::ordered_json out{{"cells", std::move(cells)}};
  if (include_wall_time) out["wall_time_seconds"] = r.wall_time_seconds;
  return out;
}

inline nlohmann::ordered_json to_json(const RollingResult& r) {
  return {{"month", r.month},
          {"window_start", format_date(r.window_start)},
          {"window_end", format_date(r.window_end)},
          {"month_start", format_date(r.month_start)},
          {"month_end", format_date(r.month_end)},
          {"report", to_json(r.report)},
          {"sigma_d", r.sigma_d}};
}

inline nlohmann::ordered_json to_json(const ZSummary& s) {
  return {{"count", s.count}, {"min", s.min},   {"q1", s.q1}, {"median", s.median},
          {"q3", s.q3},       {"max", s.max},   {"mean", s.mean}, {"sd", s.sd},
          {"fraction_within_1_96", s.fraction_within}};
}

namespace detail {

template <class T>
T json_field(const nlohmann::json& obj, const char* key, const T& fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& obj, std::size_t index) {
  if (!obj.is_object()) throw ConfigError("experiment entry " + std::to_string(index) + " is not an object");
  for (const char* key : {"model", "tests", "p", "y"}) {
    if (!obj.contains(key)) throw ConfigError("experiment entry " + std::to_string(index) + " lacks '" + key + "'");
  }
  ExperimentConfig c;
  c.name = json_field<std::string>(obj, "name", "custom");
  c.model = parse_model_kind(json_field<std::string>(obj, "model", ""));
  c.sigma = SigmaSpec::parse(json_field<std::string>(obj, "sigma", "identity"));
  for (const auto& t : json_field<std::vector<std::string>>(obj, "tests", {})) c.tests.push_back(TestSelector::parse(t));
  c.p_list = json_field<std::vector<long>>(obj, "p", {});
  c.y_list = json_field<std::vector<double>>(obj, "y", {});
  c.replications = json_field<long>(obj, "replications", c.replications);
  c.alpha = json_field<double>(obj, "alpha", c.alpha);
  c.master_seed = json_field<std::uint64_t>(obj, "seed", c.master_seed);
  return c;
}

}  // namespace detail

/// Custom design: one experiment object or {"experiments": [...]}. Fields:
/// name, model, sigma, tests, p, y, replications, alpha, seed.
inline std::vector<ExperimentConfig> experiments_from_json(const nlohmann::json& doc) {
  std::vector<ExperimentConfig> out;
  if (doc.is_object() && doc.contains("experiments")) {
    const auto& list = doc.at("experiments");
    if (!list.is_array() || list.empty()) throw ConfigError("'experiments' must be a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) out.push_back(detail::experiment_from_json(list[i], i));
  } else {
    out.push_back(detail::experiment_from_json(doc, 0));
  }
  for (const auto& c : out) c.validate();
  return out;
}

inline std::vector<ExperimentConfig> read_experiments(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return experiments_from_json(doc);
}

}  // namespace sncov
