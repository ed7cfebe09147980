#pragma once

// Rolling monthly test of idiosyncratic factor-model residuals against a
// diagonal target estimated from the previous five months.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sncov/errors.hpp"
#include "sncov/hypothesis.hpp"
#include "sncov/stats.hpp"

namespace sncov {

using Date = std::chrono::year_month_day;

inline Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw DomainError("bad date '" + text + "' (expected YYYY-MM-DD)");
  }
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw DomainError("invalid calendar date '" + text + "'");
  return date;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

inline std::string month_id(const Date& d) { return format_date(d).substr(0, 7); }

namespace detail {

inline void require_increasing(const std::vector<Date>& dates, const char* what) {
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) {
      throw DomainError(std::string(what) + " dates are not strictly increasing at " + format_date(dates[i]));
    }
  }
}

}  // namespace detail

struct ReturnPanel {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd returns;  // T x p

  ReturnPanel(std::vector<Date> d, std::vector<std::string> t, Eigen::MatrixXd r)
      : dates(std::move(d)), tickers(std::move(t)), returns(std::move(r)) {
    if (returns.rows() != static_cast<Eigen::Index>(dates.size()) ||
        returns.cols() != static_cast<Eigen::Index>(tickers.size())) {
      throw DomainError("return panel shape does not match its dates and tickers");
    }
    if (!returns.allFinite()) throw DomainError("return panel has missing or non-finite entries");
    detail::require_increasing(dates, "return");
  }
};

struct FactorPanel {
  std::vector<Date> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd factors;  // T x q

  FactorPanel(std::vector<Date> d, std::vector<std::string> n, Eigen::MatrixXd f)
      : dates(std::move(d)), names(std::move(n)), factors(std::move(f)) {
    if (factors.rows() != static_cast<Eigen::Index>(dates.size()) ||
        factors.cols() != static_cast<Eigen::Index>(names.size())) {
      throw DomainError("factor panel shape does not match its dates and names");
    }
    if (!factors.allFinite()) throw DomainError("factor panel has missing or non-finite entries");
    detail::require_increasing(dates, "factor");
  }
};

enum class FactorModel { Capm, Ff3 };

inline FactorModel parse_factor_model(const std::string& text) {
  if (text == "capm") return FactorModel::Capm;
  if (text == "ff3") return FactorModel::Ff3;
  throw DomainError("unknown factor model '" + text + "' (expected capm or ff3)");
}

inline int factor_count(FactorModel m) { return m == FactorModel::Capm ? 1 : 3; }

/// Residuals of each column of `returns` regressed on [1, factors].
inline Eigen::MatrixXd ols_residuals(const Eigen::MatrixXd& returns, const Eigen::MatrixXd& factors) {
  const Eigen::Index t = returns.rows();
  const Eigen::Index q = factors.cols();
  if (factors.rows() != t) throw DomainError("returns and factors have different numbers of rows");
  if (t <= q + 1) throw DomainError("need more observations than regressors plus one");
  Eigen::MatrixXd design(t, q + 1);
  design.col(0).setOnes();
  design.rightCols(q) = factors;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < q + 1) throw DomainError("factor design matrix is rank deficient");
  return returns - design * qr.solve(returns);
}

struct RollingResult {
  std::string month;
  Date window_start;
  Date window_end;
  Date month_start;
  Date month_end;
  TestReport report;
  std::vector<double> sigma_d;
};

struct SkippedMonth {
  std::string month;
  std::string reason;
};

struct RollingOutput {
  std::vector<RollingResult> results;
  std::vector<SkippedMonth> skipped;
};

struct NormPoint {
  Date date;
  double norm = 0.0;
};

namespace detail {

/// Row ranges [begin, end) of consecutive calendar months.
inline std::vector<std::pair<std::size_t, std::size_t>> month_blocks(const std::vector<Date>& dates) {
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= dates.size(); ++i) {
    if (i == dates.size() || dates[i].year() != dates[begin].year() || dates[i].month() != dates[begin].month()) {
      blocks.emplace_back(begin, i);
      begin = i;
    }
  }
  return blocks;
}

inline bool consecutive_months(const Date& a, const Date& b) {
  const std::chrono::year_month next = std::chrono::year_month{a.year(), a.month()} + std::chrono::months{1};
  return next == std::chrono::year_month{b.year(), b.month()};
}

/// Factor rows matching each return date; every return date must be present.
inline Eigen::MatrixXd aligned_factors(const ReturnPanel& returns, const FactorPanel& factors, FactorModel model) {
  const int q = factor_count(model);
  if (factors.factors.cols() < q) {
    throw DomainError("factor file has " + std::to_string(factors.factors.cols()) + " columns, model needs " +
                      std::to_string(q));
  }
  Eigen::MatrixXd out(returns.dates.size(), q);
  std::size_t j = 0;
  for (std::size_t i = 0; i < returns.dates.size(); ++i) {
    while (j < factors.dates.size() && factors.dates[j] < returns.dates[i]) ++j;
    if (j == factors.dates.size() || factors.dates[j] != returns.dates[i]) {
      throw DomainError("no factor row for return date " + format_date(returns.dates[i]));
    }
    out.row(static_cast<Eigen::Index>(i)) = factors.factors.row(static_cast<Eigen::Index>(j)).head(q);
  }
  return out;
}

inline Eigen::VectorXd normalized_row(const Eigen::VectorXd& row) {
  const double norm = row.norm();
  return norm > 0.0 ? Eigen::VectorXd(row / norm) : Eigen::VectorXd(Eigen::VectorXd::Zero(row.size()));
}

}  // namespace detail

inline constexpr int kWindowMonths = 6;
inline constexpr double kSigmaDFloor = 1e-12;

/// One month's test given the window's residuals (rows = days).
///
/// Sigma_D is the diagonal of the second-moment matrix of the self-normalized
/// rows in `history`; the month's residual days become the columns of the panel.
inline TestReport diag_test_from_residuals(const Eigen::MatrixXd& history, const Eigen::MatrixXd& month, double alpha,
                                           std::vector<double>* sigma_d_out = nullptr) {
  if (history.cols() != month.cols()) throw DomainError("history and month residuals differ in width");
  if (history.rows() == 0) throw DomainError("empty history window");
  Eigen::VectorXd sigma_d = Eigen::VectorXd::Zero(history.cols());
  for (Eigen::Index t = 0; t < history.rows(); ++t) {
    sigma_d += detail::normalized_row(history.row(t).transpose()).cwiseAbs2();
  }
  sigma_d /= static_cast<double>(history.rows());
  if (sigma_d_out != nullptr) sigma_d_out->assign(sigma_d.data(), sigma_d.data() + sigma_d.size());
  if ((sigma_d.array() <= kSigmaDFloor).any()) throw DegenerateTarget("diagonal target has an entry at or below 1e-12");
  return test_proportional_to(ObservationMatrix(month.transpose()), TargetSpec::diagonal(sigma_d),
                              TestSelector::jhn_sn(), alpha);
}

/// Monthly JHN-SN tests from the sixth month onward.
inline RollingOutput rolling_diag_test(const ReturnPanel& returns, const FactorPanel& factors, FactorModel model,
                                       double alpha) {
  detail::require_alpha(alpha);
  const Eigen::MatrixXd f = detail::aligned_factors(returns, factors, model);
  const auto blocks = detail::month_blocks(returns.dates);
  if (blocks.size() < kWindowMonths) throw DomainError("need at least six months of aligned data");
  RollingOutput out;
  for (std::size_t m = kWindowMonths - 1; m < blocks.size(); ++m) {
    const std::size_t first = m + 1 - kWindowMonths;
    const std::string id = month_id(returns.dates[blocks[m].first]);
    bool contiguous = true;
    for (std::size_t b = first; b < m; ++b) {
      contiguous = contiguous && detail::consecutive_months(returns.dates[blocks[b].first], returns.dates[blocks[b + 1].first]);
    }
    if (!contiguous) {
      out.skipped.push_back({id, "window spans a calendar month with no data"});
      continue;
    }
    const std::size_t w0 = blocks[first].first;
    const std::size_t m0 = blocks[m].first;
    const std::size_t m1 = blocks[m].second;
    const auto rows = static_cast<Eigen::Index>(m1 - w0);
    RollingResult r;
    r.month = id;
    r.window_start = returns.dates[w0];
    r.window_end = returns.dates[m1 - 1];
    r.month_start = returns.dates[m0];
    r.month_end = returns.dates[m1 - 1];
    try {
      const Eigen::MatrixXd resid = ols_residuals(returns.returns.middleRows(static_cast<Eigen::Index>(w0), rows),
                                                  f.middleRows(static_cast<Eigen::Index>(w0), rows));
      const auto hist = static_cast<Eigen::Index>(m0 - w0);
      r.report = diag_test_from_residuals(resid.topRows(hist), resid.bottomRows(rows - hist), alpha, &r.sigma_d);
    } catch (const DomainError& e) {
      out.skipped.push_back({id, e.what()});
      continue;
    }
    out.results.push_back(std::move(r));
  }
  return out;
}

/// Daily residual norms of every tested month, from that month's window fit.
inline std::vector<NormPoint> residual_norm_series(const ReturnPanel& returns, const FactorPanel& factors,
                                                   FactorModel model) {
  const Eigen::MatrixXd f = detail::aligned_factors(returns, factors, model);
  const auto blocks = detail::month_blocks(returns.dates);
  if (blocks.size() < kWindowMonths) throw DomainError("need at least six months of aligned data");
  std::vector<NormPoint> out;
  for (std::size_t m = kWindowMonths - 1; m < blocks.size(); ++m) {
    const std::size_t w0 = blocks[m + 1 - kWindowMonths].first;
    const std::size_t m0 = blocks[m].first;
    const std::size_t m1 = blocks[m].second;
    const auto rows = static_cast<Eigen::Index>(m1 - w0);
    Eigen::MatrixXd resid;
    try {
      resid = ols_residuals(returns.returns.middleRows(static_cast<Eigen::Index>(w0), rows),
                            f.middleRows(static_cast<Eigen::Index>(w0), rows));
    } catch (const DomainError&) {
      continue;
    }
    for (std::size_t t = m0; t < m1; ++t) {
      out.push_back({returns.dates[t], resid.row(static_cast<Eigen::Index>(t - w0)).norm()});
    }
  }
  return out;
}

struct ZSummary {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double sd = 0.0;               // sample standard deviation (n - 1)
  double fraction_within = 0.0;  // share of |z| <= 1.96
};

inline ZSummary summarize_z(std::vector<double> z) {
  if (z.empty()) throw DomainError("cannot summarize an empty list of results");
  std::sort(z.begin(), z.end());
  ZSummary s;
  s.count = z.size();
  s.min = z.front();
  s.max = z.back();
  s.q1 = quantile_sorted(z, 0.25);
  s.median = quantile_sorted(z, 0.5);
  s.q3 = quantile_sorted(z, 0.75);
  s.mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
  double ss = 0.0;
  for (double v : z) ss += (v - s.mean) * (v - s.mean);
  s.sd = z.size() > 1 ? std::sqrt(ss / static_cast<double>(z.size() - 1)) : 0.0;
  const auto within = std::count_if(z.begin(), z.end(), [](double v) { return std::abs(v) <= 1.96; });
  s.fraction_within = static_cast<double>(within) / static_cast<double>(z.size());
  return s;
}

inline ZSummary summarize_reports(const std::vector<RollingResult>& results) {
  std::vector<double> z;
  z.reserve(results.size());
  for (const auto& r : results) z.push_back(r.report.z);
  return summarize_z(std::move(z));
}

}  // namespace sncov
