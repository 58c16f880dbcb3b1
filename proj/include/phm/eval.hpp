#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "json.hpp"

#include "phm/csv.hpp"
#include "phm/error.hpp"
#include "phm/nelder_mead.hpp"

namespace phm {

struct EvalRecord {
  std::string sample_id;
  double mos = 0.0;
  double prediction = 0.0;
};

/// Parameters of the five-parameter logistic mapping from objective scores to MOS.
struct FitParams {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double beta4 = 0.0;
  double beta5 = 0.0;
};

/// beta1 * (1/2 - 1/(1 + exp(beta2 (x - beta3)))) + beta4 x + beta5.
/// exp overflow drives the sigmoid term to its limit instead of NaN.
inline double logistic_map(double x, const FitParams& p) {
  const double e = std::exp(p.beta2 * (x - p.beta3));
  return p.beta1 * (0.5 - 1.0 / (1.0 + e)) + p.beta4 * x + p.beta5;
}

namespace eval_detail {

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sum_sq_error(std::span<const EvalRecord> records, const FitParams& p) {
  double sse = 0.0;
  for (const auto& r : records) {
    const double d = r.mos - logistic_map(r.prediction, p);
    sse += d * d;
  }
  return sse;
}

inline FitParams from_vector(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

}  // namespace eval_detail

namespace eval_detail {

/// For fixed (beta2, beta3) the mapping is linear in (beta1, beta4, beta5);
/// returns the full parameter vector with that linear part solved exactly.
inline std::vector<double> solve_linear_part(std::span<const double> x, std::span<const double> y, double beta2,
                                             double beta3) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 0.5 - 1.0 / (1.0 + std::exp(beta2 * (x[static_cast<std::size_t>(i)] - beta3)));
    design(i, 1) = x[static_cast<std::size_t>(i)];
    design(i, 2) = 1.0;
    target(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd lin = design.completeOrthogonalDecomposition().solve(target);
  return {lin(0), beta2, beta3, lin(1), lin(2)};
}

}  // namespace eval_detail

/// Least-squares fit of the logistic mapping. The sigmoid slope and center
/// are searched by downhill simplex from a grid of starts, with the three
/// linear parameters solved exactly at every step; the best candidate is then
/// polished over all five parameters, restarting the simplex from its best
/// vertex until a restart no longer improves the error.
inline FitParams fit_logistic(std::span<const EvalRecord> records) {
  using namespace eval_detail;
  if (records.size() < 5) throw Error(ErrorKind::FitError, "logistic fit needs at least 5 records");
  std::vector<double> x, y;
  for (const auto& r : records) {
    if (!std::isfinite(r.mos) || !std::isfinite(r.prediction))
      throw Error(ErrorKind::FitError, "non-finite value in record '" + r.sample_id + "'");
    x.push_back(r.prediction);
    y.push_back(r.mos);
  }
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  const double x_range = *xmax - *xmin;
  if (!(x_range > 0.0)) throw Error(ErrorKind::FitError, "predictions are all equal");

  const auto objective = [&](const std::vector<double>& v) {
    const double sse = sum_sq_error(records, from_vector(v));
    return std::isfinite(sse) ? sse : std::numeric_limits<double>::max();
  };
  const auto reduced = [&](const std::vector<double>& v) { return objective(solve_linear_part(x, y, v[0], v[1])); };

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> best_x;
  double best_value = std::numeric_limits<double>::infinity();
  // The sigmoid term is odd in beta2 once beta1 may change sign, so only
  // positive slopes need a start.
  for (double slope : {1.0, 4.0, 16.0, 64.0}) {
    for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double center = sorted[static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1))];
      const SimplexResult r = nelder_mead(reduced, {slope / x_range, center});
      if (r.value < best_value) {
        best_value = r.value;
        best_x = solve_linear_part(x, y, r.x[0], r.x[1]);
      }
    }
  }

  SimplexResult best{best_x, objective(best_x), 0, true};
  for (int restart = 0; restart < 20; ++restart) {
    SimplexResult next = nelder_mead(objective, best.x);
    const bool improved = next.value < best.value * (1.0 - 1e-12);
    if (next.value <= best.value) best = std::move(next);
    if (!improved) break;
  }
  for (double v : best.x)
    if (!std::isfinite(v)) throw Error(ErrorKind::FitError, "logistic fit diverged");
  return from_vector(best.x);
}

inline double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw Error(ErrorKind::ShapeError, "need two equal-length samples of size >= 2");
  const double ma = eval_detail::mean(a);
  const double mb = eval_detail::mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(ErrorKind::CorrelationUndefined, "a sample has zero variance");
  return sab / std::sqrt(saa * sbb);
}

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double spearman_correlation(std::span<const double> a, std::span<const double> b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson_correlation(ra, rb);
}

struct CorrelationSummary {
  double plcc = 0.0;
  double srocc = 0.0;
  double rmse = 0.0;
};

/// PLCC and RMSE between mapped predictions and MOS; SROCC on the raw
/// predictions (unchanged by any increasing mapping).
inline CorrelationSummary correlation_suite(std::span<const EvalRecord> records, const FitParams& params) {
  if (records.size() < 2) throw Error(ErrorKind::CorrelationUndefined, "need at least two records");
  std::vector<double> mapped, raw, mos;
  for (const auto& r : records) {
    mapped.push_back(logistic_map(r.prediction, params));
    raw.push_back(r.prediction);
    mos.push_back(r.mos);
  }
  CorrelationSummary out;
  out.plcc = pearson_correlation(mapped, mos);
  out.srocc = spearman_correlation(raw, mos);
  double sse = 0.0;
  for (std::size_t i = 0; i < mos.size(); ++i) sse += (mapped[i] - mos[i]) * (mapped[i] - mos[i]);
  out.rmse = std::sqrt(sse / static_cast<double>(mos.size()));
  return out;
}

inline double sample_variance(std::span<const double> v) {
  const double m = eval_detail::mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// CDF of the F distribution with (d1, d2) degrees of freedom.
inline double f_distribution_cdf(double f, double d1, double d2) {
  if (f <= 0.0) return 0.0;
  return boost::math::ibeta(0.5 * d1, 0.5 * d2, d1 * f / (d1 * f + d2));
}

struct FTestResult {
  double statistic = 0.0;  // var(a) / var(b)
  double critical = 0.0;   // left-tail quantile at the significance level
  double p_value = 0.0;    // P(F <= statistic)
  int h = 0;               // 1 when a's residuals are significantly smaller
};

/// Left-tailed variance-ratio test on two residual vectors.
inline FTestResult f_test_left(std::span<const double> residuals_a, std::span<const double> residuals_b,
                               double significance = 0.05) {
  if (residuals_a.size() < 2 || residuals_b.size() < 2)
    throw Error(ErrorKind::DomainError, "each residual vector needs at least two entries");
  if (!(significance > 0.0 && significance < 1.0))
    throw Error(ErrorKind::DomainError, "significance must lie in (0, 1)");
  const double vb = sample_variance(residuals_b);
  if (vb == 0.0) throw Error(ErrorKind::TestUndefined, "second residual vector has zero variance");
  const double d1 = static_cast<double>(residuals_a.size() - 1);
  const double d2 = static_cast<double>(residuals_b.size() - 1);
  FTestResult out;
  out.statistic = sample_variance(residuals_a) / vb;
  out.p_value = f_distribution_cdf(out.statistic, d1, d2);
  out.critical = boost::math::quantile(boost::math::fisher_f_distribution<double>(d1, d2), significance);
  out.h = out.statistic < out.critical ? 1 : 0;
  return out;
}

/// Records from a CSV with columns sample_id, mos, prediction.
inline std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t id_col = table.column("sample_id");
  const std::size_t mos_col = table.column("mos");
  const std::size_t pred_col = table.column("prediction");
  std::vector<EvalRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows)
    out.push_back({row[id_col], parse_double(row[mos_col], "mos"), parse_double(row[pred_col], "prediction")});
  return out;
}

inline nlohmann::json to_json(const CorrelationSummary& s, const FitParams& p) {
  return {{"plcc", s.plcc},
          {"srocc", s.srocc},
          {"rmse", s.rmse},
          {"fit", {{"beta1", p.beta1}, {"beta2", p.beta2}, {"beta3", p.beta3}, {"beta4", p.beta4}, {"beta5", p.beta5}}}};
}

}  // namespace phm
