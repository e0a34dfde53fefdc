#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ttfm {

/// Outcome of a white-noise hypothesis test at level alpha.
/// reject <=> statistic >= threshold.
struct WNResult {
  enum class Kind { ljung_box, rank_max };
  Kind kind = Kind::ljung_box;
  double statistic = 0.0;
  double threshold = 0.0;
  double alpha = 0.0;
  bool reject = false;
  // Ljung-Box calibration
  double df = 0.0;
  // Rank-test calibration: N = dim^2 * lags comparisons, Gumbel constants
  int dim = 0;
  int lags = 0;
  double gumbel_a = 0.0;
  double gumbel_b = 0.0;
};

/// Contract shared by all white-noise tests: series is n x d (rows = time),
/// m the number of lags, alpha the level.
using WhiteNoiseTest =
    std::function<WNResult(const Eigen::MatrixXd&, int, double)>;

inline double chi_squared_quantile(double prob, double df) {
  boost::math::chi_squared dist(df);
  return boost::math::quantile(dist, prob);
}

namespace detail {

/// Gumbel critical value for the maximum of n_comparisons asymptotically
/// standard normal statistics: b + (-log(-log(1-alpha))) / a with
/// a = sqrt(2 log N), b = a - (log log N + log 4 pi) / (2 a).
struct GumbelCalibration {
  double a = 0.0, b = 0.0, threshold = 0.0;
};

inline GumbelCalibration gumbel_max_threshold(std::size_t n_comparisons,
                                              double alpha) {
  if (n_comparisons < 2)
    throw std::invalid_argument("gumbel_max_threshold: need N >= 2");
  const double log_n = std::log(static_cast<double>(n_comparisons));
  GumbelCalibration g;
  g.a = std::sqrt(2.0 * log_n);
  g.b = g.a - (std::log(log_n) + std::log(4.0 * M_PI)) / (2.0 * g.a);
  g.threshold = g.b + (-std::log(-std::log1p(-alpha))) / g.a;
  return g;
}

/// Average ranks (1-based, ties share the mean rank) of one series.
inline Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x(order[j + 1]) == x(order[i])) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[k]) = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Multivariate portmanteau test (Ljung-Box form): with C_l the lag-l sample
/// autocovariance of the d-dimensional series,
///   Q(m) = n (n+2) * sum_{l=1..m} tr(C_l' C_0^-1 C_l C_0^-1) / (n - l),
/// compared against the chi-squared quantile with d^2 m degrees of freedom.
/// At d = 1 this is the classical univariate Ljung-Box statistic.
inline WNResult ljung_box(const Eigen::MatrixXd& series, int m, double alpha) {
  const Eigen::Index n = series.rows(), d = series.cols();
  if (m < 1 || !(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("ljung_box: bad m or alpha");
  if (n <= m + d)
    throw std::invalid_argument("ljung_box: series too short (need n > m + d)");
  const double dof = static_cast<double>(d) * static_cast<double>(d) * m;
  if (dof > 1e6)
    throw std::runtime_error(
        "ljung_box: dimension too large for a chi-squared calibration; use "
        "the rank test");

  Eigen::MatrixXd x = series.rowwise() - series.colwise().mean();
  Eigen::MatrixXd c0 = (x.transpose() * x) / static_cast<double>(n);
  c0 = 0.5 * (c0 + c0.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c0);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("ljung_box: covariance eigensolver failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo <= 1e-12 * hi)
    throw std::runtime_error(
        "ljung_box: degenerate covariance; reduce block or use rank test");
  // C0^{-1/2}, symmetric
  Eigen::MatrixXd root_inv =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();

  double q = 0.0;
  for (int l = 1; l <= m; ++l) {
    const Eigen::Index len = n - l;
    Eigen::MatrixXd cl = (x.bottomRows(len).transpose() * x.topRows(len)) /
                         static_cast<double>(n);
    q += (root_inv * cl * root_inv).squaredNorm() / static_cast<double>(len);
  }
  q *= static_cast<double>(n) * static_cast<double>(n + 2);

  WNResult r;
  r.kind = WNResult::Kind::ljung_box;
  r.statistic = q;
  r.df = dof;
  r.alpha = alpha;
  r.threshold = chi_squared_quantile(1.0 - alpha, dof);
  r.reject = r.statistic >= r.threshold;
  r.dim = static_cast<int>(d);
  r.lags = m;
  return r;
}

/// High-dimensional white-noise test based on rank correlations: the
/// statistic is the maximum over lags l = 1..m and ordered component pairs
/// (a, b) of |sqrt(n-l) * rho_ab(l)|, where rho_ab(l) is the lag-l Spearman
/// cross-correlation (Pearson correlation of the aligned average-rank
/// segments). The critical value comes from the Gumbel limit of the maximum
/// of d^2 m standard normal variables.
inline WNResult rank_tm(const Eigen::MatrixXd& series, int m, double alpha) {
  const Eigen::Index n = series.rows(), d = series.cols();
  if (m < 1 || !(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("rank_tm: bad m or alpha");
  if (n <= m + 10)
    throw std::invalid_argument("rank_tm: series too short (need n > m + 10)");

  Eigen::MatrixXd ranks(n, d);
  for (Eigen::Index c = 0; c < d; ++c)
    ranks.col(c) = detail::average_ranks(series.col(c));

  double stat = 0.0;
  for (int l = 1; l <= m; ++l) {
    const Eigen::Index len = n - l;
    Eigen::MatrixXd lead = ranks.bottomRows(len);
    Eigen::MatrixXd lag = ranks.topRows(len);
    lead.rowwise() -= lead.colwise().mean();
    lag.rowwise() -= lag.colwise().mean();
    Eigen::VectorXd lead_norm = lead.colwise().norm();
    Eigen::VectorXd lag_norm = lag.colwise().norm();
    if (lead_norm.minCoeff() <= 0.0 || lag_norm.minCoeff() <= 0.0)
      throw std::runtime_error("rank_tm: rank correlation undefined for a "
                               "constant component series");
    Eigen::MatrixXd cross = lead.transpose() * lag;  // d x d
    cross.array() /= (lead_norm * lag_norm.transpose()).array();
    stat = std::max(stat, std::sqrt(static_cast<double>(len)) *
                              cross.cwiseAbs().maxCoeff());
  }

  const std::size_t comparisons = static_cast<std::size_t>(d) *
                                  static_cast<std::size_t>(d) *
                                  static_cast<std::size_t>(m);
  const auto g = detail::gumbel_max_threshold(comparisons, alpha);

  WNResult r;
  r.kind = WNResult::Kind::rank_max;
  r.statistic = stat;
  r.threshold = g.threshold;
  r.alpha = alpha;
  r.reject = r.statistic >= r.threshold;
  r.dim = static_cast<int>(d);
  r.lags = m;
  r.gumbel_a = g.a;
  r.gumbel_b = g.b;
  return r;
}

}  // namespace ttfm
