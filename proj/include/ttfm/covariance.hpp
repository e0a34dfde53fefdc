#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "ttfm/linalg.hpp"
#include "ttfm/series.hpp"

namespace ttfm {

/// A symmetric nonnegative-definite second-moment aggregate.
/// kind Lag: sum over lags 1..k0 and column pairs of outer products of lagged
///           cross-covariances; its top eigenvectors span the dynamic
///           (factor) directions.
/// kind Noise: sum over columns of outer products of covariances with the
///           projected white-noise coordinates; its bottom eigenvectors span
///           the non-spiked noise complement.
struct CovAggregate {
  enum class Kind { Lag, Noise };
  Eigen::MatrixXd matrix;
  Kind kind = Kind::Lag;
  int k0 = 0;
};

namespace detail {

inline void require_centered(const MatrixSeries& s, const char* who) {
  if (!s.centered())
    throw std::invalid_argument(std::string(who) +
                                ": series must be centered first");
}

inline void require_half_orthonormal(const Eigen::MatrixXd& h,
                                     const char* who) {
  if (h.cols() == 0) return;
  Eigen::MatrixXd g = h.transpose() * h;
  g.diagonal().array() -= 1.0;
  if (g.norm() > 1e-8)
    throw std::invalid_argument(std::string(who) +
                                ": basis is not half-orthonormal");
}

}  // namespace detail

/// Lag-k sample cross-covariance between matrix columns i and j:
///   (1/n) * sum_{t=k+1..n} y_{i,t} y_{j,t-k}'
/// Divisor is n, not n-k. Indices are 0-based, 1 <= k <= n-1.
inline Eigen::MatrixXd lagged_cross_cov(const MatrixSeries& s, Eigen::Index i,
                                        Eigen::Index j, Eigen::Index k) {
  detail::require_centered(s, "lagged_cross_cov");
  if (i < 0 || i >= s.cols() || j < 0 || j >= s.cols())
    throw std::invalid_argument("lagged_cross_cov: column index out of range");
  if (k < 1 || k >= s.n())
    throw std::invalid_argument("lagged_cross_cov: lag out of range");
  const Eigen::Index len = s.n() - k;
  return (s.column_series(i).rightCols(len) *
          s.column_series(j).leftCols(len).transpose()) /
         static_cast<double>(s.n());
}

/// Sample covariance between matrix column i and the flattened observation:
///   (1/n) * sum_t y_{i,t} vec(Y_t)'
inline Eigen::MatrixXd col_vec_cov(const MatrixSeries& s, Eigen::Index i) {
  detail::require_centered(s, "col_vec_cov");
  if (i < 0 || i >= s.cols())
    throw std::invalid_argument("col_vec_cov: column index out of range");
  return (s.column_series(i) * s.flat().transpose()) /
         static_cast<double>(s.n());
}

/// Row-space dynamic aggregate: sum over k = 1..k0 and all column pairs
/// (i, j) of C_ij(k) C_ij(k)' with C_ij(k) = lagged_cross_cov(i, j, k).
///
/// For each (k, i) the whole j-sweep collapses into one Gram product of the
/// p1 x (p1 p2) stacked block [C_i1(k), ..., C_ip2(k)], so the cost is
/// O(k0 p2 p1 n p1 p2) instead of the naive O(k0 p2^2 n p1^2).
inline CovAggregate lag_cov_aggregate(const MatrixSeries& s, int k0) {
  detail::require_centered(s, "lag_cov_aggregate");
  if (k0 < 1 || k0 >= s.n())
    throw std::invalid_argument("lag_cov_aggregate: k0 out of range");
  const Eigen::Index p1 = s.rows(), p2 = s.cols(), n = s.n();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p1, p1);
  Eigen::MatrixXd stacked(p1, p1 * p2);
  for (int k = 1; k <= k0; ++k) {
    const Eigen::Index len = n - k;
    const auto lagged = s.flat().leftCols(len);  // vec(Y_t), t = 1..n-k
    for (Eigen::Index i = 0; i < p2; ++i) {
      stacked.noalias() =
          inv_n * (s.column_series(i).rightCols(len) * lagged.transpose());
      acc.noalias() += stacked * stacked.transpose();
    }
  }
  acc = 0.5 * (acc + acc.transpose()).eval();
  return {std::move(acc), CovAggregate::Kind::Lag, k0};
}

/// Column-space dynamic aggregate: same construction on the transposed
/// series; p2 x p2.
inline CovAggregate lag_cov_aggregate_back(const MatrixSeries& s, int k0) {
  return lag_cov_aggregate(transpose_series(s), k0);
}

/// Row-space noise aggregate. With row complement B (p1 x v1) and column
/// complement Q (p2 x v2),
///   S = sum_i [W_i][W_i]',  W_i = Cov(y_{i,t}, vec(B' Y_t Q)).
/// The Kronecker factor (Q x B) is never formed: the projected series
/// B' Y_t Q is built once and every W_i falls out of a single Gram product.
inline CovAggregate noise_cov_aggregate(const MatrixSeries& s,
                                        const Eigen::MatrixXd& row_comp,
                                        const Eigen::MatrixXd& col_comp) {
  detail::require_centered(s, "noise_cov_aggregate");
  const Eigen::Index p1 = s.rows(), p2 = s.cols(), n = s.n();
  if (row_comp.rows() != p1 || col_comp.rows() != p2)
    throw std::invalid_argument("noise_cov_aggregate: dimension mismatch");
  detail::require_half_orthonormal(row_comp, "noise_cov_aggregate");
  detail::require_half_orthonormal(col_comp, "noise_cov_aggregate");

  const Eigen::Index v1 = row_comp.cols(), v2 = col_comp.cols();
  Eigen::MatrixXd projected(v1 * v2, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Map<Eigen::MatrixXd> out(projected.col(t).data(), v1, v2);
    out.noalias() = row_comp.transpose() * s.matrix(t) * col_comp;
  }
  // cross.block(i*p1, ., p1, v1*v2) = Cov(y_{i,t}, vec(B' Y_t Q))
  Eigen::MatrixXd cross =
      (s.flat() * projected.transpose()) / static_cast<double>(n);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p1, p1);
  for (Eigen::Index i = 0; i < p2; ++i) {
    const auto w = cross.middleRows(i * p1, p1);
    acc.noalias() += w * w.transpose();
  }
  acc = 0.5 * (acc + acc.transpose()).eval();
  return {std::move(acc), CovAggregate::Kind::Noise, 0};
}

/// Column-space noise aggregate: the same construction on transposed data,
/// with the complement roles swapped; p2 x p2.
inline CovAggregate noise_cov_aggregate_back(const MatrixSeries& s,
                                             const Eigen::MatrixXd& row_comp,
                                             const Eigen::MatrixXd& col_comp) {
  return noise_cov_aggregate(transpose_series(s), col_comp, row_comp);
}

}  // namespace ttfm
