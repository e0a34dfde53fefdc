#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttfm/series.hpp"
#include "ttfm/whitenoise.hpp"

namespace ttfm {

/// One hypothesis test performed during order selection. Anchors are
/// 1-based: the tested block spans rows [row_start..p1] x cols
/// [col_start..p2] of the rotated series.
struct OrderStep {
  enum class Phase { diagonal, fixed_row, back_test_rows, back_test_cols };
  int row_start = 0;
  int col_start = 0;
  int rows = 0;
  int cols = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool rejected = false;
  Phase phase = Phase::diagonal;
};

struct OrderTrace {
  std::vector<OrderStep> steps;
};

inline const char* phase_name(OrderStep::Phase p) {
  switch (p) {
    case OrderStep::Phase::diagonal: return "diagonal";
    case OrderStep::Phase::fixed_row: return "fixed-row";
    case OrderStep::Phase::back_test_rows: return "back-test-rows";
    case OrderStep::Phase::back_test_cols: return "back-test-cols";
  }
  return "?";
}

/// Rotate every observation into the eigenvector bases: W_t = G1' Y_t G2.
/// Both G matrices must be square orthonormal.
inline MatrixSeries eigen_rotate(const MatrixSeries& s,
                                 const Eigen::MatrixXd& g1,
                                 const Eigen::MatrixXd& g2) {
  const Eigen::Index p1 = s.rows(), p2 = s.cols(), n = s.n();
  auto check = [](const Eigen::MatrixXd& g, Eigen::Index p, const char* who) {
    if (g.rows() != p || g.cols() != p)
      throw std::invalid_argument(std::string("eigen_rotate: ") + who +
                                  " has wrong shape");
    Eigen::MatrixXd gram = g.transpose() * g;
    gram.diagonal().array() -= 1.0;
    if (gram.norm() > 1e-8)
      throw std::invalid_argument(std::string("eigen_rotate: ") + who +
                                  " is not orthonormal");
  };
  check(g1, p1, "row basis");
  check(g2, p2, "column basis");
  Eigen::MatrixXd flat(p1 * p2, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Map<Eigen::MatrixXd> out(flat.col(t).data(), p1, p2);
    out.noalias() = g1.transpose() * s.matrix(t) * g2;
  }
  return MatrixSeries::from_flat(std::move(flat), p1, p2, s.centered());
}

/// Lower-right block: rows i..p1, columns j..p2 (1-based anchors).
inline MatrixSeries tail_block(const MatrixSeries& s, int i, int j) {
  const Eigen::Index p1 = s.rows(), p2 = s.cols(), n = s.n();
  if (i < 1 || i > p1 || j < 1 || j > p2)
    throw std::invalid_argument("tail_block: anchor out of range");
  const Eigen::Index rows = p1 - i + 1, cols = p2 - j + 1;
  Eigen::MatrixXd flat(rows * cols, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Map<Eigen::MatrixXd> out(flat.col(t).data(), rows, cols);
    out = s.matrix(t).block(i - 1, j - 1, rows, cols);
  }
  return MatrixSeries::from_flat(std::move(flat), rows, cols, false);
}

/// Upper-left block: rows 1..i-1, columns 1..j-1 (1-based, i and j >= 2).
inline MatrixSeries head_block(const MatrixSeries& s, int i, int j) {
  if (i < 2 || i > s.rows() || j < 2 || j > s.cols())
    throw std::invalid_argument("head_block: anchor out of range");
  Eigen::MatrixXd flat((i - 1) * (j - 1), s.n());
  for (Eigen::Index t = 0; t < s.n(); ++t) {
    Eigen::Map<Eigen::MatrixXd> out(flat.col(t).data(), i - 1, j - 1);
    out = s.matrix(t).topLeftCorner(i - 1, j - 1);
  }
  return MatrixSeries::from_flat(std::move(flat), i - 1, j - 1, false);
}

/// When the total dimension exceeds the sample size, keep only the leading
/// floor(epsilon * sqrt(n)) rotated rows and columns for testing; otherwise
/// return the series unchanged.
inline MatrixSeries truncate_for_test(const MatrixSeries& s, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("truncate_for_test: epsilon out of (0, 1]");
  const Eigen::Index p1 = s.rows(), p2 = s.cols(), n = s.n();
  if (p1 * p2 <= n) return s;
  const auto keep = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(
             std::floor(epsilon * std::sqrt(static_cast<double>(n)))));
  const Eigen::Index rows = std::min(p1, keep), cols = std::min(p2, keep);
  if (rows == p1 && cols == p2) return s;
  Eigen::MatrixXd flat(rows * cols, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Map<Eigen::MatrixXd> out(flat.col(t).data(), rows, cols);
    out = s.matrix(t).topLeftCorner(rows, cols);
  }
  return MatrixSeries::from_flat(std::move(flat), rows, cols, s.centered());
}

struct OrderSelection {
  int r1 = 0;
  int r2 = 0;
  OrderTrace trace;
};

/// Diagonal-path search for the factor order on a rotated series.
///
/// Phase 1 walks the diagonal testing the lower-right block anchored at
/// (l, l) and stops at the first non-rejection l_star. If every diagonal
/// block up to min(p1, p2) is rejected, the exhausted side is fixed at its
/// full dimension and the remaining side is scanned from the single
/// last-row (or last-column) block. Otherwise a two-stage back test refines
/// the row order and then the column order, each stopping at the first
/// non-rejection; the printed procedure states the opposite stopping rule
/// for the second stage, but only first non-rejection is consistent with
/// its own order formula r2 = l* + j* - 2 and with phase 1, so that reading
/// is used for both stages.
///
/// Blocks that would fall outside the matrix terminate the affected scan at
/// the boundary order. A non-rejection at the very first diagonal test
/// returns (0, 0) directly.
inline OrderSelection diagonal_path_select(const MatrixSeries& w,
                                           const WhiteNoiseTest& test, int m,
                                           double alpha) {
  const int p1 = static_cast<int>(w.rows()), p2 = static_cast<int>(w.cols());
  OrderSelection sel;

  auto run_test = [&](int i, int j, OrderStep::Phase phase) -> bool {
    const MatrixSeries blk = tail_block(w, i, j);
    const WNResult res = test(vectorize(blk), m, alpha);
    OrderStep step;
    step.row_start = i;
    step.col_start = j;
    step.rows = static_cast<int>(blk.rows());
    step.cols = static_cast<int>(blk.cols());
    step.statistic = res.statistic;
    step.threshold = res.threshold;
    step.rejected = res.reject;
    step.phase = phase;
    sel.trace.steps.push_back(step);
    return res.reject;
  };

  const int diag_max = std::min(p1, p2);
  int l_star = diag_max;
  bool exhausted = true;
  for (int l = 1; l <= diag_max; ++l) {
    if (!run_test(l, l, OrderStep::Phase::diagonal)) {
      l_star = l;
      exhausted = false;
      break;
    }
  }

  if (exhausted) {
    // Every diagonal block rejected: the smaller side is fully dynamic.
    if (p1 <= p2) {
      sel.r1 = p1;
      sel.r2 = p2;  // boundary default if every remaining test rejects
      for (int j = 1; p1 + j <= p2; ++j) {
        if (!run_test(p1, p1 + j, OrderStep::Phase::fixed_row)) {
          sel.r2 = p1 + j - 1;
          break;
        }
      }
    } else {
      sel.r2 = p2;
      sel.r1 = p1;
      for (int i = 1; p2 + i <= p1; ++i) {
        if (!run_test(p2 + i, p2, OrderStep::Phase::fixed_row)) {
          sel.r1 = p2 + i - 1;
          break;
        }
      }
    }
    return sel;
  }

  if (l_star == 1) {
    // No dynamics detected at all; back-test anchors would be out of range.
    sel.r1 = 0;
    sel.r2 = 0;
    return sel;
  }

  // Back test, rows first: anchor column l*-1, walk the row anchor down.
  int i_star = p1 - l_star + 2;  // boundary value if all tests reject
  for (int i = 1; l_star - 1 + i <= p1; ++i) {
    if (!run_test(l_star - 1 + i, l_star - 1,
                  OrderStep::Phase::back_test_rows)) {
      i_star = i;
      break;
    }
  }
  sel.r1 = l_star + i_star - 2;

  // Columns second: anchor row fixed at the selected row order.
  int j_star = p2 - l_star + 2;
  for (int j = 1; l_star - 1 + j <= p2; ++j) {
    if (!run_test(sel.r1, l_star - 1 + j, OrderStep::Phase::back_test_cols)) {
      j_star = j;
      break;
    }
  }
  sel.r2 = l_star + j_star - 2;
  return sel;
}

}  // namespace ttfm
