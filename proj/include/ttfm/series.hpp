#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace ttfm {

/// A real matrix-valued time series: n observations of a p1 x p2 matrix.
///
/// Storage is a (p1*p2) x n matrix whose column t is the column-major
/// flattening of the t-th observation. That layout makes the flattened view,
/// per-time matrices, and per-column time slices all zero-copy.
///
/// Instances are treated as immutable once filled; every operation below
/// returns a new series, so values can be shared freely across threads.
class MatrixSeries {
 public:
  MatrixSeries(Eigen::Index n, Eigen::Index p1, Eigen::Index p2)
      : data_(Eigen::MatrixXd::Zero(p1 * p2, n)), p1_(p1), p2_(p2) {
    check_dims(n, p1, p2);
  }

  /// Adopt a (p1*p2) x n matrix whose column t is the flattened observation.
  static MatrixSeries from_flat(Eigen::MatrixXd flat, Eigen::Index p1,
                                Eigen::Index p2, bool centered = false) {
    check_dims(flat.cols(), p1, p2);
    if (flat.rows() != p1 * p2)
      throw std::invalid_argument("MatrixSeries: flat data has " +
                                  std::to_string(flat.rows()) +
                                  " rows, expected p1*p2");
    if (!flat.allFinite())
      throw std::invalid_argument("MatrixSeries: non-finite entries");
    MatrixSeries s(std::move(flat), p1, p2, centered);
    return s;
  }

  Eigen::Index n() const { return data_.cols(); }
  Eigen::Index rows() const { return p1_; }
  Eigen::Index cols() const { return p2_; }
  bool centered() const { return centered_; }

  /// Entry (i, j) of the t-th observation (all indices 0-based).
  double operator()(Eigen::Index t, Eigen::Index i, Eigen::Index j) const {
    return data_(j * p1_ + i, t);
  }
  double& cell(Eigen::Index t, Eigen::Index i, Eigen::Index j) {
    return data_(j * p1_ + i, t);
  }

  /// The t-th observation as a p1 x p2 matrix view.
  Eigen::Map<const Eigen::MatrixXd> matrix(Eigen::Index t) const {
    return {data_.col(t).data(), p1_, p2_};
  }

  /// Time slice of matrix column j: a p1 x n block, column t = y_{j,t}.
  Eigen::Block<const Eigen::MatrixXd> column_series(Eigen::Index j) const {
    if (j < 0 || j >= p2_)
      throw std::invalid_argument("MatrixSeries: column index out of range");
    return data_.middleRows(j * p1_, p1_);
  }

  /// Flattened storage, (p1*p2) x n; column t is vec of observation t.
  const Eigen::MatrixXd& flat() const { return data_; }

  /// First n_keep observations.
  MatrixSeries head(Eigen::Index n_keep) const {
    if (n_keep < 2 || n_keep > n())
      throw std::invalid_argument("MatrixSeries::head: bad length");
    return MatrixSeries(data_.leftCols(n_keep), p1_, p2_, centered_);
  }

  void mark_centered(bool flag) { centered_ = flag; }

 private:
  MatrixSeries(Eigen::MatrixXd data, Eigen::Index p1, Eigen::Index p2,
               bool centered)
      : data_(std::move(data)), p1_(p1), p2_(p2), centered_(centered) {}

  static void check_dims(Eigen::Index n, Eigen::Index p1, Eigen::Index p2) {
    if (n < 2) throw std::invalid_argument("MatrixSeries: need n >= 2");
    if (p1 < 1 || p2 < 1)
      throw std::invalid_argument("MatrixSeries: need p1, p2 >= 1");
  }

  Eigen::MatrixXd data_;  // (p1*p2) x n
  Eigen::Index p1_, p2_;
  bool centered_ = false;

  friend MatrixSeries center(const MatrixSeries&);
  friend MatrixSeries transpose_series(const MatrixSeries&);
};

/// Subtract the temporal mean of every cell. Idempotent: a series already
/// flagged as centered is returned unchanged.
inline MatrixSeries center(const MatrixSeries& s) {
  if (s.centered()) return s;
  Eigen::MatrixXd flat = s.flat();
  flat.colwise() -= flat.rowwise().mean().eval();
  return MatrixSeries(std::move(flat), s.rows(), s.cols(), true);
}

/// Transpose every observation: output(t) = input(t)'.
inline MatrixSeries transpose_series(const MatrixSeries& s) {
  const Eigen::Index p1 = s.rows(), p2 = s.cols(), n = s.n();
  Eigen::MatrixXd flat(p1 * p2, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Map<Eigen::MatrixXd> out(flat.col(t).data(), p2, p1);
    out = s.matrix(t).transpose();
  }
  return MatrixSeries(std::move(flat), p2, p1, s.centered());
}

/// n x (p1*p2) matrix whose row t is the column-major flattening of
/// observation t.
inline Eigen::MatrixXd vectorize(const MatrixSeries& s) {
  return s.flat().transpose();
}

/// Inverse of vectorize.
inline MatrixSeries reshape(const Eigen::MatrixXd& rows, Eigen::Index p1,
                            Eigen::Index p2, bool centered = false) {
  return MatrixSeries::from_flat(rows.transpose(), p1, p2, centered);
}

}  // namespace ttfm
