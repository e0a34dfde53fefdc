#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttfm {

/// Full symmetric eigendecomposition with values sorted nonincreasing and a
/// fixed sign convention: in every eigenvector the entry of largest absolute
/// value is positive (first such entry on ties). Column k pairs with
/// values[k].
struct EigenDecomp {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

namespace detail {

inline void apply_sign_convention(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

}  // namespace detail

inline EigenDecomp sym_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("sym_eigen: matrix not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("sym_eigen: matrix not symmetric");

  // Symmetrize before factorizing; round-off asymmetry otherwise leaks into
  // the eigenvectors.
  Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("sym_eigen: eigensolver failed to converge on " +
                             std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " input");

  EigenDecomp d;
  d.values = solver.eigenvalues().reverse();
  d.vectors = solver.eigenvectors().rowwise().reverse();
  detail::apply_sign_convention(d.vectors);
  return d;
}

/// Eigenvectors of the r largest eigenvalues, as columns.
inline Eigen::MatrixXd top_eigenvectors(const Eigen::MatrixXd& a,
                                        Eigen::Index r) {
  if (r <= 0 || r > a.rows())
    throw std::invalid_argument("top_eigenvectors: r out of range");
  return sym_eigen(a).vectors.leftCols(r);
}

/// Eigenvectors of the v smallest eigenvalues, as columns (still ordered by
/// decreasing eigenvalue).
inline Eigen::MatrixXd bottom_eigenvectors(const Eigen::MatrixXd& a,
                                           Eigen::Index v) {
  if (v <= 0 || v > a.rows())
    throw std::invalid_argument("bottom_eigenvectors: v out of range");
  return sym_eigen(a).vectors.rightCols(v);
}

/// Relative floor below which eigenvalues are treated as zero in ratio and
/// rank logic.
inline double spectrum_floor(const Eigen::VectorXd& values) {
  return values.size() == 0 ? 0.0 : 1e-12 * std::abs(values(0));
}

/// Consecutive ratios values[j+1]/values[j] for j = 0..jmax-1, clamped to
/// (0, 1]. Requires the first jmax+1 values to be strictly positive.
inline std::vector<double> eigen_ratios(const Eigen::VectorXd& values,
                                        Eigen::Index jmax) {
  if (jmax < 1 || jmax + 1 > values.size())
    throw std::invalid_argument("eigen_ratios: jmax out of range");
  for (Eigen::Index j = 0; j <= jmax; ++j)
    if (!(values(j) > 0.0))
      throw std::invalid_argument(
          "eigen_ratios: nonpositive eigenvalue in scan range");
  std::vector<double> out(static_cast<std::size_t>(jmax));
  for (Eigen::Index j = 0; j < jmax; ++j)
    out[static_cast<std::size_t>(j)] = std::min(1.0, values(j + 1) / values(j));
  return out;
}

}  // namespace ttfm
