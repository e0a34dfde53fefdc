#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ttfm {

namespace detail {

inline double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  // Largest singular value via the Gram matrix of the smaller side.
  const bool tall = a.rows() >= a.cols();
  Eigen::MatrixXd gram =
      tall ? Eigen::MatrixXd(a.transpose() * a) : Eigen::MatrixXd(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram,
                                                    Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& h,
                                         const char* who) {
  // Thin orthonormal basis of the column space with a full-rank check.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return Eigen::MatrixXd(h.rows(), 0);
  if (sv(sv.size() - 1) <= 1e-6 * sv(0))
    throw std::invalid_argument(std::string(who) +
                                ": input is rank deficient");
  return svd.matrixU();
}

}  // namespace detail

/// Distance between the column spaces of two p x r half-orthonormal
/// matrices: sqrt(1 - tr(H1 H1' H2 H2') / r), in [0, 1]. 0 iff equal spans,
/// 1 iff orthogonal spans.
inline double subspace_dist(const Eigen::MatrixXd& h1,
                            const Eigen::MatrixXd& h2) {
  if (h1.cols() != h2.cols() || h1.rows() != h2.rows())
    throw std::invalid_argument("subspace_dist: shape mismatch");
  if (h1.cols() == 0) return 0.0;
  for (const auto* h : {&h1, &h2}) {
    Eigen::MatrixXd g = h->transpose() * (*h);
    g.diagonal().array() -= 1.0;
    if (g.norm() > 1e-8)
      throw std::invalid_argument("subspace_dist: input not half-orthonormal");
  }
  const double overlap = (h1.transpose() * h2).squaredNorm() /
                         static_cast<double>(h1.cols());
  return std::sqrt(std::min(1.0, std::max(0.0, 1.0 - overlap)));
}

/// Generalized distance for full-column-rank inputs of possibly different
/// widths: sqrt(1 - tr(P1 P2) / max(h1, h2)) with Pi the orthogonal
/// projector onto the column space of Hi. 0 iff one span contains the other.
inline double subspace_dist_general(const Eigen::MatrixXd& h1,
                                    const Eigen::MatrixXd& h2) {
  if (h1.rows() != h2.rows())
    throw std::invalid_argument("subspace_dist_general: row mismatch");
  const Eigen::Index w1 = h1.cols(), w2 = h2.cols();
  if (w1 == 0 && w2 == 0) return 0.0;
  if (w1 == 0 || w2 == 0) return 1.0;  // empty span is orthogonal to any span
  Eigen::MatrixXd u1 = detail::orthonormal_basis(h1, "subspace_dist_general");
  Eigen::MatrixXd u2 = detail::orthonormal_basis(h2, "subspace_dist_general");
  const double overlap = (u1.transpose() * u2).squaredNorm() /
                         static_cast<double>(std::max(w1, w2));
  return std::sqrt(std::min(1.0, std::max(0.0, 1.0 - overlap)));
}

/// Average per-time spectral-norm discrepancy between two matrix sequences,
/// normalized by sqrt(p1 p2):
///   (1 / (n sqrt(p1 p2))) * sum_t ||Ahat_t - A_t||_2
inline double factor_error(const std::vector<Eigen::MatrixXd>& estimate,
                           const std::vector<Eigen::MatrixXd>& truth) {
  if (estimate.size() != truth.size() || estimate.empty())
    throw std::invalid_argument("factor_error: length mismatch or empty");
  const Eigen::Index p1 = truth[0].rows(), p2 = truth[0].cols();
  double sum = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (estimate[t].rows() != p1 || estimate[t].cols() != p2 ||
        truth[t].rows() != p1 || truth[t].cols() != p2)
      throw std::invalid_argument("factor_error: shape mismatch");
    sum += detail::spectral_norm(estimate[t] - truth[t]);
  }
  return sum / (static_cast<double>(truth.size()) *
                std::sqrt(static_cast<double>(p1 * p2)));
}

enum class FeNorm { frobenius, spectral };

/// Mean forecast error over a list of forecast/actual pairs:
///   mean_k ||Yhat_k - Y_k|| / sqrt(p1 p2)
/// with the Frobenius or spectral norm.
inline double forecast_errors(const std::vector<Eigen::MatrixXd>& forecast,
                              const std::vector<Eigen::MatrixXd>& actual,
                              FeNorm norm) {
  if (forecast.empty() || forecast.size() != actual.size())
    throw std::invalid_argument("forecast_errors: empty or length mismatch");
  const Eigen::Index p1 = actual[0].rows(), p2 = actual[0].cols();
  const double scale = std::sqrt(static_cast<double>(p1 * p2));
  double sum = 0.0;
  for (std::size_t k = 0; k < actual.size(); ++k) {
    if (forecast[k].rows() != p1 || forecast[k].cols() != p2 ||
        actual[k].rows() != p1 || actual[k].cols() != p2)
      throw std::invalid_argument("forecast_errors: shape mismatch");
    const Eigen::MatrixXd diff = forecast[k] - actual[k];
    sum += (norm == FeNorm::frobenius ? diff.norm()
                                      : detail::spectral_norm(diff)) /
           scale;
  }
  return sum / static_cast<double>(actual.size());
}

}  // namespace ttfm
