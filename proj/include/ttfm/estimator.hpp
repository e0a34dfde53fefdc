#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ttfm/covariance.hpp"
#include "ttfm/errors.hpp"
#include "ttfm/linalg.hpp"
#include "ttfm/order_select.hpp"
#include "ttfm/series.hpp"
#include "ttfm/whitenoise.hpp"

namespace ttfm {

/// Knobs for the full estimation pipeline. Negative r1/r2 (or k1/k2) mean
/// "select automatically"; nonnegative values pin them.
struct FitConfig {
  int k0 = 2;           // lag horizon of the dynamic aggregates
  double alpha = 0.05;  // level of each white-noise test
  int m = 10;           // lags used by the white-noise tests
  enum class Test { ljung_box, rank_tm };
  Test test = Test::rank_tm;
  double epsilon = 0.9;  // truncation fraction when p1*p2 > n
  int r1 = -1, r2 = -1;  // manual factor orders
  int k1 = -1, k2 = -1;  // manual spike counts
  bool small_dim_path = false;

  void validate() const {
    if (k0 < 1) throw std::invalid_argument("FitConfig: k0 must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("FitConfig: alpha must be in (0, 1)");
    if (m < 1) throw std::invalid_argument("FitConfig: m must be >= 1");
    if (!(epsilon > 0.0 && epsilon <= 1.0))
      throw std::invalid_argument("FitConfig: epsilon must be in (0, 1]");
    if ((r1 >= 0) != (r2 >= 0))
      throw std::invalid_argument("FitConfig: set both orders or neither");
    if ((k1 >= 0) != (k2 >= 0))
      throw std::invalid_argument("FitConfig: set both spike counts or neither");
  }

  WhiteNoiseTest make_test() const {
    if (test == Test::ljung_box)
      return [](const Eigen::MatrixXd& x, int lags, double a) {
        return ljung_box(x, lags, a);
      };
    return [](const Eigen::MatrixXd& x, int lags, double a) {
      return rank_tm(x, lags, a);
    };
  }
};

/// Half-orthonormal row/column loading estimates with their complements and
/// the spectra of the dynamic aggregates they came from.
struct LoadingSet {
  Eigen::MatrixXd front;       // p1 x r1
  Eigen::MatrixXd front_comp;  // p1 x (p1 - r1)
  Eigen::MatrixXd back;        // p2 x r2
  Eigen::MatrixXd back_comp;   // p2 x (p2 - r2)
  Eigen::VectorXd front_eigs;  // length p1, nonincreasing, clamped at 0
  Eigen::VectorXd back_eigs;   // length p2
};

/// Projected-PCA output: the non-spiked noise complements, the alignment
/// rotations chosen inside them, and the resulting recovery bases.
struct DenoiserBasis {
  int k_front = 0, k_back = 0;              // spike directions removed
  int k_front_upper = 0, k_back_upper = 0;  // upper edge of the scan band
  bool k_warned = false;
  bool small_dim = false;
  Eigen::MatrixXd basis_front;  // p1 x (p1 - k_front)
  Eigen::MatrixXd basis_back;   // p2 x (p2 - k_back)
  Eigen::MatrixXd align_front;  // (p1 - k_front) x r1
  Eigen::MatrixXd align_back;   // (p2 - k_back) x r2
  Eigen::MatrixXd proj_front;   // basis_front * align_front, p1 x r1
  Eigen::MatrixXd proj_back;    // basis_back * align_back, p2 x r2
  Eigen::VectorXd noise_front_eigs;  // spectrum of the row noise aggregate
  Eigen::VectorXd noise_back_eigs;
  double smin_front = 0.0;  // min singular value of proj_front' * front
  double smin_back = 0.0;   // min singular value of back' * proj_back
};

/// Complete fit: selected orders, bases, recovered factor series and the
/// common component front * X_t * back'.
struct FactorFit {
  int r1 = 0, r2 = 0;
  LoadingSet loadings;
  DenoiserBasis denoiser;
  std::vector<Eigen::MatrixXd> factors;  // n matrices, r1 x r2
  std::vector<Eigen::MatrixXd> common;   // n matrices, p1 x p2
  OrderTrace order_trace;
};

namespace detail {

inline Eigen::VectorXd clamp_spectrum(const Eigen::VectorXd& v) {
  return v.cwiseMax(0.0);
}

/// Slice an eigendecomposition into loading + complement, allowing the
/// degenerate orders 0 and p.
inline void split_basis(const EigenDecomp& d, Eigen::Index r,
                        Eigen::MatrixXd& load, Eigen::MatrixXd& comp) {
  load = d.vectors.leftCols(r);
  comp = d.vectors.rightCols(d.vectors.cols() - r);
}

inline double min_singular_value(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues().minCoeff();
}

inline double rcond(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 1.0;  // empty solves are trivial
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const double hi = svd.singularValues().maxCoeff();
  if (!(hi > 0.0)) return 0.0;
  return svd.singularValues().minCoeff() / hi;
}

}  // namespace detail

/// Estimate the loading set at given orders from the spectra of the lag
/// covariance aggregates. 1 <= r1 < p1 and 1 <= r2 < p2.
inline LoadingSet estimate_loadings(const MatrixSeries& series, int r1, int r2,
                                    int k0) {
  if (r1 < 1 || r1 >= series.rows() || r2 < 1 || r2 >= series.cols())
    throw std::invalid_argument("estimate_loadings: order out of range");
  const MatrixSeries work = center(series);
  const EigenDecomp front = sym_eigen(lag_cov_aggregate(work, k0).matrix);
  const EigenDecomp back = sym_eigen(lag_cov_aggregate_back(work, k0).matrix);

  const double front_floor = spectrum_floor(front.values);
  const double back_floor = spectrum_floor(back.values);
  if (!(front.values(r1 - 1) > front_floor) || !(front.values(0) > 0.0) ||
      !(back.values(r2 - 1) > back_floor) || !(back.values(0) > 0.0))
    throw estimation_error("loading-estimation", "no dynamic signal detected");

  LoadingSet out;
  detail::split_basis(front, r1, out.front, out.front_comp);
  detail::split_basis(back, r2, out.back, out.back_comp);
  out.front_eigs = detail::clamp_spectrum(front.values);
  out.back_eigs = detail::clamp_spectrum(back.values);
  return out;
}

/// Result of the spike-count selection: the chosen count (lower edge of the
/// admissible band), the band's upper edge, and whether a degenerate
/// spectrum forced a fallback.
struct SpikeSelection {
  int count = 0;
  int upper = 0;
  bool warned = false;
};

/// Choose the number of spiked noise directions from a noise-aggregate
/// spectrum: scan consecutive eigenvalue ratios mu_{j+1}/mu_j for
/// j = 1..upper with upper = min(floor(sqrt(p)), floor(sqrt(n)), p - r, 5)
/// and take the argmin (first index on ties).
inline SpikeSelection select_spike_count(const Eigen::VectorXd& spectrum,
                                         int r_hat, Eigen::Index n) {
  const int p = static_cast<int>(spectrum.size());
  SpikeSelection sel;
  sel.upper = std::min(
      {static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))),
       static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))),
       p - r_hat, 5});
  if (sel.upper < 1) {
    sel.warned = true;
    return sel;
  }
  const double floor_val = spectrum_floor(spectrum);
  if (!(spectrum(0) > 0.0)) {
    sel.warned = true;  // no noise signal at all (exactly degenerate data)
    return sel;
  }
  int scan = sel.upper;
  while (scan >= 1 && !(spectrum(scan) > floor_val)) --scan;
  if (scan < 1) {
    sel.warned = true;
    return sel;
  }
  const auto ratios = eigen_ratios(spectrum, scan);
  int arg = 0;
  for (int j = 1; j < static_cast<int>(ratios.size()); ++j)
    if (ratios[static_cast<std::size_t>(j)] <
        ratios[static_cast<std::size_t>(arg)])
      arg = j;
  sel.count = arg + 1;
  if (sel.count >= p - r_hat) {  // keep the recovery basis strictly wider
    sel.count = std::max(0, p - r_hat - 1);
    sel.warned = true;
  }
  return sel;
}

/// Alignment rotation: the r directions inside the residual basis that are
/// closest to the loading span, i.e. the top-r eigenvectors of
/// basis' * load * load' * basis.
inline Eigen::MatrixXd align_basis(const Eigen::MatrixXd& basis,
                                   const Eigen::MatrixXd& load,
                                   Eigen::Index r) {
  if (r == 0) return Eigen::MatrixXd(basis.cols(), 0);
  Eigen::MatrixXd overlap = basis.transpose() * load;
  Eigen::MatrixXd gram = overlap * overlap.transpose();
  return top_eigenvectors(gram, r);
}

namespace detail {

inline DenoiserBasis assemble_denoiser(const EigenDecomp& s_front,
                                       const EigenDecomp& s_back,
                                       const LoadingSet& loadings, int k1,
                                       int k2) {
  const Eigen::Index p1 = s_front.vectors.rows();
  const Eigen::Index p2 = s_back.vectors.rows();
  const Eigen::Index r1 = loadings.front.cols();
  const Eigen::Index r2 = loadings.back.cols();
  if (k1 < 0 || k1 >= p1 - r1 || k2 < 0 || k2 >= p2 - r2)
    throw std::invalid_argument("denoiser: spike count out of range");

  DenoiserBasis d;
  d.k_front = k1;
  d.k_back = k2;
  d.basis_front = s_front.vectors.rightCols(p1 - k1);
  d.basis_back = s_back.vectors.rightCols(p2 - k2);
  d.align_front = align_basis(d.basis_front, loadings.front, r1);
  d.align_back = align_basis(d.basis_back, loadings.back, r2);
  d.proj_front = d.basis_front * d.align_front;
  d.proj_back = d.basis_back * d.align_back;
  d.noise_front_eigs = clamp_spectrum(s_front.values);
  d.noise_back_eigs = clamp_spectrum(s_back.values);

  const Eigen::MatrixXd front_prod =
      d.proj_front.transpose() * loadings.front;
  const Eigen::MatrixXd back_prod = loadings.back.transpose() * d.proj_back;
  d.smin_front = min_singular_value(front_prod);
  d.smin_back = min_singular_value(back_prod);
  if (r1 > 0 && rcond(front_prod) <= 1e-10)
    throw estimation_error("denoiser", "alignment failure (row side)");
  if (r2 > 0 && rcond(back_prod) <= 1e-10)
    throw estimation_error("denoiser", "alignment failure (column side)");
  return d;
}

}  // namespace detail

/// Build the projected-PCA denoiser at the given spike counts. Requires
/// k1 < p1 - r1 and k2 < p2 - r2.
inline DenoiserBasis build_denoiser(const MatrixSeries& series,
                                    const LoadingSet& loadings, int k1,
                                    int k2) {
  const MatrixSeries work = center(series);
  const EigenDecomp s_front = sym_eigen(
      noise_cov_aggregate(work, loadings.front_comp, loadings.back_comp)
          .matrix);
  const EigenDecomp s_back = sym_eigen(
      noise_cov_aggregate_back(work, loadings.front_comp, loadings.back_comp)
          .matrix);
  return detail::assemble_denoiser(s_front, s_back, loadings, k1, k2);
}

/// Small-dimension route: take the recovery bases directly as the
/// eigenvectors of the r smallest noise-aggregate eigenvalues, skipping the
/// spike removal and alignment stages.
inline DenoiserBasis build_denoiser_small(const MatrixSeries& series,
                                          const LoadingSet& loadings) {
  const MatrixSeries work = center(series);
  const Eigen::Index r1 = loadings.front.cols(), r2 = loadings.back.cols();
  const EigenDecomp s_front = sym_eigen(
      noise_cov_aggregate(work, loadings.front_comp, loadings.back_comp)
          .matrix);
  const EigenDecomp s_back = sym_eigen(
      noise_cov_aggregate_back(work, loadings.front_comp, loadings.back_comp)
          .matrix);
  DenoiserBasis d;
  d.small_dim = true;
  d.k_front = static_cast<int>(s_front.vectors.cols() - r1);
  d.k_back = static_cast<int>(s_back.vectors.cols() - r2);
  d.basis_front = s_front.vectors.rightCols(r1);
  d.basis_back = s_back.vectors.rightCols(r2);
  d.align_front = Eigen::MatrixXd::Identity(r1, r1);
  d.align_back = Eigen::MatrixXd::Identity(r2, r2);
  d.proj_front = d.basis_front;
  d.proj_back = d.basis_back;
  d.noise_front_eigs = detail::clamp_spectrum(s_front.values);
  d.noise_back_eigs = detail::clamp_spectrum(s_back.values);
  const Eigen::MatrixXd front_prod = d.proj_front.transpose() * loadings.front;
  const Eigen::MatrixXd back_prod = loadings.back.transpose() * d.proj_back;
  d.smin_front = detail::min_singular_value(front_prod);
  d.smin_back = detail::min_singular_value(back_prod);
  if (r1 > 0 && detail::rcond(front_prod) <= 1e-10)
    throw estimation_error("denoiser", "alignment failure (row side)");
  if (r2 > 0 && detail::rcond(back_prod) <= 1e-10)
    throw estimation_error("denoiser", "alignment failure (column side)");
  return d;
}

/// Recover the factor matrices:
///   X_t = (proj_front' front)^-1 proj_front' Y_t proj_back (back' proj_back)^-1
/// Solved with LU factorizations, never explicit inverses.
inline std::vector<Eigen::MatrixXd> recover_factors(
    const MatrixSeries& series, const Eigen::MatrixXd& front,
    const Eigen::MatrixXd& back, const Eigen::MatrixXd& proj_front,
    const Eigen::MatrixXd& proj_back) {
  const Eigen::Index r1 = front.cols(), r2 = back.cols(), n = series.n();
  if (proj_front.rows() != series.rows() || proj_front.cols() != r1 ||
      proj_back.rows() != series.cols() || proj_back.cols() != r2)
    throw std::invalid_argument("recover_factors: shape mismatch");

  std::vector<Eigen::MatrixXd> factors(static_cast<std::size_t>(n));
  if (r1 == 0 || r2 == 0) {
    for (auto& f : factors) f = Eigen::MatrixXd(r1, r2);
    return factors;
  }

  const Eigen::MatrixXd front_prod = proj_front.transpose() * front;
  const Eigen::MatrixXd back_prod = back.transpose() * proj_back;
  if (detail::rcond(front_prod) <= 1e-10 ||
      detail::rcond(back_prod) <= 1e-10)
    throw estimation_error("factor-recovery",
                           "alignment failure: recovery system is singular");
  const Eigen::PartialPivLU<Eigen::MatrixXd> left(front_prod);
  const Eigen::PartialPivLU<Eigen::MatrixXd> right_t(
      back_prod.transpose().eval());
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::MatrixXd mid = proj_front.transpose() * series.matrix(t) * proj_back;
    Eigen::MatrixXd x = left.solve(mid);
    factors[static_cast<std::size_t>(t)] =
        right_t.solve(x.transpose()).transpose();
  }
  return factors;
}

namespace detail {

template <typename Fn>
auto staged(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const estimation_error&) {
    throw;
  } catch (const std::exception& e) {
    throw estimation_error(stage, e.what());
  }
}

}  // namespace detail

/// Full pipeline: dynamic aggregates, order selection along the diagonal
/// path (unless pinned), loading estimation, spike-count selection,
/// projected-PCA denoiser, factor recovery, common component.
///
/// Second-moment objects are always computed from the centered series; the
/// factors themselves are recovered from the data as given, since the
/// recovery map is linear and the model has mean zero.
inline FactorFit fit(const MatrixSeries& series, const FitConfig& config) {
  config.validate();
  const Eigen::Index p1 = series.rows(), p2 = series.cols();
  const MatrixSeries work = center(series);

  const EigenDecomp front_decomp = detail::staged("dynamic-aggregate", [&] {
    return sym_eigen(lag_cov_aggregate(work, config.k0).matrix);
  });
  const EigenDecomp back_decomp = detail::staged("dynamic-aggregate", [&] {
    return sym_eigen(lag_cov_aggregate_back(work, config.k0).matrix);
  });

  FactorFit out;
  if (config.r1 >= 0) {
    if (config.r1 > p1 || config.r2 > p2)
      throw std::invalid_argument("fit: manual orders out of range");
    out.r1 = config.r1;
    out.r2 = config.r2;
  } else {
    detail::staged("order-selection", [&] {
      const MatrixSeries rotated =
          eigen_rotate(work, front_decomp.vectors, back_decomp.vectors);
      const MatrixSeries tested = truncate_for_test(rotated, config.epsilon);
      const OrderSelection sel = diagonal_path_select(
          tested, config.make_test(), config.m, config.alpha);
      out.r1 = sel.r1;
      out.r2 = sel.r2;
      out.order_trace = sel.trace;
      return 0;
    });
  }
  if (out.r1 > 0 || out.r2 > 0) {
    const double f_floor = spectrum_floor(front_decomp.values);
    const double b_floor = spectrum_floor(back_decomp.values);
    const bool front_ok = out.r1 == 0 || front_decomp.values(out.r1 - 1) > f_floor;
    const bool back_ok = out.r2 == 0 || back_decomp.values(out.r2 - 1) > b_floor;
    if (!front_ok || !back_ok)
      throw estimation_error("loading-estimation", "no dynamic signal detected");
  }

  detail::split_basis(front_decomp, out.r1, out.loadings.front,
                      out.loadings.front_comp);
  detail::split_basis(back_decomp, out.r2, out.loadings.back,
                      out.loadings.back_comp);
  out.loadings.front_eigs = detail::clamp_spectrum(front_decomp.values);
  out.loadings.back_eigs = detail::clamp_spectrum(back_decomp.values);

  const EigenDecomp s_front = detail::staged("noise-aggregate", [&] {
    return sym_eigen(noise_cov_aggregate(work, out.loadings.front_comp,
                                         out.loadings.back_comp)
                         .matrix);
  });
  const EigenDecomp s_back = detail::staged("noise-aggregate", [&] {
    return sym_eigen(noise_cov_aggregate_back(work, out.loadings.front_comp,
                                              out.loadings.back_comp)
                         .matrix);
  });

  detail::staged("denoiser", [&] {
    if (config.small_dim_path) {
      out.denoiser = build_denoiser_small(work, out.loadings);
      return 0;
    }
    SpikeSelection front_sel, back_sel;
    if (config.k1 >= 0) {
      front_sel.count = config.k1;
      back_sel.count = config.k2;
    } else {
      front_sel = select_spike_count(s_front.values, out.r1, series.n());
      back_sel = select_spike_count(s_back.values, out.r2, series.n());
    }
    out.denoiser = detail::assemble_denoiser(s_front, s_back, out.loadings,
                                             front_sel.count, back_sel.count);
    out.denoiser.k_front_upper = front_sel.upper;
    out.denoiser.k_back_upper = back_sel.upper;
    out.denoiser.k_warned = front_sel.warned || back_sel.warned;
    return 0;
  });

  out.factors = detail::staged("factor-recovery", [&] {
    return recover_factors(series, out.loadings.front, out.loadings.back,
                           out.denoiser.proj_front, out.denoiser.proj_back);
  });
  out.common.resize(out.factors.size());
  for (std::size_t t = 0; t < out.factors.size(); ++t)
    out.common[t] = out.loadings.front * out.factors[t] *
                    out.loadings.back.transpose();
  return out;
}

/// Baseline order selection: per side, the argmin of consecutive eigenvalue
/// ratios of the dynamic aggregate over j = 1..floor(p/2).
inline std::pair<int, int> wlc_orders(const MatrixSeries& series, int k0) {
  const MatrixSeries work = center(series);
  auto side = [&](const Eigen::VectorXd& values) {
    const double floor_val = spectrum_floor(values);
    if (!(values(0) > 0.0))
      throw estimation_error("wlc-orders", "no dynamic signal detected");
    Eigen::VectorXd safe = values.cwiseMax(floor_val);
    const Eigen::Index jmax = std::max<Eigen::Index>(1, values.size() / 2);
    const auto ratios = eigen_ratios(safe, jmax);
    int arg = 0;
    for (int j = 1; j < static_cast<int>(ratios.size()); ++j)
      if (ratios[static_cast<std::size_t>(j)] <
          ratios[static_cast<std::size_t>(arg)])
        arg = j;
    return arg + 1;
  };
  const EigenDecomp front = sym_eigen(lag_cov_aggregate(work, k0).matrix);
  const EigenDecomp back = sym_eigen(lag_cov_aggregate_back(work, k0).matrix);
  return {side(front.values), side(back.values)};
}

/// Baseline fit: loadings from the dynamic aggregates at ratio-selected
/// orders, factors by plain orthonormal projection X_t = front' Y_t back,
/// no denoising stage.
inline FactorFit wlc_fit(const MatrixSeries& series, int k0,
                         std::optional<std::pair<int, int>> orders = {}) {
  const MatrixSeries work = center(series);
  const auto chosen = orders ? *orders : wlc_orders(series, k0);
  const int r1 = chosen.first, r2 = chosen.second;
  if (r1 < 1 || r1 > series.rows() || r2 < 1 || r2 > series.cols())
    throw std::invalid_argument("wlc_fit: orders out of range");

  const EigenDecomp front = sym_eigen(lag_cov_aggregate(work, k0).matrix);
  const EigenDecomp back = sym_eigen(lag_cov_aggregate_back(work, k0).matrix);
  if (!(front.values(r1 - 1) > spectrum_floor(front.values)) ||
      !(back.values(r2 - 1) > spectrum_floor(back.values)))
    throw estimation_error("loading-estimation", "no dynamic signal detected");

  FactorFit out;
  out.r1 = r1;
  out.r2 = r2;
  detail::split_basis(front, r1, out.loadings.front, out.loadings.front_comp);
  detail::split_basis(back, r2, out.loadings.back, out.loadings.back_comp);
  out.loadings.front_eigs = detail::clamp_spectrum(front.values);
  out.loadings.back_eigs = detail::clamp_spectrum(back.values);

  // Projection estimator: recovery bases coincide with the loadings.
  out.denoiser.basis_front = out.loadings.front;
  out.denoiser.basis_back = out.loadings.back;
  out.denoiser.align_front = Eigen::MatrixXd::Identity(r1, r1);
  out.denoiser.align_back = Eigen::MatrixXd::Identity(r2, r2);
  out.denoiser.proj_front = out.loadings.front;
  out.denoiser.proj_back = out.loadings.back;
  out.denoiser.smin_front = 1.0;
  out.denoiser.smin_back = 1.0;

  out.factors.resize(static_cast<std::size_t>(series.n()));
  out.common.resize(out.factors.size());
  for (Eigen::Index t = 0; t < series.n(); ++t) {
    const auto idx = static_cast<std::size_t>(t);
    out.factors[idx] = out.loadings.front.transpose() * series.matrix(t) *
                       out.loadings.back;
    out.common[idx] = out.loadings.front * out.factors[idx] *
                      out.loadings.back.transpose();
  }
  return out;
}

}  // namespace ttfm
