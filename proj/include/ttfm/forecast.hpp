#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttfm/estimator.hpp"
#include "ttfm/metrics.hpp"
#include "ttfm/parallel.hpp"
#include "ttfm/series.hpp"

namespace ttfm {

/// Least-squares AR(1) fit x_t = c + phi x_{t-1} + e_t.
struct ARFit {
  double phi = 0.0;
  double intercept = 0.0;
  double resid_var = 0.0;
};

inline ARFit fit_ar1(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (n < 3) throw std::invalid_argument("fit_ar1: need at least 3 points");
  const auto lag = x.head(n - 1);
  const auto lead = x.tail(n - 1);
  const double m0 = lag.mean(), m1 = lead.mean();
  const double den = (lag.array() - m0).square().sum();
  if (!(den > 0.0)) throw std::runtime_error("fit_ar1: degenerate series");
  ARFit f;
  f.phi = ((lead.array() - m1) * (lag.array() - m0)).sum() / den;
  f.intercept = m1 - f.phi * m0;
  const auto resid = lead.array() - f.intercept - f.phi * lag.array();
  const Eigen::Index cnt = n - 1;
  f.resid_var = cnt > 2 ? resid.square().sum() / double(cnt - 2) : 0.0;
  return f;
}

/// Iterated h-step forecast: c (1 + phi + ... + phi^{h-1}) + phi^h x_n.
inline double forecast_h(const ARFit& f, double last, int h) {
  if (h < 1) throw std::invalid_argument("forecast_h: h must be >= 1");
  double pow_phi = 1.0, geom = 0.0;
  for (int s = 0; s < h; ++s) {
    geom += pow_phi;
    pow_phi *= f.phi;
  }
  return f.intercept * geom + pow_phi * last;
}

enum class ForecastMethod { gt, wlc, sar };

inline const char* method_name(ForecastMethod m) {
  switch (m) {
    case ForecastMethod::gt: return "gt";
    case ForecastMethod::wlc: return "wlc";
    case ForecastMethod::sar: return "sar";
  }
  return "?";
}

struct ForecastConfig {
  FitConfig fit;
  bool refit_orders = false;  // rerun order selection at every origin
  int threads = 1;
};

/// Forecast-error summary for one (method, horizon) pair.
struct FeRow {
  ForecastMethod method = ForecastMethod::gt;
  int h = 0;
  double fe_frobenius = 0.0;
  double fe_spectral = 0.0;
  int origins_used = 0;
  int excluded = 0;
  bool excessive_exclusions = false;  // more than 5% of origins failed
};

namespace detail {

/// Scalar AR(1) forecasts of every entry of a matrix-valued series.
inline std::vector<Eigen::MatrixXd> ar_forecast_matrix(
    const std::vector<Eigen::MatrixXd>& track,
    const std::vector<int>& horizons) {
  const Eigen::Index rows = track.empty() ? 0 : track[0].rows();
  const Eigen::Index cols = track.empty() ? 0 : track[0].cols();
  std::vector<Eigen::MatrixXd> out(horizons.size(),
                                   Eigen::MatrixXd::Zero(rows, cols));
  Eigen::VectorXd x(static_cast<Eigen::Index>(track.size()));
  for (Eigen::Index a = 0; a < rows; ++a)
    for (Eigen::Index b = 0; b < cols; ++b) {
      for (std::size_t t = 0; t < track.size(); ++t)
        x(static_cast<Eigen::Index>(t)) = track[t](a, b);
      const ARFit f = fit_ar1(x);
      for (std::size_t k = 0; k < horizons.size(); ++k)
        out[k](a, b) = forecast_h(f, x(x.size() - 1), horizons[k]);
    }
  return out;
}

}  // namespace detail

/// Rolling-origin evaluation. For every origin tau in
/// [origin_begin, origin_end] (1-based prefix lengths), the model is fitted
/// on observations 1..tau and the matrix at tau+h is predicted for every h.
///
/// gt:  factor fit, scalar AR(1) per recovered factor entry, prediction
///      front * Xhat_{tau+h} * back'.
/// wlc: the same with the baseline projection fit.
/// sar: an independent scalar AR(1) per data cell.
///
/// Factor orders are selected once at the first origin and held fixed
/// afterwards unless refit_orders is set. Origins where a fit fails are
/// excluded and counted.
inline std::vector<FeRow> rolling_eval(const MatrixSeries& series,
                                       const std::vector<ForecastMethod>& methods,
                                       const std::vector<int>& horizons,
                                       int origin_begin, int origin_end,
                                       const ForecastConfig& cfg) {
  if (methods.empty() || horizons.empty())
    throw std::invalid_argument("rolling_eval: nothing to evaluate");
  int max_h = 0;
  for (int h : horizons) {
    if (h < 1) throw std::invalid_argument("rolling_eval: horizons >= 1");
    max_h = std::max(max_h, h);
  }
  const int n = static_cast<int>(series.n());
  if (origin_begin < 2 || origin_begin > origin_end ||
      origin_end > n - max_h)
    throw std::invalid_argument("rolling_eval: origin range out of bounds");
  cfg.fit.validate();

  const int n_origins = origin_end - origin_begin + 1;

  // Pin the factor orders from the first origin when not refitting.
  FitConfig gt_cfg = cfg.fit;
  std::pair<int, int> wlc_fixed{-1, -1};
  const bool needs_gt =
      std::count(methods.begin(), methods.end(), ForecastMethod::gt) > 0;
  const bool needs_wlc =
      std::count(methods.begin(), methods.end(), ForecastMethod::wlc) > 0;
  if (!cfg.refit_orders) {
    const MatrixSeries first = series.head(origin_begin);
    if (needs_gt && gt_cfg.r1 < 0) {
      const FactorFit f = fit(first, gt_cfg);
      gt_cfg.r1 = f.r1;
      gt_cfg.r2 = f.r2;
    }
    if (needs_wlc) wlc_fixed = wlc_orders(first, cfg.fit.k0);
  }

  struct OriginResult {
    bool ok = false;
    std::vector<Eigen::MatrixXd> prediction;  // one per horizon
  };
  // indexed [method][origin]
  std::vector<std::vector<OriginResult>> results(
      methods.size(), std::vector<OriginResult>(
                          static_cast<std::size_t>(n_origins)));

  parallel_for(static_cast<std::size_t>(n_origins), cfg.threads,
               [&](std::size_t oi) {
    const int tau = origin_begin + static_cast<int>(oi);
    const MatrixSeries prefix = series.head(tau);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      OriginResult& slot = results[mi][oi];
      try {
        switch (methods[mi]) {
          case ForecastMethod::gt: {
            const FactorFit f =
                cfg.refit_orders ? fit(prefix, cfg.fit) : fit(prefix, gt_cfg);
            if (f.r1 == 0 || f.r2 == 0) {
              slot.prediction.assign(horizons.size(),
                                     Eigen::MatrixXd::Zero(series.rows(),
                                                           series.cols()));
            } else {
              const auto fx = detail::ar_forecast_matrix(f.factors, horizons);
              for (const auto& x : fx)
                slot.prediction.push_back(f.loadings.front * x *
                                          f.loadings.back.transpose());
            }
            break;
          }
          case ForecastMethod::wlc: {
            const FactorFit f =
                (cfg.refit_orders || wlc_fixed.first < 0)
                    ? wlc_fit(prefix, cfg.fit.k0)
                    : wlc_fit(prefix, cfg.fit.k0, wlc_fixed);
            const auto fx = detail::ar_forecast_matrix(f.factors, horizons);
            for (const auto& x : fx)
              slot.prediction.push_back(f.loadings.front * x *
                                        f.loadings.back.transpose());
            break;
          }
          case ForecastMethod::sar: {
            std::vector<Eigen::MatrixXd> track(
                static_cast<std::size_t>(tau));
            for (int t = 0; t < tau; ++t)
              track[static_cast<std::size_t>(t)] = prefix.matrix(t);
            slot.prediction = detail::ar_forecast_matrix(track, horizons);
            break;
          }
        }
        slot.ok = true;
      } catch (const std::exception&) {
        slot.ok = false;
      }
    }
  });

  std::vector<FeRow> rows;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
      const int h = horizons[hi];
      std::vector<Eigen::MatrixXd> predicted, actual;
      int excluded = 0;
      for (int oi = 0; oi < n_origins; ++oi) {
        const OriginResult& slot = results[mi][static_cast<std::size_t>(oi)];
        if (!slot.ok) {
          ++excluded;
          continue;
        }
        const int target = origin_begin + oi + h - 1;  // 0-based time index
        predicted.push_back(slot.prediction[hi]);
        actual.push_back(series.matrix(target));
      }
      FeRow row;
      row.method = methods[mi];
      row.h = h;
      row.origins_used = static_cast<int>(predicted.size());
      row.excluded = excluded;
      row.excessive_exclusions = excluded * 20 > n_origins;  // > 5%
      if (!predicted.empty()) {
        row.fe_frobenius = forecast_errors(predicted, actual,
                                           FeNorm::frobenius);
        row.fe_spectral = forecast_errors(predicted, actual, FeNorm::spectral);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace ttfm
