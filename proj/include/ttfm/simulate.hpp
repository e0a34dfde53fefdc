#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ttfm/estimator.hpp"
#include "ttfm/metrics.hpp"
#include "ttfm/parallel.hpp"
#include "ttfm/rng.hpp"
#include "ttfm/series.hpp"

namespace ttfm {

/// One benchmark scenario: dimensions, factor orders, spiked noise counts,
/// strength exponents, sample size and replication budget.
struct SimConfig {
  int p1 = 7, p2 = 7;
  int r1 = 2, r2 = 3;
  int k1 = 1, k2 = 2;
  double delta1 = 0.0;  // factor strength exponent, 0 = pervasive
  double delta2 = 0.9;  // spiked-noise strength exponent
  int n = 300;
  std::uint64_t seed = 0;
  int reps = 1;
  int burn_in = 200;  // factor recursion warm-up from a zero start

  void validate() const {
    if (p1 < 2 || p2 < 2)
      throw std::invalid_argument("SimConfig: p1 and p2 must be >= 2");
    if (r1 < 1 || r2 < 1 || r1 >= p1 || r2 >= p2)
      throw std::invalid_argument("SimConfig: need 1 <= r < p on both sides");
    if (k1 < 0 || k2 < 0 || k1 >= p1 - r1 || k2 >= p2 - r2)
      throw std::invalid_argument("SimConfig: need 0 <= k < p - r on both sides");
    if (!(delta1 >= 0.0 && delta1 < 1.0) || !(delta2 >= 0.0 && delta2 < 1.0))
      throw std::invalid_argument("SimConfig: deltas must be in [0, 1)");
    if (n < 2) throw std::invalid_argument("SimConfig: n must be >= 2");
    if (reps < 1) throw std::invalid_argument("SimConfig: reps must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("SimConfig: burn_in >= 0");
  }
};

/// A drawn model: loading blocks, diagonal AR coefficients, and (after
/// gen_series) the realized factor series and common component.
struct GroundTruth {
  Eigen::MatrixXd front_load;   // p1 x r1
  Eigen::MatrixXd front_noise;  // p1 x (p1 - r1)
  Eigen::MatrixXd back_load;    // p2 x r2
  Eigen::MatrixXd back_noise;   // p2 x (p2 - r2)
  Eigen::VectorXd phi;          // r1 AR coefficients, rows
  Eigen::VectorXd psi;          // r2 AR coefficients, columns
  std::vector<Eigen::MatrixXd> factors;  // r1 x r2, filled by gen_series
  std::vector<Eigen::MatrixXd> common;   // p1 x p2, filled by gen_series
};

/// Optional capture of the three noise components of the generated series,
/// mapped through the loadings (each entry is p1 x p2).
struct GenParts {
  std::vector<Eigen::MatrixXd> row_noise;   // front_noise * Z21 * back_load'
  std::vector<Eigen::MatrixXd> col_noise;   // front_load * Z12 * back_noise'
  std::vector<Eigen::MatrixXd> full_noise;  // front_noise * Z22 * back_noise'
};

namespace detail {

inline Eigen::MatrixXd draw_uniform_matrix(Rng& rng, Eigen::Index rows,
                                           Eigen::Index cols, double lo,
                                           double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(lo, hi);
  return m;
}

inline Eigen::MatrixXd draw_normal_matrix(Rng& rng, Eigen::Index rows,
                                          Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

}  // namespace detail

/// Draw loading matrices and AR coefficients. Entries of the raw p x p
/// loading blocks are U(-2, 2); the factor block is divided by p^(delta1/2),
/// the first k spiked noise columns by p^(delta2/2), and the remaining noise
/// columns by p. AR diagonals are U(0.5, 0.9).
inline GroundTruth gen_model(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  GroundTruth g;
  const int v1 = cfg.p1 - cfg.r1, v2 = cfg.p2 - cfg.r2;

  Eigen::MatrixXd front =
      detail::draw_uniform_matrix(rng, cfg.p1, cfg.p1, -2.0, 2.0);
  g.front_load =
      front.leftCols(cfg.r1) / std::pow(double(cfg.p1), cfg.delta1 / 2.0);
  g.front_noise = front.rightCols(v1);
  if (cfg.k1 > 0)
    g.front_noise.leftCols(cfg.k1) /=
        std::pow(double(cfg.p1), cfg.delta2 / 2.0);
  g.front_noise.rightCols(v1 - cfg.k1) /= double(cfg.p1);

  Eigen::MatrixXd back =
      detail::draw_uniform_matrix(rng, cfg.p2, cfg.p2, -2.0, 2.0);
  g.back_load =
      back.leftCols(cfg.r2) / std::pow(double(cfg.p2), cfg.delta1 / 2.0);
  g.back_noise = back.rightCols(v2);
  if (cfg.k2 > 0)
    g.back_noise.leftCols(cfg.k2) /= std::pow(double(cfg.p2), cfg.delta2 / 2.0);
  g.back_noise.rightCols(v2 - cfg.k2) /= double(cfg.p2);

  g.phi = Eigen::VectorXd(cfg.r1);
  for (int i = 0; i < cfg.r1; ++i) g.phi(i) = rng.uniform(0.5, 0.9);
  g.psi = Eigen::VectorXd(cfg.r2);
  for (int j = 0; j < cfg.r2; ++j) g.psi(j) = rng.uniform(0.5, 0.9);
  return g;
}

/// Generate a series from a drawn model:
///   Y_t = A F_t B' + C Z21_t B' + A Z12_t D' + C Z22_t D'
/// with (A, C, B, D) the front/back loading blocks, F following the
/// two-sided diagonal AR(1) recursion F_t = Phi F_{t-1} Psi' + N_t warmed up
/// from zero, and all innovations standard normal. Also records the factor
/// series and common component in `truth` (and the noise components in
/// `parts` when supplied).
inline MatrixSeries gen_series(GroundTruth& truth, const SimConfig& cfg,
                               Rng& rng, GenParts* parts = nullptr) {
  cfg.validate();
  const int v1 = cfg.p1 - cfg.r1, v2 = cfg.p2 - cfg.r2;
  // |phi_i psi_j| < 1 by construction, so the recursion is stable
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(cfg.r1, cfg.r2);
  for (int t = 0; t < cfg.burn_in; ++t) {
    f = truth.phi.asDiagonal() * f * truth.psi.asDiagonal() +
        detail::draw_normal_matrix(rng, cfg.r1, cfg.r2);
  }

  truth.factors.assign(static_cast<std::size_t>(cfg.n), Eigen::MatrixXd());
  truth.common.assign(static_cast<std::size_t>(cfg.n), Eigen::MatrixXd());
  if (parts) {
    parts->row_noise.assign(static_cast<std::size_t>(cfg.n),
                            Eigen::MatrixXd());
    parts->col_noise.assign(static_cast<std::size_t>(cfg.n),
                            Eigen::MatrixXd());
    parts->full_noise.assign(static_cast<std::size_t>(cfg.n),
                             Eigen::MatrixXd());
  }

  Eigen::MatrixXd flat(cfg.p1 * cfg.p2, cfg.n);
  for (int t = 0; t < cfg.n; ++t) {
    f = truth.phi.asDiagonal() * f * truth.psi.asDiagonal() +
        detail::draw_normal_matrix(rng, cfg.r1, cfg.r2);
    const Eigen::MatrixXd z21 = detail::draw_normal_matrix(rng, v1, cfg.r2);
    const Eigen::MatrixXd z12 = detail::draw_normal_matrix(rng, cfg.r1, v2);
    const Eigen::MatrixXd z22 = detail::draw_normal_matrix(rng, v1, v2);

    const auto idx = static_cast<std::size_t>(t);
    truth.factors[idx] = f;
    truth.common[idx] = truth.front_load * f * truth.back_load.transpose();
    Eigen::MatrixXd row_part =
        truth.front_noise * z21 * truth.back_load.transpose();
    Eigen::MatrixXd col_part =
        truth.front_load * z12 * truth.back_noise.transpose();
    Eigen::MatrixXd full_part =
        truth.front_noise * z22 * truth.back_noise.transpose();

    Eigen::Map<Eigen::MatrixXd> obs(flat.col(t).data(), cfg.p1, cfg.p2);
    obs = truth.common[idx] + row_part + col_part + full_part;
    if (parts) {
      parts->row_noise[idx] = std::move(row_part);
      parts->col_noise[idx] = std::move(col_part);
      parts->full_noise[idx] = std::move(full_part);
    }
  }
  return MatrixSeries::from_flat(std::move(flat), cfg.p1, cfg.p2, false);
}

/// Per-method aggregate over the replications of one scenario.
struct McMethodRow {
  std::string method;
  int reps = 0;
  int failures = 0;
  double prob_correct = 0.0;
  int modal_r1 = 0, modal_r2 = 0;
  double dbar_front_mean = 0.0, dbar_front_sd = 0.0;
  double dbar_back_mean = 0.0, dbar_back_sd = 0.0;
  double factor_err_mean = 0.0, factor_err_sd = 0.0;
};

struct McCellResult {
  SimConfig config;
  McMethodRow gt;
  McMethodRow wlc;
};

struct McReport {
  std::uint64_t master_seed = 0;
  std::vector<McCellResult> cells;
};

namespace detail {

struct RepMetrics {
  bool ok = false;
  bool correct = false;
  int r1 = -1, r2 = -1;
  double dbar_front = 0.0, dbar_back = 0.0, factor_err = 0.0;
};

struct RepOutcome {
  RepMetrics gt;
  RepMetrics wlc;
};

inline void summarize(const std::vector<RepOutcome>& outcomes,
                      bool use_gt_member, McMethodRow& row) {
  std::vector<double> dfront, dback, ferr;
  std::map<std::pair<int, int>, int> order_counts;
  int correct = 0, ok = 0;
  for (const auto& o : outcomes) {
    const RepMetrics& m = use_gt_member ? o.gt : o.wlc;
    if (!m.ok) {
      ++row.failures;
      continue;
    }
    ++ok;
    if (m.correct) ++correct;
    ++order_counts[{m.r1, m.r2}];
    dfront.push_back(m.dbar_front);
    dback.push_back(m.dbar_back);
    ferr.push_back(m.factor_err);
  }
  row.reps = static_cast<int>(outcomes.size());
  row.prob_correct = ok > 0 ? double(correct) / double(ok) : 0.0;
  int best = -1;
  for (const auto& [orders, count] : order_counts)
    if (count > best) {
      best = count;
      row.modal_r1 = orders.first;
      row.modal_r2 = orders.second;
    }
  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) {
      mean = sd = 0.0;
      return;
    }
    double s = 0.0;
    for (double x : v) s += x;
    mean = s / double(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
  };
  mean_sd(dfront, row.dbar_front_mean, row.dbar_front_sd);
  mean_sd(dback, row.dbar_back_mean, row.dbar_back_sd);
  mean_sd(ferr, row.factor_err_mean, row.factor_err_sd);
}

}  // namespace detail

/// Run the benchmark grid: for every scenario and replication, draw a fresh
/// model, generate a series, and evaluate both the projected-PCA pipeline
/// ("gt") and the ratio/projection baseline ("wlc"). Replication seeds are
/// derived from (master_seed, cell index, rep index), so results do not
/// depend on thread count or scheduling.
inline McReport monte_carlo(const std::vector<SimConfig>& grid,
                            const FitConfig& fit_cfg, int threads,
                            std::uint64_t master_seed) {
  for (const auto& cell : grid) cell.validate();
  fit_cfg.validate();

  McReport report;
  report.master_seed = master_seed;
  report.cells.resize(grid.size());

  // Flatten (cell, rep) pairs for balanced scheduling.
  std::vector<std::pair<std::size_t, int>> jobs;
  std::vector<std::vector<detail::RepOutcome>> outcomes(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    outcomes[c].resize(static_cast<std::size_t>(grid[c].reps));
    for (int r = 0; r < grid[c].reps; ++r) jobs.emplace_back(c, r);
  }

  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const auto [c, r] = jobs[j];
    const SimConfig& cfg = grid[c];
    Rng rng(derive_seed(master_seed, c, static_cast<std::uint64_t>(r)));
    GroundTruth truth = gen_model(cfg, rng);
    const MatrixSeries series = gen_series(truth, cfg, rng);
    detail::RepOutcome& out = outcomes[c][static_cast<std::size_t>(r)];

    try {
      const FactorFit f = fit(series, fit_cfg);
      out.gt.ok = true;
      out.gt.r1 = f.r1;
      out.gt.r2 = f.r2;
      out.gt.correct = (f.r1 == cfg.r1 && f.r2 == cfg.r2);
      out.gt.dbar_front = subspace_dist_general(f.loadings.front,
                                                truth.front_load);
      out.gt.dbar_back = subspace_dist_general(f.loadings.back,
                                               truth.back_load);
      out.gt.factor_err = factor_error(f.common, truth.common);
    } catch (const std::exception&) {
      out.gt.ok = false;
    }

    try {
      const auto orders = wlc_orders(series, fit_cfg.k0);
      const FactorFit f = wlc_fit(series, fit_cfg.k0, orders);
      out.wlc.ok = true;
      out.wlc.r1 = orders.first;
      out.wlc.r2 = orders.second;
      out.wlc.correct = (orders.first == cfg.r1 && orders.second == cfg.r2);
      out.wlc.dbar_front = subspace_dist_general(f.loadings.front,
                                                 truth.front_load);
      out.wlc.dbar_back = subspace_dist_general(f.loadings.back,
                                                truth.back_load);
      out.wlc.factor_err = factor_error(f.common, truth.common);
    } catch (const std::exception&) {
      out.wlc.ok = false;
    }
  });

  for (std::size_t c = 0; c < grid.size(); ++c) {
    report.cells[c].config = grid[c];
    report.cells[c].gt.method = "gt";
    report.cells[c].wlc.method = "wlc";
    detail::summarize(outcomes[c], true, report.cells[c].gt);
    detail::summarize(outcomes[c], false, report.cells[c].wlc);
  }
  return report;
}

}  // namespace ttfm
