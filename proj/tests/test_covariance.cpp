#include <catch2/catch_amalgamated.hpp>

#include "ttfm/covariance.hpp"
#include "ttfm/linalg.hpp"
#include "ttfm/metrics.hpp"
#include "ttfm/rng.hpp"
#include "ttfm/series.hpp"

using Catch::Approx;
using ttfm::MatrixSeries;

namespace {

MatrixSeries random_centered(ttfm::Rng& rng, Eigen::Index n, Eigen::Index p1,
                             Eigen::Index p2) {
  Eigen::MatrixXd flat(p1 * p2, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < p1 * p2; ++r) flat(r, c) = rng.normal();
  return ttfm::center(MatrixSeries::from_flat(std::move(flat), p1, p2));
}

// Definitional oracles: straight loops over the summation formulas, no reuse
// of the library's blocked implementations.

Eigen::MatrixXd oracle_lagged_cov(const MatrixSeries& s, Eigen::Index i,
                                  Eigen::Index j, Eigen::Index k) {
  const Eigen::Index p1 = s.rows(), n = s.n();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p1, p1);
  for (Eigen::Index t = k; t < n; ++t)
    for (Eigen::Index a = 0; a < p1; ++a)
      for (Eigen::Index b = 0; b < p1; ++b)
        acc(a, b) += s(t, a, i) * s(t - k, b, j);
  return acc / double(n);
}

Eigen::MatrixXd oracle_lag_aggregate(const MatrixSeries& s, int k0) {
  const Eigen::Index p1 = s.rows(), p2 = s.cols();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p1, p1);
  for (int k = 1; k <= k0; ++k)
    for (Eigen::Index i = 0; i < p2; ++i)
      for (Eigen::Index j = 0; j < p2; ++j) {
        const Eigen::MatrixXd c = oracle_lagged_cov(s, i, j, k);
        acc += c * c.transpose();
      }
  return acc;
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Noise aggregate straight from the definition, materializing the Kronecker
// factor.
Eigen::MatrixXd oracle_noise_aggregate(const MatrixSeries& s,
                                       const Eigen::MatrixXd& row_comp,
                                       const Eigen::MatrixXd& col_comp) {
  const Eigen::Index p1 = s.rows(), p2 = s.cols(), n = s.n();
  const Eigen::MatrixXd kron = kronecker(col_comp, row_comp);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p1, p1);
  for (Eigen::Index i = 0; i < p2; ++i) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p1, p1 * p2);
    for (Eigen::Index t = 0; t < n; ++t)
      omega += s.matrix(t).col(i) *
               Eigen::Map<const Eigen::VectorXd>(s.matrix(t).data(), p1 * p2)
                   .transpose();
    omega /= double(n);
    const Eigen::MatrixXd w = omega * kron;
    acc += w * w.transpose();
  }
  return acc;
}

Eigen::MatrixXd random_orthonormal(ttfm::Rng& rng, Eigen::Index p,
                                   Eigen::Index cols) {
  Eigen::MatrixXd a(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = rng.normal();
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a)
      .householderQ() *
      Eigen::MatrixXd::Identity(p, cols);
}

}  // namespace

TEST_CASE("lagged cross covariance hand example") {
  // scalar series {1, -1, 0}, already mean zero
  MatrixSeries s(3, 1, 1);
  s.cell(0, 0, 0) = 1;
  s.cell(1, 0, 0) = -1;
  s.cell(2, 0, 0) = 0;
  const MatrixSeries c = ttfm::center(s);
  const Eigen::MatrixXd cov = ttfm::lagged_cross_cov(c, 0, 0, 1);
  // (1/3) * ((-1)(1) + (0)(-1)), divisor n not n-k
  REQUIRE(cov(0, 0) == Approx(-1.0 / 3.0));
}

TEST_CASE("lagged cross covariance matches the oracle") {
  ttfm::Rng rng(41);
  const MatrixSeries s = random_centered(rng, 23, 3, 4);
  for (Eigen::Index k : {1, 2, 5})
    for (Eigen::Index i : {0, 2})
      for (Eigen::Index j : {1, 3}) {
        const Eigen::MatrixXd got = ttfm::lagged_cross_cov(s, i, j, k);
        REQUIRE((got - oracle_lagged_cov(s, i, j, k)).cwiseAbs().maxCoeff() <=
                1e-12);
      }
}

TEST_CASE("lagged cross covariance argument checks") {
  ttfm::Rng rng(43);
  const MatrixSeries s = random_centered(rng, 10, 2, 2);
  REQUIRE_THROWS_AS(ttfm::lagged_cross_cov(s, 0, 0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(ttfm::lagged_cross_cov(s, 0, 0, 10), std::invalid_argument);
  REQUIRE_THROWS_AS(ttfm::lagged_cross_cov(s, 0, 5, 1), std::invalid_argument);
  MatrixSeries raw(5, 2, 2);
  raw.cell(0, 0, 0) = 1.0;
  REQUIRE_THROWS_AS(ttfm::lagged_cross_cov(raw, 0, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("column/vec covariance on zero and hand inputs") {
  MatrixSeries z(4, 2, 2);
  REQUIRE(ttfm::col_vec_cov(ttfm::center(z), 1).cwiseAbs().maxCoeff() == 0.0);

  // n=2, p1=1, p2=2 with observations (1, 2) and (-1, -2)
  MatrixSeries s(2, 1, 2);
  s.cell(0, 0, 0) = 1;
  s.cell(0, 0, 1) = 2;
  s.cell(1, 0, 0) = -1;
  s.cell(1, 0, 1) = -2;
  const MatrixSeries c = ttfm::center(s);
  const Eigen::MatrixXd omega = ttfm::col_vec_cov(c, 0);
  REQUIRE(omega.rows() == 1);
  REQUIRE(omega.cols() == 2);
  REQUIRE(omega(0, 0) == Approx(1.0));
  REQUIRE(omega(0, 1) == Approx(2.0));
}

TEST_CASE("single-column series: col_vec_cov equals the lag-0 Gram matrix") {
  ttfm::Rng rng(47);
  const MatrixSeries s = random_centered(rng, 30, 4, 1);
  const Eigen::MatrixXd omega = ttfm::col_vec_cov(s, 0);
  const Eigen::MatrixXd gram =
      (s.column_series(0) * s.column_series(0).transpose()) / 30.0;
  REQUIRE((omega - gram).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("lag aggregate hand example and oracle") {
  MatrixSeries s(3, 1, 1);
  s.cell(0, 0, 0) = 1;
  s.cell(1, 0, 0) = -1;
  s.cell(2, 0, 0) = 0;
  const MatrixSeries c = ttfm::center(s);
  const auto agg = ttfm::lag_cov_aggregate(c, 1);
  REQUIRE(agg.matrix(0, 0) == Approx(1.0 / 9.0));

  ttfm::Rng rng(53);
  const MatrixSeries r = random_centered(rng, 17, 3, 4);
  for (int k0 : {1, 3}) {
    const auto got = ttfm::lag_cov_aggregate(r, k0);
    REQUIRE((got.matrix - oracle_lag_aggregate(r, k0)).cwiseAbs().maxCoeff() <=
            1e-10);
    REQUIRE((got.matrix - got.matrix.transpose()).cwiseAbs().maxCoeff() <=
            1e-10);
  }
}

TEST_CASE("lag aggregate of white noise shrinks at rate 1/n") {
  ttfm::Rng rng(59);
  const MatrixSeries s = random_centered(rng, 10000, 3, 3);
  const auto agg = ttfm::lag_cov_aggregate(s, 2);
  REQUIRE(agg.matrix.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("lag aggregate rotation equivariance and scaling") {
  ttfm::Rng rng(61);
  const Eigen::Index p1 = 4, p2 = 5;
  const MatrixSeries s = random_centered(rng, 40, p1, p2);
  const Eigen::MatrixXd u = random_orthonormal(rng, p1, p1);
  const Eigen::MatrixXd v = random_orthonormal(rng, p2, p2);

  Eigen::MatrixXd flat(p1 * p2, s.n());
  for (Eigen::Index t = 0; t < s.n(); ++t) {
    Eigen::Map<Eigen::MatrixXd> obs(flat.col(t).data(), p1, p2);
    obs = u * s.matrix(t) * v.transpose();
  }
  const MatrixSeries rotated =
      MatrixSeries::from_flat(std::move(flat), p1, p2, true);

  const Eigen::MatrixXd base = ttfm::lag_cov_aggregate(s, 2).matrix;
  const Eigen::MatrixXd rot = ttfm::lag_cov_aggregate(rotated, 2).matrix;
  REQUIRE((rot - u * base * u.transpose()).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, base.norm()));

  const MatrixSeries scaled =
      MatrixSeries::from_flat(3.0 * s.flat(), p1, p2, true);
  const Eigen::MatrixXd sc = ttfm::lag_cov_aggregate(scaled, 2).matrix;
  REQUIRE((sc - 81.0 * base).cwiseAbs().maxCoeff() <= 1e-8 * base.norm());
}

TEST_CASE("back aggregate equals the aggregate of the transpose") {
  ttfm::Rng rng(67);
  const MatrixSeries s = random_centered(rng, 25, 3, 2);
  const auto back = ttfm::lag_cov_aggregate_back(s, 2);
  const auto direct = ttfm::lag_cov_aggregate(ttfm::transpose_series(s), 2);
  REQUIRE((back.matrix - direct.matrix).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((back.matrix - oracle_lag_aggregate(ttfm::transpose_series(s), 2))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);

  // symmetric observations make both sides equal
  MatrixSeries sym(12, 3, 3);
  for (Eigen::Index t = 0; t < 12; ++t)
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = rng.normal();
        sym.cell(t, i, j) = v;
        sym.cell(t, j, i) = v;
      }
  const MatrixSeries csym = ttfm::center(sym);
  REQUIRE((ttfm::lag_cov_aggregate(csym, 2).matrix -
           ttfm::lag_cov_aggregate_back(csym, 2).matrix)
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
}

TEST_CASE("noise aggregate matches the Kronecker oracle") {
  ttfm::Rng rng(71);
  const MatrixSeries s = random_centered(rng, 4, 3, 2);
  const Eigen::MatrixXd b = random_orthonormal(rng, 3, 2);
  const Eigen::MatrixXd q = random_orthonormal(rng, 2, 1);
  const auto got = ttfm::noise_cov_aggregate(s, b, q);
  REQUIRE((got.matrix - oracle_noise_aggregate(s, b, q)).cwiseAbs().maxCoeff() <=
          1e-12);

  // 2x2 with single unit columns
  const MatrixSeries s2 = random_centered(rng, 3, 2, 2);
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Identity(2, 1);
  Eigen::MatrixXd e2(2, 1);
  e2 << 0, 1;
  const auto got2 = ttfm::noise_cov_aggregate(s2, e1, e2);
  REQUIRE((got2.matrix - oracle_noise_aggregate(s2, e1, e2))
              .cwiseAbs()
              .maxCoeff() <= 1e-14);
}

TEST_CASE("noise aggregate: zero input and dimension checks") {
  MatrixSeries z(5, 3, 2);
  const MatrixSeries cz = ttfm::center(z);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(3, 1);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(2, 1);
  REQUIRE(ttfm::noise_cov_aggregate(cz, b, q).matrix.cwiseAbs().maxCoeff() ==
          0.0);
  REQUIRE_THROWS_AS(ttfm::noise_cov_aggregate(cz, q, b),
                    std::invalid_argument);
  Eigen::MatrixXd not_orth = Eigen::MatrixXd::Ones(3, 2);
  REQUIRE_THROWS_AS(ttfm::noise_cov_aggregate(cz, not_orth, q),
                    std::invalid_argument);
}

TEST_CASE("noise aggregate back: symmetry and oracle") {
  ttfm::Rng rng(73);
  const MatrixSeries s = random_centered(rng, 4, 3, 2);
  const Eigen::MatrixXd b = random_orthonormal(rng, 3, 1);
  const Eigen::MatrixXd q = random_orthonormal(rng, 2, 1);
  const auto got = ttfm::noise_cov_aggregate_back(s, b, q);
  const auto oracle =
      oracle_noise_aggregate(ttfm::transpose_series(s), q, b);
  REQUIRE((got.matrix - oracle).cwiseAbs().maxCoeff() <= 1e-12);

  // square symmetric observations with equal complements
  MatrixSeries sym(6, 3, 3);
  for (Eigen::Index t = 0; t < 6; ++t)
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = rng.normal();
        sym.cell(t, i, j) = v;
        sym.cell(t, j, i) = v;
      }
  const MatrixSeries csym = ttfm::center(sym);
  const Eigen::MatrixXd c = random_orthonormal(rng, 3, 1);
  REQUIRE((ttfm::noise_cov_aggregate(csym, c, c).matrix -
           ttfm::noise_cov_aggregate_back(csym, c, c).matrix)
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
}

TEST_CASE("aggregates are positive semidefinite") {
  ttfm::Rng rng(79);
  const MatrixSeries s = random_centered(rng, 20, 5, 4);
  const auto m = ttfm::lag_cov_aggregate(s, 2);
  const auto d = ttfm::sym_eigen(m.matrix);
  REQUIRE(d.values.minCoeff() >= -1e-8 * d.values.maxCoeff());
}
