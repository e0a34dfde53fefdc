#include <catch2/catch_amalgamated.hpp>

#include "ttfm/rng.hpp"
#include "ttfm/series.hpp"

using ttfm::MatrixSeries;

namespace {

MatrixSeries random_series(ttfm::Rng& rng, Eigen::Index n, Eigen::Index p1,
                           Eigen::Index p2) {
  Eigen::MatrixXd flat(p1 * p2, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < p1 * p2; ++r) flat(r, c) = rng.normal();
  return MatrixSeries::from_flat(std::move(flat), p1, p2);
}

}  // namespace

TEST_CASE("center removes a constant series entirely") {
  MatrixSeries s(5, 2, 3);
  for (Eigen::Index t = 0; t < 5; ++t)
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) s.cell(t, i, j) = 5.0;
  const MatrixSeries c = ttfm::center(s);
  REQUIRE(c.centered());
  REQUIRE(c.flat().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("center two-point scalar series") {
  MatrixSeries s(2, 1, 1);
  s.cell(0, 0, 0) = 1.0;
  s.cell(1, 0, 0) = 3.0;
  const MatrixSeries c = ttfm::center(s);
  REQUIRE(c(0, 0, 0) == Catch::Approx(-1.0));
  REQUIRE(c(1, 0, 0) == Catch::Approx(1.0));
}

TEST_CASE("center is idempotent") {
  ttfm::Rng rng(7);
  const MatrixSeries s = random_series(rng, 20, 3, 2);
  const MatrixSeries once = ttfm::center(s);
  const MatrixSeries twice = ttfm::center(once);
  REQUIRE((once.flat() - twice.flat()).cwiseAbs().maxCoeff() <= 1e-12);
  // re-centering an already zero-mean unflagged series changes nothing
  const MatrixSeries unflagged =
      MatrixSeries::from_flat(once.flat(), 3, 2, false);
  const MatrixSeries again = ttfm::center(unflagged);
  REQUIRE((once.flat() - again.flat()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("centering commutes with transposition") {
  ttfm::Rng rng(9);
  const MatrixSeries s = random_series(rng, 15, 4, 3);
  const auto a = ttfm::center(ttfm::transpose_series(s));
  const auto b = ttfm::transpose_series(ttfm::center(s));
  REQUIRE((a.flat() - b.flat()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("transpose swaps dimensions and entries") {
  MatrixSeries s(2, 1, 3);
  for (Eigen::Index t = 0; t < 2; ++t)
    for (Eigen::Index j = 0; j < 3; ++j)
      s.cell(t, 0, j) = double(10 * t + j);
  const MatrixSeries tr = ttfm::transpose_series(s);
  REQUIRE(tr.rows() == 3);
  REQUIRE(tr.cols() == 1);
  for (Eigen::Index t = 0; t < 2; ++t)
    for (Eigen::Index j = 0; j < 3; ++j)
      REQUIRE(tr(t, j, 0) == s(t, 0, j));
}

TEST_CASE("transpose is an involution and fixes symmetric observations") {
  ttfm::Rng rng(11);
  const MatrixSeries s = random_series(rng, 8, 4, 2);
  const MatrixSeries back = ttfm::transpose_series(ttfm::transpose_series(s));
  REQUIRE((back.flat() - s.flat()).cwiseAbs().maxCoeff() == 0.0);

  MatrixSeries sym(5, 3, 3);
  for (Eigen::Index t = 0; t < 5; ++t)
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = rng.normal();
        sym.cell(t, i, j) = v;
        sym.cell(t, j, i) = v;
      }
  const MatrixSeries tsym = ttfm::transpose_series(sym);
  REQUIRE((tsym.flat() - sym.flat()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vectorize is column-major and invertible") {
  MatrixSeries s(2, 2, 2);
  // first observation [[1,3],[2,4]]
  s.cell(0, 0, 0) = 1;
  s.cell(0, 1, 0) = 2;
  s.cell(0, 0, 1) = 3;
  s.cell(0, 1, 1) = 4;
  const Eigen::MatrixXd v = ttfm::vectorize(s);
  REQUIRE(v.rows() == 2);
  REQUIRE(v.cols() == 4);
  REQUIRE(v(0, 0) == 1);
  REQUIRE(v(0, 1) == 2);
  REQUIRE(v(0, 2) == 3);
  REQUIRE(v(0, 3) == 4);

  // degenerate single-column reshape
  MatrixSeries col(3, 2, 1);
  col.cell(0, 0, 0) = 1;
  col.cell(0, 1, 0) = 2;
  REQUIRE(ttfm::vectorize(col)(0, 0) == 1);
  REQUIRE(ttfm::vectorize(col)(0, 1) == 2);
}

TEST_CASE("vectorize round trip over random shapes") {
  ttfm::Rng rng(13);
  for (int rep = 0; rep < 30; ++rep) {
    const auto p1 = 1 + static_cast<Eigen::Index>(rng.next_raw() % 8);
    const auto p2 = 1 + static_cast<Eigen::Index>(rng.next_raw() % 8);
    const MatrixSeries s = random_series(rng, 6, p1, p2);
    const MatrixSeries back = ttfm::reshape(ttfm::vectorize(s), p1, p2);
    REQUIRE((back.flat() - s.flat()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("series construction validates shape and values") {
  REQUIRE_THROWS_AS(MatrixSeries(1, 2, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(MatrixSeries(3, 0, 2), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(4, 3);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(MatrixSeries::from_flat(bad, 2, 2),
                    std::invalid_argument);
}
