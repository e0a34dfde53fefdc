#include <catch2/catch_amalgamated.hpp>

#include "ttfm/linalg.hpp"
#include "ttfm/rng.hpp"

using Catch::Approx;

namespace {

Eigen::MatrixXd random_symmetric(ttfm::Rng& rng, Eigen::Index p) {
  Eigen::MatrixXd a(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = rng.normal();
  return 0.5 * (a + a.transpose()).eval();
}

}  // namespace

TEST_CASE("sym_eigen on identity and diagonal input") {
  const auto d1 = ttfm::sym_eigen(Eigen::MatrixXd::Identity(3, 3));
  REQUIRE(d1.values.isApprox(Eigen::Vector3d(1, 1, 1)));

  Eigen::MatrixXd diag = Eigen::Vector3d(3, 1, 2).asDiagonal();
  const auto d2 = ttfm::sym_eigen(diag);
  REQUIRE(d2.values(0) == Approx(3.0));
  REQUIRE(d2.values(1) == Approx(2.0));
  REQUIRE(d2.values(2) == Approx(1.0));
  // vectors are signed unit basis columns in eigenvalue order
  REQUIRE(d2.vectors.col(0).isApprox(Eigen::Vector3d(1, 0, 0)));
  REQUIRE(d2.vectors.col(1).isApprox(Eigen::Vector3d(0, 0, 1)));
  REQUIRE(d2.vectors.col(2).isApprox(Eigen::Vector3d(0, 1, 0)));
}

TEST_CASE("sym_eigen closed-form 2x2") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const auto d = ttfm::sym_eigen(a);
  REQUIRE(d.values(0) == Approx(3.0));
  REQUIRE(d.values(1) == Approx(1.0));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  REQUIRE(d.vectors(0, 0) == Approx(inv_sqrt2));
  REQUIRE(d.vectors(1, 0) == Approx(inv_sqrt2));
}

TEST_CASE("sym_eigen rejects asymmetric input") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 0, 1;
  REQUIRE_THROWS_AS(ttfm::sym_eigen(a), std::invalid_argument);
}

TEST_CASE("reconstruction property") {
  ttfm::Rng rng(5);
  for (Eigen::Index p : {2, 5, 17, 32}) {
    const Eigen::MatrixXd a = random_symmetric(rng, p);
    const auto d = ttfm::sym_eigen(a);
    const Eigen::MatrixXd rebuilt =
        d.vectors * d.values.asDiagonal() * d.vectors.transpose();
    REQUIRE((rebuilt - a).norm() <= 1e-6 * std::max(1.0, a.norm()));
    Eigen::MatrixXd gram = d.vectors.transpose() * d.vectors;
    gram.diagonal().array() -= 1.0;
    REQUIRE(gram.norm() <= 1e-8);
  }
}

TEST_CASE("repeated decompositions are bit-identical") {
  ttfm::Rng rng(21);
  const Eigen::MatrixXd a = random_symmetric(rng, 12);
  const auto d1 = ttfm::sym_eigen(a);
  const auto d2 = ttfm::sym_eigen(a);
  REQUIRE((d1.values - d2.values).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((d1.vectors - d2.vectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sign convention neutralizes solver sign choices") {
  ttfm::Rng rng(33);
  Eigen::VectorXd u(4);
  for (int i = 0; i < 4; ++i) u(i) = rng.normal();
  u.normalize();
  const Eigen::MatrixXd a = u * u.transpose();
  const Eigen::MatrixXd v1 = ttfm::top_eigenvectors(a, 1);
  const Eigen::MatrixXd v2 = ttfm::top_eigenvectors((-u) * (-u).transpose(), 1);
  REQUIRE((v1 - v2).cwiseAbs().maxCoeff() <= 1e-12);
  // convention: peak-magnitude entry is positive
  Eigen::Index arg = 0;
  v1.col(0).cwiseAbs().maxCoeff(&arg);
  REQUIRE(v1(arg, 0) > 0.0);
}

TEST_CASE("top and bottom eigenvector slices") {
  Eigen::MatrixXd diag = Eigen::Vector3d(3, 2, 1).asDiagonal();
  REQUIRE(ttfm::top_eigenvectors(diag, 1).isApprox(
      Eigen::Vector3d(1, 0, 0)));
  const Eigen::MatrixXd bottom = ttfm::bottom_eigenvectors(diag, 2);
  REQUIRE(bottom.col(0).isApprox(Eigen::Vector3d(0, 1, 0)));
  REQUIRE(bottom.col(1).isApprox(Eigen::Vector3d(0, 0, 1)));
  REQUIRE_THROWS_AS(ttfm::top_eigenvectors(diag, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(ttfm::bottom_eigenvectors(diag, 0), std::invalid_argument);
}

TEST_CASE("eigen_ratios") {
  Eigen::VectorXd v(4);
  v << 10, 5, 0.5, 0.4;
  const auto r = ttfm::eigen_ratios(v, 3);
  REQUIRE(r.size() == 3);
  REQUIRE(r[0] == Approx(0.5));
  REQUIRE(r[1] == Approx(0.1));
  REQUIRE(r[2] == Approx(0.8));

  Eigen::VectorXd flat(3);
  flat << 2, 2, 2;
  const auto rf = ttfm::eigen_ratios(flat, 2);
  REQUIRE(rf[0] == Approx(1.0));
  REQUIRE(rf[1] == Approx(1.0));

  Eigen::VectorXd two(2);
  two << 4, 2;
  REQUIRE(ttfm::eigen_ratios(two, 1)[0] == Approx(0.5));

  Eigen::VectorXd zero(3);
  zero << 1, 0, 0;
  REQUIRE_THROWS_AS(ttfm::eigen_ratios(zero, 2), std::invalid_argument);
}
