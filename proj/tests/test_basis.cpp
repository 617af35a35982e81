#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "mvstdm/basis.hpp"
#include "mvstdm/errors.hpp"
#include "oracles.hpp"

using namespace mvstdm;

TEST_CASE("Wendland kernel values") {
  CHECK(wendland(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(wendland(1.0) == 0.0);
  CHECK(wendland(1.5) == 0.0);
  // (0.5)^6 (35/4 + 9 + 3) / 3 = 83 / 768
  CHECK(wendland(0.5) == doctest::Approx(83.0 / 768.0).epsilon(1e-14));
  CHECK(wendland(0.5) == doctest::Approx(0.108072916666667).epsilon(1e-12));
  CHECK_THROWS_AS(wendland(-0.1), DomainError);
  double prev = 1.0;
  for (int i = 1; i <= 100; ++i) {
    const double v = wendland(i / 100.0);
    CHECK(v <= prev);
    CHECK(v >= 0.0);
    prev = v;
  }
}

TEST_CASE("basis matrix matches a dense kernel oracle") {
  const BasisGrid grid = build_icosahedral_grid(1);
  BasisSpec spec{grid, 2.5, regular_latlon_points(12, 24)};
  const SparseMatrix phi = build_basis_matrix(spec);
  REQUIRE(phi.rows() == 288);
  REQUIRE(phi.cols() == 42);
  const double theta = 2.5 * mesh_spacing(grid);
  CHECK(basis_range(spec) == doctest::Approx(theta));
  const Eigen::MatrixXd dense = phi;
  for (int s = 0; s < 288; ++s) {
    bool any = false;
    for (int k = 0; k < 42; ++k) {
      const double expected = oracle::wendland(oracle::arc(spec.obs_locations[s], grid.centers[k]) / theta);
      CHECK(dense(s, k) == doctest::Approx(expected).epsilon(1e-12));
      any = any || expected > 0.0;
    }
    CHECK(any);
  }
  for (Eigen::Index c = 0; c < phi.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(phi, c); it; ++it) CHECK(it.value() > kStructuralZero);
}

TEST_CASE("SAR matrix diagonal and row pattern") {
  for (int level : {0, 1}) {
    const BasisGrid grid = build_icosahedral_grid(level);
    const SparseMatrix b = build_sar_matrix({grid, 2.0});
    const Eigen::MatrixXd d = b;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      CHECK(d(r, r) == doctest::Approx(5.0));
      const double w = -1.0 / static_cast<double>(grid.neighbor_count(i));
      int nnz = 0;
      for (std::size_t j = 0; j < grid.size(); ++j) {
        if (i == j) continue;
        const auto& adj = grid.adjacency[i];
        const bool nb = std::find(adj.begin(), adj.end(), j) != adj.end();
        CHECK(d(r, static_cast<Eigen::Index>(j)) == doctest::Approx(nb ? w : 0.0));
        nnz += d(r, static_cast<Eigen::Index>(j)) != 0.0;
      }
      CHECK(nnz == static_cast<int>(grid.neighbor_count(i)));
      CHECK(d.row(r).sum() == doctest::Approx(4.0));
    }
  }
  CHECK_THROWS_AS(build_sar_matrix({build_icosahedral_grid(0), 0.0}), DomainError);
  CHECK_THROWS_AS(build_sar_matrix({build_icosahedral_grid(0), -1.0}), DomainError);
}

TEST_CASE("B'B is symmetric positive definite (dense eigen oracle)") {
  for (int level : {0, 1}) {
    const BasisGrid grid = build_icosahedral_grid(level);
    for (double kappa : {0.1, 2.0}) {
      const SparseMatrix btb = sar_precision(build_sar_matrix({grid, kappa}));
      const Eigen::MatrixXd d = btb;
      CHECK((d - d.transpose()).norm() == doctest::Approx(0.0));
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
      if (level == 0) {
        // All level-0 nodes have five neighbors, so B is symmetric with B 1 = kappa^2 1.
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.rows());
        CHECK((d * ones - std::pow(kappa, 4) * ones).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("innovation precision is block diagonal B'B / tau2") {
  const BasisGrid grid = build_icosahedral_grid(0);
  const SparseMatrix b = build_sar_matrix({grid, 2.0});
  const std::vector<double> tau2{2.0, 4.0};
  const Eigen::MatrixXd q = build_innovation_precision(b, tau2);
  const Eigen::MatrixXd btb = Eigen::MatrixXd(b).transpose() * Eigen::MatrixXd(b);
  CHECK((q.topLeftCorner(12, 12) - btb / 2.0).norm() < 1e-12);
  CHECK((q.bottomRightCorner(12, 12) - btb / 4.0).norm() < 1e-12);
  CHECK(q.topRightCorner(12, 12).norm() == 0.0);
  CHECK_THROWS_AS(build_innovation_precision(b, std::vector<double>{1.0, 0.0}), DomainError);
}

TEST_CASE("expand_basis is the Kronecker product I_M (x) Phi") {
  const BasisGrid grid = build_icosahedral_grid(0);
  const SparseMatrix phi = build_basis_matrix({grid, 2.5, regular_latlon_points(3, 6)});
  const Eigen::MatrixXd big = expand_basis(phi, 3);
  const Eigen::MatrixXd p = phi;
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(3 * p.rows(), 3 * p.cols());
  for (int i = 0; i < 3; ++i) kron.block(i * p.rows(), i * p.cols(), p.rows(), p.cols()) = p;
  CHECK((big - kron).norm() == 0.0);
}
