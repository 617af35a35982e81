#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mvstdm/basis.hpp"
#include "mvstdm/errors.hpp"
#include "mvstdm/model.hpp"
#include "mvstdm/random.hpp"

using namespace mvstdm;

namespace {

TransitionBlocks random_blocks(int m, int k, Rng& rng) {
  TransitionBlocks b(m, k);
  for (double& c : b.coefficients()) c = rng.normal();
  return b;
}

}  // namespace

TEST_CASE("transition blocks use the flat (i*M + j)*K + k layout") {
  TransitionBlocks b(2, 3);
  b.at(1, 0, 2) = 7.0;
  CHECK(b.coefficients()[(1 * 2 + 0) * 3 + 2] == 7.0);
  CHECK(b.block(1, 0)[2] == 7.0);
  const TransitionBlocks id = TransitionBlocks::identity(2, 3);
  CHECK(id.block(0, 0).sum() == 3.0);
  CHECK(id.block(0, 1).sum() == 0.0);
  CHECK(id.block(1, 1).sum() == 3.0);
}

TEST_CASE("assemble_transition builds diagonal blocks and extract inverts it") {
  Rng rng(3);
  const TransitionBlocks b = random_blocks(3, 4, rng);
  const SparseMatrix a = assemble_transition(b);
  const Eigen::MatrixXd d = a;
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) {
      const int i = r / 4, kr = r % 4, j = c / 4, kc = c % 4;
      CHECK(d(r, c) == (kr == kc ? b.at(i, j, kr) : 0.0));
    }
  }
  CHECK(extract_transition(a, 3, 4) == b);
  CHECK(Eigen::MatrixXd(assemble_transition(TransitionBlocks::identity(3, 4))).isIdentity());
}

TEST_CASE("projection of transition blocks onto locations") {
  const BasisGrid grid = build_icosahedral_grid(0);
  const SparseMatrix phi = build_basis_matrix({grid, 2.5, regular_latlon_points(6, 12)});
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(12);
  CHECK((project_transition_block(phi, ones).array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(project_transition_block(phi, Eigen::VectorXd::Zero(12)).norm() == 0.0);
  CHECK((project_transition_block(phi, 0.3 * ones).array() - 0.3).abs().maxCoeff() < 1e-14);

  Rng rng(8);
  const Eigen::VectorXd coef = rng.normal_vector(12);
  const Eigen::VectorXd raw = project_transition_raw(phi, coef);
  const Eigen::VectorXd avg = project_transition_block(phi, coef);
  const Eigen::MatrixXd dense = phi;
  for (int s = 0; s < dense.rows(); ++s) {
    CHECK(raw[s] == doctest::Approx(dense.row(s).dot(coef)));
    CHECK(avg[s] == doctest::Approx(dense.row(s).dot(coef) / dense.row(s).sum()));
    // a convex combination of the coefficients
    CHECK(avg[s] <= coef.maxCoeff() + 1e-12);
    CHECK(avg[s] >= coef.minCoeff() - 1e-12);
  }

  SparseMatrix empty_row(2, 12);
  empty_row.insert(0, 0) = 1.0;
  CHECK_THROWS_AS(project_transition_block(empty_row, coef), NumericalError);
}

TEST_CASE("log likelihood matches direct Gaussian density") {
  const BasisGrid grid = build_icosahedral_grid(0);
  const auto locs = regular_latlon_points(3, 6);
  const SparseMatrix phi = build_basis_matrix({grid, 2.5, locs});
  Rng rng(11);
  ObservationTensor obs(2, 2, locs);
  for (double& v : obs.values) v = rng.normal();
  obs.mask[obs.index(1, 0, 3)] = 0;
  StateSequence st;
  st.alphas = Eigen::MatrixXd::Random(24, 3);
  Eigen::MatrixXd sigma2(2, 2);
  sigma2 << 0.5, 1.0, 2.0, 3.0;
  double expected = 0.0;
  const Eigen::MatrixXd p = phi;
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 2; ++i)
      for (int s = 0; s < 18; ++s) {
        if (!obs.observed(t, i, s)) continue;
        const double mu = p.row(s).dot(st.alphas.col(t + 1).segment(i * 12, 12));
        const double v = sigma2(t, i);
        expected += std::log(std::exp(-(obs.value(t, i, s) - mu) * (obs.value(t, i, s) - mu) / (2 * v)) /
                             std::sqrt(2 * std::numbers::pi * v));
      }
  CHECK(log_likelihood(obs, st, phi, sigma2) == doctest::Approx(expected).epsilon(1e-12));
  sigma2(0, 0) = 0.0;
  CHECK_THROWS_AS(log_likelihood(obs, st, phi, sigma2), DomainError);
}

TEST_CASE("transition JSON round trip is exact") {
  Rng rng(21);
  const TransitionBlocks b = random_blocks(3, 5, rng);
  CHECK(transition_from_json(transition_to_json(b)) == b);
  CHECK_THROWS(transition_from_json("{\"M\":2,\"K\":1,\"blocks\":[[[1]]]}"));
}

TEST_CASE("time labels") {
  const TimeLabel t = TimeLabel::parse("1991-08");
  CHECK(t.year == 1991);
  CHECK(t.month == 8);
  CHECK(t.str() == "1991-08");
  CHECK(t.plus_months(5).str() == "1992-01");
  CHECK(t.plus_months(-8).str() == "1990-12");
  CHECK(TimeLabel::parse("1994-07") > t);
  CHECK_THROWS_AS(TimeLabel::parse("1991-13"), ValidationError);
  CHECK_THROWS_AS(TimeLabel::parse("1991/08"), ValidationError);
  CHECK_THROWS_AS(TimeLabel::parse("1991-08x"), ValidationError);
}

TEST_CASE("observation tensor layout and variable selection") {
  ObservationTensor obs(3, 2, regular_latlon_points(2, 2));
  CHECK(obs.values.size() == 24);
  CHECK(obs.index(2, 1, 3) == 23);
  CHECK(obs.observed_count() == 24);
  obs.values[obs.index(1, 1, 2)] = 4.5;
  obs.mask[obs.index(0, 1, 0)] = 0;
  const ObservationTensor one = obs.select_variable(1);
  CHECK(one.m == 1);
  CHECK(one.variables == std::vector<std::string>{"var2"});
  CHECK(one.value(1, 0, 2) == 4.5);
  CHECK_FALSE(one.observed(0, 0, 0));
  CHECK(one.observed_count() == 11);
  CHECK_THROWS_AS(obs.select_variable(2), ValidationError);
  CHECK_THROWS_AS(ObservationTensor(0, 1, regular_latlon_points(2, 2)), ValidationError);
}

TEST_CASE("prior validation") {
  Priors p = Priors::uniform(6);
  CHECK_NOTHROW(p.validate(6));
  CHECK(p.lambda == 0.25);
  CHECK_THROWS_AS(p.validate(5), ValidationError);
  p.lambda = 0.0;
  CHECK_THROWS_AS(p.validate(6), ValidationError);
  Priors q = Priors::uniform(6, 0.0, -1.0);
  CHECK_THROWS_AS(q.validate(6), ValidationError);
}
