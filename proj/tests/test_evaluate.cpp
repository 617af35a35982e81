#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mvstdm/errors.hpp"
#include "mvstdm/evaluate.hpp"
#include "mvstdm/random.hpp"

using namespace mvstdm;

namespace {

// Direct O(m^2) energy form of the empirical CRPS.
double crps_pairs(const std::vector<double>& x, double y) {
  const double m = static_cast<double>(x.size());
  double a = 0.0, b = 0.0;
  for (double xi : x) {
    a += std::abs(xi - y);
    for (double xj : x) b += std::abs(xi - xj);
  }
  return a / m - b / (2.0 * m * m);
}

ObservationTensor monthly_tensor(int t, int m, std::size_t nlat, std::size_t nlon, TimeLabel start) {
  ObservationTensor obs(t, m, regular_latlon_points(nlat, nlon));
  for (int i = 0; i < t; ++i) obs.time_labels[static_cast<std::size_t>(i)] = start.plus_months(i);
  return obs;
}

}  // namespace

TEST_CASE("type-7 quantiles") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::reverse(v.begin(), v.end());
  CHECK(quantile(v, 0.025) == doctest::Approx(3.475).epsilon(1e-14));
  CHECK(quantile(v, 0.975) == doctest::Approx(97.525).epsilon(1e-14));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 100.0);
  CHECK(quantile({4.0}, 0.3) == 4.0);
  CHECK_THROWS_AS(quantile({}, 0.5), ValidationError);

  const std::vector<double> c(50, 2.7);
  const Summary s = summarize(c);
  CHECK(s.mean == 2.7);
  CHECK(s.q025 == 2.7);
  CHECK(s.q975 == 2.7);
}

TEST_CASE("CRPS identities") {
  CHECK(crps_empirical(std::vector<double>{3.0}, 1.5) == 1.5);
  CHECK(crps_empirical(std::vector<double>{0.0, 1.0}, 0.0) == doctest::Approx(0.25));
  CHECK(crps_empirical(std::vector<double>(10, 2.0), 2.0) == 0.0);
  Rng rng(3);
  for (int m : {2, 3, 17, 400}) {
    std::vector<double> x;
    for (int i = 0; i < m; ++i) x.push_back(rng.normal());
    for (double y : {-2.0, 0.1, 5.0}) {
      CHECK(crps_empirical(x, y) == doctest::Approx(crps_pairs(x, y)).epsilon(1e-12));
    }
  }
  // large-sample limit for a standard normal at y = 0: 2 phi(0) - 1/sqrt(pi) = (sqrt 2 - 1) / sqrt pi
  std::vector<double> z;
  for (int i = 0; i < 100000; ++i) z.push_back(rng.normal());
  CHECK(crps_empirical(z, 0.0) == doctest::Approx((std::sqrt(2.0) - 1.0) / std::sqrt(M_PI)).epsilon(0.01));
  CHECK_THROWS_AS(crps_empirical(std::vector<double>{}, 0.0), ValidationError);
}

TEST_CASE("RMSPE and coverage") {
  CHECK(rmspe(std::vector<double>{3.0, 4.0}) == doctest::Approx(std::sqrt(12.5)));
  CHECK(rmspe(std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK_THROWS_AS(rmspe(std::vector<double>{}), ValidationError);
  const std::vector<Summary> iv{{0, -1, 1}, {0, -1, 1}, {0, 0, 2}, {0, 5, 6}};
  CHECK(coverage(iv, std::vector<double>{0.0, 1.0, -0.5, 5.5}) == 0.75);
}

TEST_CASE("split R-hat") {
  // halves {1,2} {3,4} {5,6} {7,8}: W = 0.5, B = 40/3, var+ = W/2 + B/2
  const double r = split_rhat({{1, 2, 3, 4}, {5, 6, 7, 8}});
  CHECK(r == doctest::Approx(std::sqrt((0.25 + 20.0 / 3.0) / 0.5)));
  Rng rng(8);
  std::vector<std::vector<double>> iid(4);
  for (auto& c : iid)
    for (int i = 0; i < 5000; ++i) c.push_back(rng.normal());
  CHECK(split_rhat(iid) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(split_rhat({{2, 2, 2, 2}}) == 1.0);
  CHECK_THROWS_AS(split_rhat({{1, 2, 3}}), ValidationError);
}

TEST_CASE("posterior summary pools chains") {
  PosteriorDraws d;
  d.m = 1;
  d.k = 1;
  d.t = 1;
  for (int c = 0; c < 2; ++c) {
    ChainDraws ch;
    for (int i = 0; i < 3; ++i) {
      ch.iterations.push_back(i);
      ch.tau2.push_back(Eigen::VectorXd::Constant(1, 3.0 * c + i));
      ch.sigma2.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0));
      ch.transition.push_back(TransitionBlocks::identity(1, 1));
    }
    d.chains.push_back(ch);
  }
  const PosteriorSummary s = posterior_summary(d);
  CHECK(s.tau2[0].mean == doctest::Approx(2.5));
  CHECK(s.tau2[0].q025 == doctest::Approx(0.125));
  CHECK(s.sigma2_at(0, 0).mean == 1.0);
  CHECK(s.transition.size() == 1);
  d.chains.resize(1);
  d.chains[0].iterations.resize(1);
  CHECK_THROWS_AS(posterior_summary(d), ValidationError);
}

TEST_CASE("spatial block holdout over the North America window") {
  ObservationTensor obs = monthly_tensor(72, 3, 24, 48, TimeLabel{1990, 1});
  const HoldoutSpec spec = HoldoutSpec::north_america(1);
  CHECK(spec.time_start->str() == "1991-08");
  CHECK(spec.time_end->str() == "1994-07");
  const HoldoutMask mask = build_holdout_mask(spec, obs);
  // 7.5 degree cells: 16 longitude centers in [-155, -35], 12 latitude centers in [-5, 80]
  CHECK(mask.locations.size() == 16 * 12);
  CHECK(mask.count == 16 * 12 * 36);
  std::size_t flagged = 0;
  for (int t = 0; t < obs.t; ++t)
    for (int i = 0; i < obs.m; ++i)
      for (int s = 0; s < obs.n; ++s) {
        if (!mask.held_out[obs.index(t, i, s)]) continue;
        ++flagged;
        CHECK(i == 1);
        const TimeLabel& tl = obs.time_labels[static_cast<std::size_t>(t)];
        CHECK((tl >= TimeLabel{1991, 8} && tl <= TimeLabel{1994, 7}));
        const GeoPoint& p = obs.locations[static_cast<std::size_t>(s)];
        CHECK((p.lon_deg() >= -155.0 && p.lon_deg() <= -35.0));
        CHECK((p.lat_deg() >= -5.0 && p.lat_deg() <= 80.0));
      }
  CHECK(flagged == mask.count);
  obs.mask[obs.index(20, 0, 0)] = 0;
  const ObservationTensor fitted = mask.apply(obs);
  CHECK(fitted.observed_count() == obs.observed_count() - mask.count);
  CHECK_FALSE(fitted.observed(20, 0, 0));

  // outside the time range
  ObservationTensor early = monthly_tensor(12, 3, 24, 48, TimeLabel{1980, 1});
  CHECK_THROWS_AS(build_holdout_mask(spec, early), ValidationError);
  HoldoutSpec ocean = spec;
  ocean.lon_min = ocean.lon_max = 0.0;  // between two cell centers
  CHECK_THROWS_AS(build_holdout_mask(ocean, obs), ValidationError);
}

TEST_CASE("random-fraction holdout") {
  const ObservationTensor obs = monthly_tensor(4, 2, 10, 20, TimeLabel{2000, 1});
  const HoldoutMask a = build_holdout_mask(HoldoutSpec::random(0, 0.1, 5), obs);
  const HoldoutMask b = build_holdout_mask(HoldoutSpec::random(0, 0.1, 5), obs);
  const HoldoutMask c = build_holdout_mask(HoldoutSpec::random(0, 0.1, 6), obs);
  CHECK(a.locations.size() == 20);
  CHECK(a.count == 80);
  CHECK(a.locations == b.locations);
  CHECK(a.locations != c.locations);
  CHECK(std::set<int>(a.locations.begin(), a.locations.end()).size() == 20);
  CHECK_THROWS_AS(build_holdout_mask(HoldoutSpec::random(0, 1.0, 5), obs), ValidationError);
  CHECK_THROWS_AS(build_holdout_mask(HoldoutSpec::random(0, 0.001, 5), obs), ValidationError);
  CHECK_THROWS_AS(build_holdout_mask(HoldoutSpec::random(2, 0.1, 5), obs), ValidationError);
}

namespace {

struct PredictionFixture {
  ObservationTensor truth;
  SparseMatrix phi;
  PosteriorDraws draws;
  HoldoutMask mask;
  std::vector<HeldOutEntry> entries;

  explicit PredictionFixture(double sigma2) {
    truth = monthly_tensor(3, 2, 4, 8, TimeLabel{2001, 1});
    const BasisGrid grid = build_icosahedral_grid(0);
    phi = build_basis_matrix({grid, 2.5, truth.locations});
    Rng rng(12);
    Eigen::MatrixXd alphas(24, 4);
    for (Eigen::Index c = 0; c < 4; ++c) alphas.col(c) = rng.normal_vector(24);
    for (int t = 0; t < 3; ++t)
      for (int i = 0; i < 2; ++i) {
        const Eigen::VectorXd mean = phi * alphas.col(t + 1).segment(i * 12, 12);
        for (int s = 0; s < truth.n; ++s) truth.values[truth.index(t, i, s)] = mean[s];
      }
    draws.m = 2;
    draws.k = 12;
    draws.t = 3;
    for (int c = 0; c < 2; ++c) {
      ChainDraws ch;
      for (int it = 0; it < 2000; ++it) {
        ch.iterations.push_back(it);
        ch.tau2.push_back(Eigen::VectorXd::Ones(2));
        ch.sigma2.push_back(Eigen::MatrixXd::Constant(3, 2, sigma2));
        ch.transition.push_back(TransitionBlocks::identity(2, 12));
        ch.states.push_back(alphas);
      }
      draws.chains.push_back(ch);
    }
    mask = build_holdout_mask(HoldoutSpec::random(1, 0.25, 3), truth);
    entries = held_out_entries(mask, truth);
  }
};

}  // namespace

TEST_CASE("predictive draws and scores") {
  PredictionFixture f(1e-30);
  CHECK(f.entries.size() == f.mask.count);
  const Eigen::MatrixXd samples = predictive_draws(f.draws, f.phi, f.entries, 7);
  CHECK(samples.rows() == static_cast<Eigen::Index>(f.entries.size()));
  CHECK(samples.cols() == 4000);
  const auto scores = score_entries(samples, f.entries, f.truth);
  for (const auto& s : scores) {
    CHECK(std::abs(s.mean - s.truth) < 1e-12);
    CHECK(s.crps < 1e-12);
  }
  const auto table = score_table("oracle", "var2", scores);
  CHECK(table.size() == 4);
  CHECK(table.back().month == "all");
  CHECK(table.back().n == f.mask.count);
  CHECK(table.front().month == "2001-01");
  for (const auto& row : table) CHECK(row.rmspe < 1e-12);
  CHECK(predictive_draws(f.draws, f.phi, f.entries, 7) == samples);

  f.draws.chains[1].states.clear();
  CHECK_THROWS_AS(predictive_draws(f.draws, f.phi, f.entries, 7), ValidationError);
}

TEST_CASE("predictive noise has the sampled variance") {
  PredictionFixture f(0.5);
  const Eigen::MatrixXd samples = predictive_draws(f.draws, f.phi, f.entries, 9);
  const auto scores = score_entries(samples, f.entries, f.truth);
  double z2 = 0.0;
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    const double truth = f.truth.value(f.entries[static_cast<std::size_t>(r)].t, 1,
                                       f.entries[static_cast<std::size_t>(r)].location);
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
      z2 += (samples(r, c) - truth) * (samples(r, c) - truth);
      ++n;
    }
  }
  CHECK(z2 / static_cast<double>(n) == doctest::Approx(0.5).epsilon(0.02));
  // CRPS of N(mu, s^2) at its mean is s (sqrt 2 - 1) / sqrt pi
  double crps = 0.0;
  for (const auto& s : scores) crps += s.crps / static_cast<double>(scores.size());
  CHECK(crps == doctest::Approx(std::sqrt(0.5) * (std::sqrt(2.0) - 1.0) / std::sqrt(M_PI)).epsilon(0.03));
}

TEST_CASE("score table groups by month") {
  std::vector<EntryScore> sc;
  auto add = [&](TimeLabel t, double err, double crps) {
    EntryScore e;
    e.time = t;
    e.truth = 1.0;
    e.mean = 1.0 + err;
    e.crps = crps;
    sc.push_back(e);
  };
  add({2000, 2}, 3.0, 1.0);
  add({2000, 1}, 1.0, 0.5);
  add({2000, 2}, 4.0, 2.0);
  const auto table = score_table("m", "v", sc);
  REQUIRE(table.size() == 3);
  CHECK(table[0].month == "2000-01");
  CHECK(table[0].crps == 0.5);
  CHECK(table[1].crps == 1.5);
  CHECK(table[1].rmspe == doctest::Approx(std::sqrt(12.5)));
  CHECK(table[2].crps == doctest::Approx(3.5 / 3.0));
  CHECK(table[2].rmspe == doctest::Approx(std::sqrt(26.0 / 3.0)));
  CHECK_THROWS_AS(score_table("m", "v", std::vector<EntryScore>{}), ValidationError);
}
