#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

#include "mvstdm/errors.hpp"
#include "mvstdm/grid.hpp"
#include "mvstdm/random.hpp"
#include "oracles.hpp"

using namespace mvstdm;

TEST_CASE("node counts follow 10 * 4^L + 2") {
  const std::size_t expected[] = {12, 42, 162, 642};
  for (int level = 0; level <= 3; ++level) {
    const BasisGrid g = build_icosahedral_grid(level);
    CHECK(g.size() == expected[level]);
    CHECK(icosahedral_node_count(level) == expected[level]);
  }
}

TEST_CASE("exactly twelve pentagonal nodes, all others hexagonal") {
  for (int level = 0; level <= 3; ++level) {
    const BasisGrid g = build_icosahedral_grid(level);
    std::size_t five = 0, six = 0, edges = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      five += g.neighbor_count(i) == 5;
      six += g.neighbor_count(i) == 6;
      edges += g.neighbor_count(i);
    }
    CHECK(five == 12);
    CHECK(five + six == g.size());
    CHECK(edges / 2 == 30 * static_cast<std::size_t>(std::pow(4, level)));
  }
}

TEST_CASE("adjacency is symmetric without self loops or duplicates") {
  const BasisGrid g = build_icosahedral_grid(2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::set<std::size_t> seen(g.adjacency[i].begin(), g.adjacency[i].end());
    CHECK(seen.size() == g.adjacency[i].size());
    CHECK_FALSE(seen.count(i));
    for (std::size_t j : g.adjacency[i]) {
      const auto& back = g.adjacency[j];
      CHECK(std::find(back.begin(), back.end(), i) != back.end());
    }
  }
}

TEST_CASE("nodes are ordered by descending latitude, then ascending longitude") {
  const BasisGrid g = build_icosahedral_grid(2);
  CHECK(g.centers.front().lat_deg() == doctest::Approx(90.0));
  CHECK(g.centers.back().lat_deg() == doctest::Approx(-90.0));
  for (std::size_t i = 1; i < g.size(); ++i) {
    const GeoPoint& a = g.centers[i - 1];
    const GeoPoint& b = g.centers[i];
    CHECK(a.valid());
    const bool same_ring = std::abs(a.lat - b.lat) < 1e-9;
    CHECK((a.lat > b.lat || (same_ring && a.lon < b.lon)));
  }
}

TEST_CASE("neighbors are the closest nodes and edges are near-uniform") {
  const BasisGrid g = build_icosahedral_grid(1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double far_neighbor = 0.0;
    for (std::size_t j : g.adjacency[i]) far_neighbor = std::max(far_neighbor, great_circle_distance(g.centers[i], g.centers[j]));
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (j == i) continue;
      const auto& adj = g.adjacency[i];
      if (std::find(adj.begin(), adj.end(), j) == adj.end()) {
        CHECK(great_circle_distance(g.centers[i], g.centers[j]) > far_neighbor);
      }
    }
  }
}

TEST_CASE("mesh spacing at level 0 is the icosahedron edge angle atan(2)") {
  CHECK(mesh_spacing(build_icosahedral_grid(0)) == doctest::Approx(std::atan(2.0)).epsilon(1e-12));
  const double l1 = mesh_spacing(build_icosahedral_grid(1));
  CHECK(l1 < std::atan(2.0) * 0.6);
  CHECK(l1 > std::atan(2.0) * 0.4);
}

TEST_CASE("great-circle distance agrees with the vector-angle oracle") {
  Rng rng(5);
  for (int r = 0; r < 200; ++r) {
    const GeoPoint p{std::asin(2 * rng.uniform() - 1), std::numbers::pi * (2 * rng.uniform() - 1)};
    const GeoPoint q{std::asin(2 * rng.uniform() - 1), std::numbers::pi * (2 * rng.uniform() - 1)};
    CHECK(great_circle_distance(p, q) == doctest::Approx(oracle::arc(p, q)).epsilon(1e-10));
    CHECK(great_circle_distance(p, q) == doctest::Approx(great_circle_distance(q, p)));
  }
  CHECK(great_circle_distance(GeoPoint::from_degrees(90, 0), GeoPoint::from_degrees(-90, 0)) ==
        doctest::Approx(std::numbers::pi));
  CHECK(great_circle_distance(GeoPoint::from_degrees(0, 0), GeoPoint::from_degrees(0, 90)) ==
        doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("invalid levels are rejected") {
  CHECK_THROWS_AS(build_icosahedral_grid(-1), DomainError);
  CHECK_THROWS_AS(build_icosahedral_grid(kMaxGridLevel + 1), ResourceError);
}

TEST_CASE("grid JSON export") {
  const auto j = nlohmann::json::parse(grid_to_json(build_icosahedral_grid(1)));
  CHECK(j["level"] == 1);
  CHECK(j["centers"].size() == 42);
  CHECK(j["adjacency"].size() == 42);
  CHECK(j["centers"][0]["lat_deg"].get<double>() == doctest::Approx(90.0));
}

TEST_CASE("regular lat/lon points are cell centered in canonical order") {
  const auto pts = regular_latlon_points(2, 4);
  REQUIRE(pts.size() == 8);
  CHECK(pts[0].lat_deg() == doctest::Approx(45.0));
  CHECK(pts[0].lon_deg() == doctest::Approx(-135.0));
  CHECK(pts[3].lon_deg() == doctest::Approx(135.0));
  CHECK(pts[4].lat_deg() == doctest::Approx(-45.0));
}
