#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mvstdm {

/// Point on the unit sphere, radians. lat in [-pi/2, pi/2], lon in [-pi, pi).
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  static GeoPoint from_degrees(double lat_deg, double lon_deg);
  double lat_deg() const;
  double lon_deg() const;
  bool valid() const;
};

/// Icosahedral basis grid: node centers, symmetric adjacency, neighbor counts.
///
/// Nodes are ordered by descending latitude, then ascending longitude, so the
/// index of a node is reproducible for a given level.
struct BasisGrid {
  int level = 0;
  std::vector<GeoPoint> centers;
  std::vector<std::vector<std::size_t>> adjacency;

  std::size_t size() const { return centers.size(); }
  std::size_t neighbor_count(std::size_t i) const { return adjacency[i].size(); }
};

inline constexpr int kMaxGridLevel = 5;

/// Number of nodes produced by `level` subdivisions: 10 * 4^level + 2.
std::size_t icosahedral_node_count(int level);

/// Builds the geodesic grid by midpoint subdivision of the 20 icosahedron
/// faces. One vertex of the base icosahedron sits on each pole.
/// Throws ResourceError when level > kMaxGridLevel, DomainError when negative.
BasisGrid build_icosahedral_grid(int level);

/// Haversine great-circle distance in radians, in [0, pi].
double great_circle_distance(const GeoPoint& p, const GeoPoint& q);

/// Mean great-circle length of the grid edges.
double mesh_spacing(const BasisGrid& grid);

/// JSON export: {level, centers:[{lat_deg, lon_deg}], adjacency:[[...]]},
/// coordinates printed with 10 decimal digits.
std::string grid_to_json(const BasisGrid& grid);

/// Cell-centered regular lat/lon grid of nlat x nlon points, ordered by
/// descending latitude then ascending longitude.
std::vector<GeoPoint> regular_latlon_points(std::size_t nlat, std::size_t nlon);

}  // namespace mvstdm
