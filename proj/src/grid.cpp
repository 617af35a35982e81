#include "mvstdm/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "mvstdm/errors.hpp"

namespace mvstdm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDedupScale = 1e9;

struct Vec3 {
  double x, y, z;
};

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
  return {v.x / n, v.y / n, v.z / n};
}

Vec3 from_latlon(double lat, double lon) {
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

GeoPoint to_geo(const Vec3& v) {
  GeoPoint p;
  p.lat = std::asin(std::clamp(v.z, -1.0, 1.0));
  p.lon = (std::abs(v.x) < 1e-15 && std::abs(v.y) < 1e-15) ? 0.0 : std::atan2(v.y, v.x);
  if (p.lon >= kPi - 1e-12) p.lon = -kPi;
  return p;
}

using Key = std::tuple<long long, long long, long long>;

Key quantize(const Vec3& v) {
  return {std::llround(v.x * kDedupScale), std::llround(v.y * kDedupScale),
          std::llround(v.z * kDedupScale)};
}

class VertexSet {
 public:
  std::size_t insert(const Vec3& v) {
    auto [it, fresh] = index_.try_emplace(quantize(v), points_.size());
    if (fresh) points_.push_back(v);
    return it->second;
  }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  std::map<Key, std::size_t> index_;
  std::vector<Vec3> points_;
};

using Face = std::array<std::size_t, 3>;

}  // namespace

GeoPoint GeoPoint::from_degrees(double lat_deg, double lon_deg) {
  double lon = lon_deg * kPi / 180.0;
  if (lon >= kPi) lon -= 2.0 * kPi;
  return {lat_deg * kPi / 180.0, lon};
}

double GeoPoint::lat_deg() const { return lat * 180.0 / kPi; }
double GeoPoint::lon_deg() const { return lon * 180.0 / kPi; }

bool GeoPoint::valid() const {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -kPi / 2 && lat <= kPi / 2 &&
         lon >= -kPi && lon < kPi;
}

std::size_t icosahedral_node_count(int level) {
  std::size_t pow4 = 1;
  for (int i = 0; i < level; ++i) pow4 *= 4;
  return 10 * pow4 + 2;
}

BasisGrid build_icosahedral_grid(int level) {
  if (level < 0) throw DomainError(fmt::format("grid level must be non-negative, got {}", level));
  if (level > kMaxGridLevel) {
    throw ResourceError(
        fmt::format("grid level {} exceeds the supported maximum of {}", level, kMaxGridLevel));
  }

  // Base icosahedron: poles plus two rings of five at latitude +-atan(1/2).
  VertexSet verts;
  const double ring_lat = std::atan(0.5);
  const std::size_t north = verts.insert({0.0, 0.0, 1.0});
  std::array<std::size_t, 5> upper{}, lower{};
  for (int i = 0; i < 5; ++i) {
    upper[i] = verts.insert(from_latlon(ring_lat, 2.0 * kPi * i / 5.0));
  }
  for (int i = 0; i < 5; ++i) {
    lower[i] = verts.insert(from_latlon(-ring_lat, 2.0 * kPi * i / 5.0 + kPi / 5.0));
  }
  const std::size_t south = verts.insert({0.0, 0.0, -1.0});

  std::vector<Face> faces;
  for (int i = 0; i < 5; ++i) {
    const int n = (i + 1) % 5;
    faces.push_back({north, upper[i], upper[n]});
    faces.push_back({upper[i], lower[i], upper[n]});
    faces.push_back({upper[n], lower[i], lower[n]});
    faces.push_back({south, lower[n], lower[i]});
  }

  for (int l = 0; l < level; ++l) {
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      auto mid = [&](std::size_t a, std::size_t b) {
        const Vec3 pa = verts.points()[a];
        const Vec3 pb = verts.points()[b];
        return verts.insert(normalized({pa.x + pb.x, pa.y + pb.y, pa.z + pb.z}));
      };
      const std::size_t ab = mid(f[0], f[1]);
      const std::size_t bc = mid(f[1], f[2]);
      const std::size_t ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({ab, f[1], bc});
      next.push_back({ca, bc, f[2]});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  const auto& pts = verts.points();
  const std::size_t k = pts.size();
  std::vector<GeoPoint> geo(k);
  std::transform(pts.begin(), pts.end(), geo.begin(), to_geo);

  // Canonical order: descending latitude, ascending longitude. Latitudes are
  // compared after quantization so rounding noise cannot reorder a ring.
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const long long la = std::llround(geo[a].lat * kDedupScale);
    const long long lb = std::llround(geo[b].lat * kDedupScale);
    if (la != lb) return la > lb;
    return std::llround(geo[a].lon * kDedupScale) < std::llround(geo[b].lon * kDedupScale);
  });
  std::vector<std::size_t> rank(k);
  for (std::size_t r = 0; r < k; ++r) rank[order[r]] = r;

  std::vector<std::set<std::size_t>> adj(k);
  for (const auto& f : faces) {
    for (int e = 0; e < 3; ++e) {
      const std::size_t a = rank[f[e]];
      const std::size_t b = rank[f[(e + 1) % 3]];
      adj[a].insert(b);
      adj[b].insert(a);
    }
  }

  BasisGrid grid;
  grid.level = level;
  grid.centers.resize(k);
  grid.adjacency.resize(k);
  for (std::size_t r = 0; r < k; ++r) {
    grid.centers[r] = geo[order[r]];
    grid.adjacency[r].assign(adj[r].begin(), adj[r].end());
  }
  return grid;
}

double great_circle_distance(const GeoPoint& p, const GeoPoint& q) {
  const double s_lat = std::sin((q.lat - p.lat) / 2.0);
  const double s_lon = std::sin((q.lon - p.lon) / 2.0);
  const double h = s_lat * s_lat + std::cos(p.lat) * std::cos(q.lat) * s_lon * s_lon;
  return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

double mesh_spacing(const BasisGrid& grid) {
  double total = 0.0;
  std::size_t edges = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j : grid.adjacency[i]) {
      if (j <= i) continue;
      total += great_circle_distance(grid.centers[i], grid.centers[j]);
      ++edges;
    }
  }
  if (edges == 0) throw ValidationError("grid has no edges");
  return total / static_cast<double>(edges);
}

std::string grid_to_json(const BasisGrid& grid) {
  std::string out = fmt::format("{{\"level\":{},\"centers\":[", grid.level);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) out += ',';
    out += fmt::format("{{\"lat_deg\":{:.10f},\"lon_deg\":{:.10f}}}", grid.centers[i].lat_deg(),
                       grid.centers[i].lon_deg());
  }
  out += "],\"adjacency\":[";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) out += ',';
    out += fmt::format("[{}]", fmt::join(grid.adjacency[i], ","));
  }
  out += "]}\n";
  return out;
}

std::vector<GeoPoint> regular_latlon_points(std::size_t nlat, std::size_t nlon) {
  std::vector<GeoPoint> pts;
  pts.reserve(nlat * nlon);
  const double dlat = 180.0 / static_cast<double>(nlat);
  const double dlon = 360.0 / static_cast<double>(nlon);
  for (std::size_t r = nlat; r-- > 0;) {
    for (std::size_t c = 0; c < nlon; ++c) {
      pts.push_back(GeoPoint::from_degrees(-90.0 + (static_cast<double>(r) + 0.5) * dlat,
                                           -180.0 + (static_cast<double>(c) + 0.5) * dlon));
    }
  }
  return pts;
}

}  // namespace mvstdm
