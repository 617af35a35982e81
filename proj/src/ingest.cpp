#include "mvstdm/ingest.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "mvstdm/errors.hpp"
#include "mvstdm/sparse_io.hpp"

namespace mvstdm {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

struct Overlap {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 0.0;
};

// Overlaps between source and target cells along one axis of [lo, hi].
// `measure` maps an interval [a, b] to its weight.
template <typename Measure>
std::vector<Overlap> axis_overlaps(double lo, double hi, std::size_t n_src, std::size_t n_dst,
                                   Measure measure) {
  std::vector<Overlap> out;
  const double ds = (hi - lo) / static_cast<double>(n_src);
  const double dd = (hi - lo) / static_cast<double>(n_dst);
  for (std::size_t d = 0; d < n_dst; ++d) {
    const double d0 = lo + static_cast<double>(d) * dd;
    const double d1 = d + 1 == n_dst ? hi : lo + static_cast<double>(d + 1) * dd;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::floor((d0 - lo) / ds)));
    for (std::size_t s = first; s < n_src; ++s) {
      const double s0 = lo + static_cast<double>(s) * ds;
      const double s1 = s + 1 == n_src ? hi : lo + static_cast<double>(s + 1) * ds;
      if (s0 >= d1) break;
      const double a = std::max(s0, d0);
      const double b = std::min(s1, d1);
      if (b > a) out.push_back({s, d, measure(a, b)});
    }
  }
  return out;
}

std::string cell_name(const LatLonGrid& g, std::size_t r, std::size_t c) {
  return fmt::format("(lat {}, lon {})", g.lat_center(r), g.lon_center(c));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw IoError(fmt::format("line {}: '{}' is not a finite number", line, text));
  }
  return v;
}

std::size_t locate(double value, double lo, double step, std::size_t n, const char* axis,
                   std::size_t line) {
  const double pos = (value - lo) / step - 0.5;
  const double idx = std::round(pos);
  if (idx < 0.0 || idx >= static_cast<double>(n) || std::abs(pos - idx) > 1e-6) {
    throw IoError(fmt::format("line {}: {} {} is not a cell center of the manifest grid", line,
                              axis, value));
  }
  return static_cast<std::size_t>(idx);
}

void check_same_axes(const GriddedSeries& a, const GriddedSeries& b) {
  if (!(a.grid == b.grid)) {
    throw ValidationError(
        fmt::format("variables '{}' and '{}' are on different grids", a.variable, b.variable));
  }
  if (a.start != b.start || a.n_times != b.n_times) {
    throw ValidationError(fmt::format("variables '{}' and '{}' have different time axes",
                                      a.variable, b.variable));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  return in;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void LatLonGrid::validate() const {
  if (nlat == 0 || nlon == 0) throw ValidationError("lat/lon grid must be non-empty");
  if (!(lat_min < lat_max) || lat_min < -90.0 || lat_max > 90.0) {
    throw ValidationError("latitude bounds must satisfy -90 <= lat_min < lat_max <= 90");
  }
  if (!(lon_min < lon_max) || lon_max - lon_min > 360.0) {
    throw ValidationError("longitude bounds must satisfy lon_min < lon_max, span <= 360");
  }
}

GriddedSeries::GriddedSeries(std::string variable_, LatLonGrid grid_, TimeLabel start_, int n_times_)
    : variable(std::move(variable_)), grid(grid_), start(start_), n_times(n_times_) {
  validate();
  values.assign(static_cast<std::size_t>(n_times) * grid.cells(), 0.0);
  mask.assign(values.size(), 1);
}

void GriddedSeries::validate() const {
  grid.validate();
  if (n_times < 1) throw ValidationError(fmt::format("series '{}' has no time steps", variable));
  if (start.month < 1 || start.month > 12) throw ValidationError("start month must be in 1..12");
  const std::size_t expected = static_cast<std::size_t>(n_times) * grid.cells();
  if (!values.empty() && (values.size() != expected || mask.size() != expected)) {
    throw ValidationError(fmt::format("series '{}' holds {} values, expected {}", variable,
                                      values.size(), expected));
  }
}

GriddedSeries regrid_average(const GriddedSeries& series, std::size_t nlat, std::size_t nlon,
                             bool weighted) {
  series.validate();
  LatLonGrid target = series.grid;
  target.nlat = nlat;
  target.nlon = nlon;
  target.validate();
  const LatLonGrid& g = series.grid;

  const auto lat_w = weighted ? axis_overlaps(g.lat_min, g.lat_max, g.nlat, nlat,
                                              [](double a, double b) {
                                                return std::sin(b * kDeg) - std::sin(a * kDeg);
                                              })
                              : axis_overlaps(g.lat_min, g.lat_max, g.nlat, nlat,
                                              [](double a, double b) { return b - a; });
  const auto lon_w = axis_overlaps(g.lon_min, g.lon_max, g.nlon, nlon,
                                   [](double a, double b) { return b - a; });

  GriddedSeries out(series.variable, target, series.start, series.n_times);
  std::fill(out.mask.begin(), out.mask.end(), 0);
  std::vector<double> sum(target.cells());
  std::vector<double> wsum(target.cells());
  for (int t = 0; t < series.n_times; ++t) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(wsum.begin(), wsum.end(), 0.0);
    for (const Overlap& la : lat_w) {
      for (const Overlap& lo : lon_w) {
        const std::size_t src = series.index(t, la.src, lo.src);
        if (!series.mask[src]) continue;
        const double w = la.weight * lo.weight;
        const std::size_t dst = la.dst * nlon + lo.dst;
        sum[dst] += w * series.values[src];
        wsum[dst] += w;
      }
    }
    for (std::size_t cell = 0; cell < target.cells(); ++cell) {
      if (wsum[cell] > 0.0) {
        const std::size_t e = static_cast<std::size_t>(t) * target.cells() + cell;
        out.values[e] = sum[cell] / wsum[cell];
        out.mask[e] = 1;
      }
    }
  }
  return out;
}

Climatology compute_climatology(const GriddedSeries& series, int first_year, int last_year) {
  series.validate();
  if (first_year > last_year) throw ValidationError("climatology years are inverted");
  Climatology clim;
  clim.grid = series.grid;
  clim.first_year = first_year;
  clim.last_year = last_year;
  const std::size_t n = 12 * series.grid.cells();
  clim.mean.assign(n, 0.0);
  clim.std.assign(n, 0.0);
  clim.count.assign(n, 0);

  // Two passes for a stable variance.
  for (int pass = 0; pass < 2; ++pass) {
    for (int t = 0; t < series.n_times; ++t) {
      const TimeLabel label = series.time(t);
      if (label.year < first_year || label.year > last_year) continue;
      for (std::size_t r = 0; r < series.grid.nlat; ++r) {
        for (std::size_t c = 0; c < series.grid.nlon; ++c) {
          const std::size_t e = series.index(t, r, c);
          if (!series.mask[e]) continue;
          const std::size_t k = clim.index(label.month, r, c);
          if (pass == 0) {
            clim.mean[k] += series.values[e];
            ++clim.count[k];
          } else {
            const double d = series.values[e] - clim.mean[k];
            clim.std[k] += d * d;
          }
        }
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (clim.count[k] == 0) continue;
      if (pass == 0) {
        clim.mean[k] /= clim.count[k];
      } else {
        clim.std[k] = clim.count[k] > 1 ? std::sqrt(clim.std[k] / (clim.count[k] - 1)) : 0.0;
      }
    }
  }
  return clim;
}

GriddedSeries standardize_anomalies(const GriddedSeries& series, const Climatology& clim) {
  series.validate();
  if (!(series.grid == clim.grid)) throw ValidationError("climatology grid does not match series");
  GriddedSeries out = series;
  for (int t = 0; t < series.n_times; ++t) {
    const int month = series.time(t).month;
    for (std::size_t r = 0; r < series.grid.nlat; ++r) {
      for (std::size_t c = 0; c < series.grid.nlon; ++c) {
        const std::size_t e = series.index(t, r, c);
        if (!series.mask[e]) continue;
        const std::size_t k = clim.index(month, r, c);
        if (clim.count[k] < 2) {
          throw ValidationError(fmt::format(
              "{} cell {} month {}: {} reference value(s), standard deviation undefined",
              series.variable, cell_name(series.grid, r, c), month, clim.count[k]));
        }
        if (clim.std[k] == 0.0) {
          throw ValidationError(fmt::format("{} cell {} month {}: zero standard deviation",
                                            series.variable, cell_name(series.grid, r, c), month));
        }
        out.values[e] = (series.values[e] - clim.mean[k]) / clim.std[k];
      }
    }
  }
  return out;
}

GriddedSeries restore_from_anomalies(const GriddedSeries& anomalies, const Climatology& clim) {
  if (!(anomalies.grid == clim.grid)) throw ValidationError("climatology grid does not match series");
  GriddedSeries out = anomalies;
  for (int t = 0; t < anomalies.n_times; ++t) {
    const int month = anomalies.time(t).month;
    for (std::size_t r = 0; r < anomalies.grid.nlat; ++r) {
      for (std::size_t c = 0; c < anomalies.grid.nlon; ++c) {
        const std::size_t e = anomalies.index(t, r, c);
        if (!anomalies.mask[e]) continue;
        const std::size_t k = clim.index(month, r, c);
        out.values[e] = anomalies.values[e] * clim.std[k] + clim.mean[k];
      }
    }
  }
  return out;
}

void write_climatology(std::ostream& out, const Climatology& clim) {
  out << "lat,lon,month,mean,std\n";
  for (std::size_t r = 0; r < clim.grid.nlat; ++r) {
    for (std::size_t c = 0; c < clim.grid.nlon; ++c) {
      for (int month = 1; month <= 12; ++month) {
        const std::size_t k = clim.index(month, r, c);
        out << format_double(clim.grid.lat_center(r)) << ',' << format_double(clim.grid.lon_center(c))
            << ',' << month << ',';
        if (clim.count[k] > 0) out << format_double(clim.mean[k]);
        out << ',';
        if (clim.count[k] > 1) out << format_double(clim.std[k]);
        out << '\n';
      }
    }
  }
}

std::vector<GeoPoint> canonical_locations(const LatLonGrid& grid) {
  std::vector<GeoPoint> out;
  out.reserve(grid.cells());
  for (std::size_t r = grid.nlat; r-- > 0;) {
    for (std::size_t c = 0; c < grid.nlon; ++c) {
      out.push_back(GeoPoint::from_degrees(grid.lat_center(r), grid.lon_center(c)));
    }
  }
  return out;
}

ObservationTensor to_observation_tensor(const std::vector<GriddedSeries>& series) {
  if (series.empty()) throw ValidationError("no series to stack");
  for (const auto& s : series) {
    s.validate();
    check_same_axes(series.front(), s);
  }
  const GriddedSeries& first = series.front();
  const LatLonGrid& g = first.grid;
  ObservationTensor obs(first.n_times, static_cast<int>(series.size()), canonical_locations(g));
  for (int t = 0; t < obs.t; ++t) obs.time_labels[static_cast<std::size_t>(t)] = first.time(t);
  for (int i = 0; i < obs.m; ++i) {
    const GriddedSeries& s = series[static_cast<std::size_t>(i)];
    obs.variables[static_cast<std::size_t>(i)] = s.variable;
    for (int t = 0; t < obs.t; ++t) {
      int loc = 0;
      for (std::size_t r = g.nlat; r-- > 0;) {
        for (std::size_t c = 0; c < g.nlon; ++c, ++loc) {
          const std::size_t src = s.index(t, r, c);
          const std::size_t dst = obs.index(t, i, loc);
          obs.values[dst] = s.mask[src] ? s.values[src] : 0.0;
          obs.mask[dst] = s.mask[src];
        }
      }
    }
  }
  return obs;
}

GriddedSeries series_from_tensor(const ObservationTensor& obs, int var, const LatLonGrid& grid) {
  if (var < 0 || var >= obs.m) throw ValidationError(fmt::format("variable {} out of range", var));
  if (grid.cells() != static_cast<std::size_t>(obs.n)) {
    throw ValidationError("tensor location count does not match the grid");
  }
  GriddedSeries out(obs.variables[static_cast<std::size_t>(var)], grid, obs.time_labels.front(), obs.t);
  int loc = 0;
  for (std::size_t r = grid.nlat; r-- > 0;) {
    for (std::size_t c = 0; c < grid.nlon; ++c, ++loc) {
      const GeoPoint& p = obs.locations[static_cast<std::size_t>(loc)];
      const GeoPoint q = GeoPoint::from_degrees(grid.lat_center(r), grid.lon_center(c));
      if (std::abs(p.lat - q.lat) > 1e-9 || std::abs(p.lon - q.lon) > 1e-9) {
        throw ValidationError("tensor locations are not the grid centers in canonical order");
      }
      for (int t = 0; t < obs.t; ++t) {
        const std::size_t dst = out.index(t, r, c);
        out.values[dst] = obs.value(t, var, loc);
        out.mask[dst] = obs.observed(t, var, loc) ? 1 : 0;
      }
    }
  }
  return out;
}

void write_series_csv(std::ostream& out, const GriddedSeries& series) {
  out << "time,lat,lon,value\n";
  for (int t = 0; t < series.n_times; ++t) {
    const std::string label = series.time(t).str();
    for (std::size_t r = 0; r < series.grid.nlat; ++r) {
      for (std::size_t c = 0; c < series.grid.nlon; ++c) {
        const std::size_t e = series.index(t, r, c);
        out << label << ',' << format_double(series.grid.lat_center(r)) << ','
            << format_double(series.grid.lon_center(c)) << ',';
        if (series.mask[e]) out << format_double(series.values[e]);
        out << '\n';
      }
    }
  }
}

void read_series_csv(std::istream& in, GriddedSeries& series) {
  series.validate();
  series.values.assign(static_cast<std::size_t>(series.n_times) * series.grid.cells(), 0.0);
  series.mask.assign(series.values.size(), 0);
  std::vector<std::uint8_t> seen(series.values.size(), 0);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty series CSV");
  const auto header = split_csv(line);
  if (header != std::vector<std::string>{"time", "lat", "lon", "value"}) {
    throw IoError(fmt::format("unexpected CSV header '{}'", line));
  }
  const int start = series.start.months_since_epoch();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw IoError(fmt::format("line {}: expected 4 fields", line_no));
    TimeLabel label;
    try {
      label = TimeLabel::parse(f[0]);
    } catch (const std::exception&) {
      throw IoError(fmt::format("line {}: bad time label '{}'", line_no, f[0]));
    }
    const int t = label.months_since_epoch() - start;
    if (t < 0 || t >= series.n_times) {
      throw IoError(fmt::format("line {}: time {} outside the manifest axis", line_no, f[0]));
    }
    const LatLonGrid& g = series.grid;
    const std::size_t r = locate(parse_number(f[1], line_no), g.lat_min, g.dlat(), g.nlat, "lat", line_no);
    const std::size_t c = locate(parse_number(f[2], line_no), g.lon_min, g.dlon(), g.nlon, "lon", line_no);
    const std::size_t e = series.index(t, r, c);
    if (seen[e]) throw IoError(fmt::format("line {}: duplicate entry", line_no));
    seen[e] = 1;
    if (!f[3].empty()) {
      series.values[e] = parse_number(f[3], line_no);
      series.mask[e] = 1;
    }
  }
}

std::string series_manifest(const GriddedSeries& series) {
  json j;
  j["variable"] = series.variable;
  j["nlat"] = series.grid.nlat;
  j["nlon"] = series.grid.nlon;
  j["lat_min"] = series.grid.lat_min;
  j["lat_max"] = series.grid.lat_max;
  j["lon_min"] = series.grid.lon_min;
  j["lon_max"] = series.grid.lon_max;
  j["start"] = series.start.str();
  j["n_times"] = series.n_times;
  return j.dump(2) + "\n";
}

GriddedSeries series_from_manifest(const std::string& text) {
  try {
    const json j = json::parse(text);
    LatLonGrid g;
    g.nlat = j.at("nlat").get<std::size_t>();
    g.nlon = j.at("nlon").get<std::size_t>();
    g.lat_min = j.value("lat_min", -90.0);
    g.lat_max = j.value("lat_max", 90.0);
    g.lon_min = j.value("lon_min", -180.0);
    g.lon_max = j.value("lon_max", 180.0);
    return GriddedSeries(j.at("variable").get<std::string>(), g,
                         TimeLabel::parse(j.at("start").get<std::string>()),
                         j.at("n_times").get<int>());
  } catch (const json::exception& e) {
    throw IoError(fmt::format("bad grid manifest: {}", e.what()));
  }
}

void save_series(const std::filesystem::path& dir, const GriddedSeries& series) {
  std::filesystem::create_directories(dir);
  open_out(dir / (series.variable + ".json")) << series_manifest(series);
  std::ofstream csv = open_out(dir / (series.variable + ".csv"));
  write_series_csv(csv, series);
  if (!csv) throw IoError(fmt::format("failed writing {}.csv", series.variable));
}

GriddedSeries load_series(const std::filesystem::path& dir, const std::string& variable) {
  GriddedSeries s = series_from_manifest(slurp(dir / (variable + ".json")));
  if (s.variable != variable) {
    throw IoError(fmt::format("manifest {}.json names variable '{}'", variable, s.variable));
  }
  std::ifstream csv = open_in(dir / (variable + ".csv"));
  read_series_csv(csv, s);
  return s;
}

void save_dataset(const std::filesystem::path& dir, const std::vector<GriddedSeries>& series) {
  if (series.empty()) throw ValidationError("dataset has no variables");
  std::vector<std::string> names;
  for (const auto& s : series) {
    check_same_axes(series.front(), s);
    names.push_back(s.variable);
  }
  std::filesystem::create_directories(dir);
  json j;
  j["variables"] = names;
  open_out(dir / "dataset.json") << j.dump(2) << "\n";
  for (const auto& s : series) save_series(dir, s);
}

std::vector<GriddedSeries> load_dataset(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  try {
    names = json::parse(slurp(dir / "dataset.json")).at("variables").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IoError(fmt::format("bad dataset manifest in {}: {}", dir.string(), e.what()));
  }
  if (names.empty()) throw IoError(fmt::format("dataset {} lists no variables", dir.string()));
  std::vector<GriddedSeries> out;
  for (const auto& n : names) out.push_back(load_series(dir, n));
  for (const auto& s : out) check_same_axes(out.front(), s);
  return out;
}

}  // namespace mvstdm
