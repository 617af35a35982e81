#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvstdm/model.hpp"

namespace mvstdm {

/// Regular cell-centered latitude/longitude grid, bounds in degrees.
/// Row 0 is the southernmost row, column 0 the westernmost column.
struct LatLonGrid {
  std::size_t nlat = 0;
  std::size_t nlon = 0;
  double lat_min = -90.0, lat_max = 90.0;
  double lon_min = -180.0, lon_max = 180.0;

  double dlat() const { return (lat_max - lat_min) / static_cast<double>(nlat); }
  double dlon() const { return (lon_max - lon_min) / static_cast<double>(nlon); }
  double lat_center(std::size_t r) const { return lat_min + (static_cast<double>(r) + 0.5) * dlat(); }
  double lon_center(std::size_t c) const { return lon_min + (static_cast<double>(c) + 0.5) * dlon(); }
  std::size_t cells() const { return nlat * nlon; }
  void validate() const;
  bool operator==(const LatLonGrid&) const = default;
};

/// Monthly gridded field of one variable. values/mask are indexed by
/// (time, row, column); mask 0 marks a missing value.
struct GriddedSeries {
  std::string variable;
  LatLonGrid grid;
  TimeLabel start;
  int n_times = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  GriddedSeries() = default;
  /// Zero-filled and fully observed.
  GriddedSeries(std::string variable, LatLonGrid grid, TimeLabel start, int n_times);

  std::size_t index(int t, std::size_t r, std::size_t c) const {
    return (static_cast<std::size_t>(t) * grid.nlat + r) * grid.nlon + c;
  }
  TimeLabel time(int t) const { return start.plus_months(t); }
  void validate() const;
};

/// Area-weighted block mean onto an nlat x nlon grid with the same bounds.
/// Weights are the exact overlap areas on the sphere (cosine-latitude
/// weighting integrated over each overlap), so target sizes need not divide
/// the source. `weighted = false` uses plain lat/lon overlap areas, which
/// reduces to the unweighted block mean when the sizes divide evenly.
/// Missing source cells are excluded; a target cell with no observed source
/// is missing.
GriddedSeries regrid_average(const GriddedSeries& series, std::size_t nlat, std::size_t nlon,
                             bool weighted = true);

/// Per cell and calendar month: count, mean and sample std (n - 1) over the
/// years [first_year, last_year]. Cells with fewer than two values keep
/// count < 2 and are rejected by standardize_anomalies.
struct Climatology {
  LatLonGrid grid;
  int first_year = 0, last_year = 0;
  std::vector<double> mean;  // index (month - 1, row, column)
  std::vector<double> std;
  std::vector<int> count;

  std::size_t index(int month, std::size_t r, std::size_t c) const {
    return (static_cast<std::size_t>(month - 1) * grid.nlat + r) * grid.nlon + c;
  }
};

Climatology compute_climatology(const GriddedSeries& series, int first_year, int last_year);

/// (value - mean) / std per cell and calendar month; missing stays missing.
/// Throws ValidationError naming the cell when its std is zero or undefined.
GriddedSeries standardize_anomalies(const GriddedSeries& series, const Climatology& clim);

/// Inverse of standardize_anomalies.
GriddedSeries restore_from_anomalies(const GriddedSeries& anomalies, const Climatology& clim);

/// CSV `lat,lon,month,mean,std`; undefined std is left empty.
void write_climatology(std::ostream& out, const Climatology& clim);

/// Cell centers in canonical order (descending latitude, then ascending longitude).
std::vector<GeoPoint> canonical_locations(const LatLonGrid& grid);

/// Stacks M series on identical grids and time axes. Locations follow the
/// canonical order (descending latitude, then ascending longitude).
/// Throws ValidationError on mismatched axes.
ObservationTensor to_observation_tensor(const std::vector<GriddedSeries>& series);

/// Inverse of to_observation_tensor for variable `var`; the tensor
/// locations must be the centers of `grid` in canonical order.
GriddedSeries series_from_tensor(const ObservationTensor& obs, int var, const LatLonGrid& grid);

/// CSV `time,lat,lon,value`, one line per (time, row, column); an empty
/// value marks a missing entry.
void write_series_csv(std::ostream& out, const GriddedSeries& series);
/// Reads values into a series whose grid and axis are already set. Cells
/// absent from the file are missing.
void read_series_csv(std::istream& in, GriddedSeries& series);

/// JSON grid manifest: {variable, nlat, nlon, lat_min, lat_max, lon_min, lon_max, start, n_times}.
std::string series_manifest(const GriddedSeries& series);
GriddedSeries series_from_manifest(const std::string& text);

/// <name>.json + <name>.csv for one variable.
void save_series(const std::filesystem::path& dir, const GriddedSeries& series);
GriddedSeries load_series(const std::filesystem::path& dir, const std::string& variable);

/// Dataset directory: dataset.json listing the variables in order, plus
/// one manifest and CSV per variable.
void save_dataset(const std::filesystem::path& dir, const std::vector<GriddedSeries>& series);
std::vector<GriddedSeries> load_dataset(const std::filesystem::path& dir);

}  // namespace mvstdm
