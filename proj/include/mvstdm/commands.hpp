#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvstdm/config.hpp"
#include "mvstdm/evaluate.hpp"
#include "mvstdm/ingest.hpp"

namespace mvstdm {

/// Observations as a run sees them.
struct FitData {
  LatLonGrid grid;
  ObservationTensor full;       // every variable, nothing held out
  ObservationTensor fitted;     // mode view with the holdout masked
  ObservationTensor truth;      // mode view, nothing held out
  std::optional<HoldoutMask> holdout;  // built on `truth`
};

/// Loads config.data, applies preprocessing, resolves mode and holdout.
FitData load_fit_data(const RunConfig& config);

/// Basis and SAR matrices for `config` on the given locations.
ModelSetup model_setup(const RunConfig& config, const std::vector<GeoPoint>& locations);

void cmd_grid(int level, const std::filesystem::path& out);

/// Writes a dataset directory plus truth.json at config.output.
void cmd_simulate(const RunConfig& config);

/// Writes a draw directory at config.output. `progress` prints one line per
/// 10 iterations to standard error.
PosteriorDraws cmd_fit(const RunConfig& config, bool progress = true);

/// Posterior predictive scores of the held-out entries of a fit, written to
/// config.output as CSV
/// `model,variable,time,lat,lon,truth,mean,q025,q975,crps`.
void cmd_predict(const RunConfig& config);

/// Reads prediction CSVs and writes scores_monthly.csv
/// (`model,variable,month,crps,rmspe,n`) and scores_average.csv
/// (`model,variable,crps,rmspe,n`) to `out_dir`.
void cmd_score(const std::vector<std::filesystem::path>& predictions,
               const std::filesystem::path& out_dir);

/// CSV `lat_deg,lon_deg,i,j,post_mean,q025,q975` of the projected
/// transition blocks, N x M^2 rows.
void cmd_project(const std::filesystem::path& draws_dir, const std::filesystem::path& out);

/// Runs `body`, reporting failures on standard error. Returns the process
/// exit code: 0 success, 1 validation, 2 numerical, 3 I/O.
int run_guarded(const std::function<void()>& body);

}  // namespace mvstdm
