#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvstdm/evaluate.hpp"
#include "mvstdm/model.hpp"
#include "mvstdm/sampler.hpp"
#include "mvstdm/simulate.hpp"

namespace mvstdm {

enum class FitMode { multivariate, univariate, univariate_rw };

std::string to_string(FitMode mode);
FitMode parse_fit_mode(const std::string& text);

/// Holdout block with the target variable named rather than indexed.
struct HoldoutConfig {
  HoldoutSpec spec;
  std::string variable;
};

/// Optional preprocessing of raw gridded input before fitting.
struct PreprocessConfig {
  std::size_t nlat = 24, nlon = 48;
  bool regrid = false;
  bool weighted = true;
  std::optional<std::pair<int, int>> climatology_years;
};

/// Simulation block. `preset` is "recovery", "reduced" or "custom". Presets
/// fix every dimension and parameter; "custom" takes the fields below plus
/// grid level, kappa and range factor from the model block. The seed is
/// sampler.seed in all cases.
struct SimulateConfig {
  std::string preset = "reduced";
  int m = 3;
  int t = 60;
  std::size_t nlat = 12, nlon = 24;
  std::vector<double> tau2{5.0};   // one value for all variables, or M values
  double sigma2 = 2.0;
  int burn_in_steps = 100;
  std::string start = "1984-01";
  /// "recovery", "identity", or a transition JSON object {M, K, blocks}.
  nlohmann::json transition = "recovery";
};

struct RunConfig {
  std::filesystem::path data;    // dataset directory
  std::filesystem::path output;  // output file or directory
  std::filesystem::path draws;   // draw directory for predict/project

  std::optional<int> m;  // expected variable count, checked against the data
  int grid_level = 1;
  double kappa = 2.0;
  double range_factor = 2.5;

  double a_sigma = 1.0, b_sigma = 1.0;
  double a_tau = 1.0, b_tau = 1.0;
  double lambda = 0.25;
  double m0 = 0.0;
  double c0 = 1.0;

  SamplerConfig sampler;
  std::optional<HoldoutConfig> holdout;
  FitMode mode = FitMode::multivariate;
  std::string mode_variable;

  std::optional<PreprocessConfig> preprocess;
  SimulateConfig simulate;

  /// Every problem found, empty when the configuration is usable.
  std::vector<std::string> problems() const;
  /// Throws ValidationError listing all problems.
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  Priors priors(int mk) const;
  SimSpec sim_spec() const;
};

}  // namespace mvstdm
