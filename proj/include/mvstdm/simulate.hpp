#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvstdm/grid.hpp"
#include "mvstdm/model.hpp"
#include "mvstdm/random.hpp"

namespace mvstdm {

struct SimSpec {
  int grid_level = 1;
  int m = 3;
  int t = 144;
  std::size_t nlat = 24;  // observation grid, cell centered
  std::size_t nlon = 48;
  Eigen::VectorXd tau2;    // length M
  Eigen::MatrixXd sigma2;  // T x M
  double kappa = 2.0;
  double range_factor = 2.5;
  TransitionBlocks transition;
  int burn_in_steps = 100;
  std::uint64_t seed = 1;
  TimeLabel start{1984, 1};

  void validate() const;
  std::vector<GeoPoint> locations() const { return regular_latlon_points(nlat, nlon); }
};

struct SimulatedData {
  ObservationTensor obs;
  /// True states; column 0 is the state preceding the first observation.
  StateSequence states;
  std::vector<std::string> warnings;
};

/// Transition blocks of the three-variable recovery study on `grid`:
/// own-lags 0.8, 0.6, 0.6; A12 = A13 = 0; A21 = A32 = -0.2;
/// A31[k] = 0.4 (1 - sqrt|lat_k / 90|); A23[k] = 0.3 lat_k / 90 (degrees).
TransitionBlocks build_recovery_transition(const BasisGrid& grid);

/// Recovery-study preset: K = 42, N = 1152 (24 x 48), T = 144, M = 3,
/// tau2 = 5, sigma2 = 2, kappa = 2, burn-in 100.
SimSpec full_recovery_spec(std::uint64_t seed = 1);

/// Desk-scale variant: K = 12, N = 288 (12 x 24), T = 60; same parameter values.
SimSpec reduced_recovery_spec(std::uint64_t seed = 1);

/// alpha_0 ~ N(0, I), alpha_t = A alpha_{t-1} + eta_t with eta_t drawn through
/// the sparse Cholesky factor of Q^{-1}. The first burn_in_steps transitions
/// are discarded, then T observed steps follow with
/// Y_t = Phi_M alpha_t + eps_t, eps ~ N(0, V_t).
/// Normals are consumed in order: alpha_0, each eta_t, then observation noise
/// by (t, i, s).
SimulatedData simulate_dataset(const SimSpec& spec, Rng& rng);

}  // namespace mvstdm
