#include "mvstdm/simulate.hpp"

#include <cmath>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "mvstdm/basis.hpp"
#include "mvstdm/errors.hpp"

namespace mvstdm {

void SimSpec::validate() const {
  if (t < 1) throw ValidationError("simulation needs T >= 1");
  if (m < 1) throw ValidationError("simulation needs M >= 1");
  if (nlat < 1 || nlon < 1) throw ValidationError("observation grid must be non-empty");
  if (burn_in_steps < 0) throw ValidationError("burn_in_steps must be >= 0");
  if (grid_level < 0 || grid_level > kMaxGridLevel) {
    throw ValidationError(fmt::format("grid level {} outside [0, {}]", grid_level, kMaxGridLevel));
  }
  const int k = static_cast<int>(icosahedral_node_count(grid_level));
  if (transition.m() != m || transition.k() != k) {
    throw ValidationError(fmt::format("transition must be {} x {} blocks of length {}", m, m, k));
  }
  if (tau2.size() != m || !(tau2.array() > 0.0).all()) {
    throw ValidationError("tau2 must hold M positive values");
  }
  if (sigma2.rows() != t || sigma2.cols() != m || !(sigma2.array() > 0.0).all()) {
    throw ValidationError("sigma2 must be T x M and positive");
  }
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (!(range_factor > 0.0)) throw ValidationError("range_factor must be positive");
}

TransitionBlocks build_recovery_transition(const BasisGrid& grid) {
  const int k = static_cast<int>(grid.size());
  TransitionBlocks b(3, k, 0.0);
  b.block(0, 0).setConstant(0.8);
  b.block(1, 1).setConstant(0.6);
  b.block(2, 2).setConstant(0.6);
  b.block(1, 0).setConstant(-0.2);
  b.block(2, 1).setConstant(-0.2);
  for (int node = 0; node < k; ++node) {
    const double lat = grid.centers[static_cast<std::size_t>(node)].lat_deg() / 90.0;
    b.at(2, 0, node) = 0.4 * (1.0 - std::sqrt(std::abs(lat)));
    b.at(1, 2, node) = 0.3 * lat;
  }
  return b;
}

namespace {

SimSpec recovery_spec(int level, std::size_t nlat, std::size_t nlon, int t, std::uint64_t seed) {
  SimSpec s;
  s.grid_level = level;
  s.m = 3;
  s.t = t;
  s.nlat = nlat;
  s.nlon = nlon;
  s.tau2 = Eigen::VectorXd::Constant(3, 5.0);
  s.sigma2 = Eigen::MatrixXd::Constant(t, 3, 2.0);
  s.kappa = 2.0;
  s.transition = build_recovery_transition(build_icosahedral_grid(level));
  s.burn_in_steps = 100;
  s.seed = seed;
  return s;
}

}  // namespace

SimSpec full_recovery_spec(std::uint64_t seed) { return recovery_spec(1, 24, 48, 144, seed); }

SimSpec reduced_recovery_spec(std::uint64_t seed) { return recovery_spec(0, 12, 24, 60, seed); }

SimulatedData simulate_dataset(const SimSpec& spec, Rng& rng) {
  spec.validate();
  const BasisGrid grid = build_icosahedral_grid(spec.grid_level);
  const int k = static_cast<int>(grid.size());
  const int m = spec.m;
  const int mk = m * k;

  SimulatedData out;
  double largest = 0.0;
  for (double c : spec.transition.coefficients()) largest = std::max(largest, std::abs(c));
  if (largest >= 1.0) {
    out.warnings.push_back(fmt::format(
        "largest transition coefficient {:.3g} >= 1; the process may be non-stationary", largest));
  }

  const SparseMatrix sar = build_sar_matrix({grid, spec.kappa});
  const std::vector<double> tau2(spec.tau2.data(), spec.tau2.data() + spec.tau2.size());
  const SparseMatrix q_precision = build_innovation_precision(sar, tau2);
  Eigen::SimplicialLLT<SparseMatrix> llt(q_precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("innovation precision Cholesky factorization failed");
  }
  auto innovation = [&] {
    const Eigen::VectorXd z = rng.normal_vector(mk);
    return Eigen::VectorXd(llt.permutationPinv() * Eigen::VectorXd(llt.matrixU().solve(z)));
  };

  const SparseMatrix a = assemble_transition(spec.transition);
  Eigen::VectorXd alpha = rng.normal_vector(mk);
  for (int step = 0; step < spec.burn_in_steps; ++step) alpha = a * alpha + innovation();

  out.states.alphas.resize(mk, spec.t + 1);
  out.states.alphas.col(0) = alpha;
  for (int t = 1; t <= spec.t; ++t) {
    alpha = a * alpha + innovation();
    out.states.alphas.col(t) = alpha;
  }

  BasisSpec basis{grid, spec.range_factor, spec.locations()};
  const SparseMatrix phi = build_basis_matrix(basis);
  out.obs = ObservationTensor(spec.t, m, basis.obs_locations);
  for (int t = 0; t < spec.t; ++t) out.obs.time_labels[static_cast<std::size_t>(t)] = spec.start.plus_months(t);
  for (int t = 0; t < spec.t; ++t) {
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd mean = phi * out.states.alphas.col(t + 1).segment(i * k, k);
      const double sd = std::sqrt(spec.sigma2(t, i));
      for (int s = 0; s < out.obs.n; ++s) {
        out.obs.values[out.obs.index(t, i, s)] = mean[s] + sd * rng.normal();
      }
    }
  }
  return out;
}

}  // namespace mvstdm
