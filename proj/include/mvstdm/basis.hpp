#pragma once

#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "mvstdm/grid.hpp"

namespace mvstdm {

/// Compressed sparse real matrix used for the basis, SAR and precision products.
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Values with magnitude below this are never stored.
inline constexpr double kStructuralZero = 1e-15;

struct BasisSpec {
  BasisGrid grid;
  double range_factor = 2.5;
  std::vector<GeoPoint> obs_locations;
};

struct SarSpec {
  BasisGrid grid;
  double kappa = 2.0;
};

/// Compactly supported Wendland kernel (1-d)^6 (35d^2 + 18d + 3) / 3 on [0,1].
double wendland(double d);

/// Support radius of every basis function: range_factor * mesh_spacing(grid).
double basis_range(const BasisSpec& spec);

/// N x K basis matrix; entry (s,k) is wendland(distance(s, center_k) / range).
SparseMatrix build_basis_matrix(const BasisSpec& spec);

/// K x K SAR matrix: 1 + kappa^2 on the diagonal, -1/n_i for neighbors j of i.
SparseMatrix build_sar_matrix(const SarSpec& spec);

/// Innovation precision blockdiag(B'B / tau2_1, ..., B'B / tau2_M).
SparseMatrix build_innovation_precision(const SparseMatrix& sar, std::span<const double> tau2);

/// I_M (x) Phi.
SparseMatrix expand_basis(const SparseMatrix& phi, int m);

/// B'B with structural zeros pruned.
SparseMatrix sar_precision(const SparseMatrix& sar);

}  // namespace mvstdm
