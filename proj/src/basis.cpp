#include "mvstdm/basis.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mvstdm/errors.hpp"

namespace mvstdm {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

double wendland(double d) {
  if (!(d >= 0.0)) throw DomainError(fmt::format("wendland distance must be >= 0, got {}", d));
  if (d >= 1.0) return 0.0;
  const double u = 1.0 - d;
  const double u2 = u * u;
  return u2 * u2 * u2 * (35.0 * d * d + 18.0 * d + 3.0) / 3.0;
}

double basis_range(const BasisSpec& spec) {
  if (!(spec.range_factor > 0.0)) {
    throw DomainError(fmt::format("range_factor must be positive, got {}", spec.range_factor));
  }
  return spec.range_factor * mesh_spacing(spec.grid);
}

SparseMatrix build_basis_matrix(const BasisSpec& spec) {
  if (spec.obs_locations.empty()) throw ValidationError("basis needs at least one location");
  const double theta = basis_range(spec);
  const auto& centers = spec.grid.centers;
  std::vector<Triplet> trip;
  for (std::size_t s = 0; s < spec.obs_locations.size(); ++s) {
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double v = wendland(great_circle_distance(spec.obs_locations[s], centers[k]) / theta);
      if (v >= kStructuralZero) {
        trip.emplace_back(static_cast<int>(s), static_cast<int>(k), v);
      }
    }
  }
  return from_triplets(static_cast<Eigen::Index>(spec.obs_locations.size()),
                       static_cast<Eigen::Index>(centers.size()), trip);
}

SparseMatrix build_sar_matrix(const SarSpec& spec) {
  if (!(spec.kappa > 0.0)) {
    throw DomainError(fmt::format("kappa must be greater than 0, got {}", spec.kappa));
  }
  const std::size_t k = spec.grid.size();
  std::vector<Triplet> trip;
  for (std::size_t i = 0; i < k; ++i) {
    const int row = static_cast<int>(i);
    trip.emplace_back(row, row, 1.0 + spec.kappa * spec.kappa);
    const auto& nbrs = spec.grid.adjacency[i];
    const double w = -1.0 / static_cast<double>(nbrs.size());
    for (std::size_t j : nbrs) trip.emplace_back(row, static_cast<int>(j), w);
  }
  const auto n = static_cast<Eigen::Index>(k);
  return from_triplets(n, n, trip);
}

SparseMatrix sar_precision(const SparseMatrix& sar) {
  SparseMatrix btb = (sar.transpose() * sar).pruned(1.0, kStructuralZero);
  btb.makeCompressed();
  return btb;
}

SparseMatrix build_innovation_precision(const SparseMatrix& sar, std::span<const double> tau2) {
  for (std::size_t i = 0; i < tau2.size(); ++i) {
    if (!(tau2[i] > 0.0)) {
      throw DomainError(fmt::format("tau2[{}] must be positive, got {}", i, tau2[i]));
    }
  }
  const SparseMatrix btb = sar_precision(sar);
  const Eigen::Index k = btb.rows();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(btb.nonZeros()) * tau2.size());
  for (std::size_t i = 0; i < tau2.size(); ++i) {
    const Eigen::Index off = static_cast<Eigen::Index>(i) * k;
    for (Eigen::Index c = 0; c < btb.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(btb, c); it; ++it) {
        trip.emplace_back(static_cast<int>(off + it.row()), static_cast<int>(off + it.col()),
                          it.value() / tau2[i]);
      }
    }
  }
  const Eigen::Index n = k * static_cast<Eigen::Index>(tau2.size());
  return from_triplets(n, n, trip);
}

SparseMatrix expand_basis(const SparseMatrix& phi, int m) {
  if (m < 1) throw ValidationError(fmt::format("variable count must be >= 1, got {}", m));
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(phi.nonZeros()) * static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const Eigen::Index ro = i * phi.rows();
    const Eigen::Index co = i * phi.cols();
    for (Eigen::Index c = 0; c < phi.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(phi, c); it; ++it) {
        trip.emplace_back(static_cast<int>(ro + it.row()), static_cast<int>(co + it.col()),
                          it.value());
      }
    }
  }
  return from_triplets(phi.rows() * m, phi.cols() * m, trip);
}

}  // namespace mvstdm
