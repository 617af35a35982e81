// Monte-Carlo comparison of FFBS draws with the dense conditional.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mvstdm/ffbs.hpp"
#include "mvstdm/grid.hpp"
#include "oracles.hpp"

namespace ffbs_check {

struct Toy {
  std::string name;
  mvstdm::ObservationTensor obs;
  Eigen::MatrixXd phi, sigma2, a, q_precision;
  Eigen::VectorXd m0, c0_diag;
};

struct Result {
  double max_mean_z = 0.0;       // |sample mean - exact| / MC standard error
  double max_cov_rel = 0.0;      // |sample cov - exact| / sqrt(c_ii c_jj)
  double max_var_rel = 0.0;      // |sample var - exact| / exact
};

/// Random toy instance with M variables, K basis functions, T steps and N
/// locations. `missing` masks that fraction of entries; 1.0 masks all.
inline Toy make_toy(std::string name, int m, int k, int t, int n, double missing, std::uint64_t seed) {
  mvstdm::Rng rng(seed);
  Toy toy;
  toy.name = std::move(name);
  std::vector<mvstdm::GeoPoint> locs(static_cast<std::size_t>(n));
  toy.obs = mvstdm::ObservationTensor(t, m, locs);
  toy.phi = Eigen::MatrixXd(n, k);
  for (int s = 0; s < n; ++s)
    for (int j = 0; j < k; ++j) toy.phi(s, j) = rng.uniform();
  const int mk = m * k;
  // Diagonal-block transition with non-trivial cross-lags.
  toy.a = Eigen::MatrixXd::Zero(mk, mk);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int node = 0; node < k; ++node)
        toy.a(i * k + node, j * k + node) = i == j ? 0.5 + 0.4 * rng.uniform() : 0.6 * (rng.uniform() - 0.5);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(mk, mk);
  for (int r = 0; r < mk; ++r) {
    l(r, r) = 1.0 + rng.uniform();
    for (int c = 0; c < r; ++c) l(r, c) = 0.3 * (rng.uniform() - 0.5);
  }
  toy.q_precision = l * l.transpose();
  toy.sigma2 = Eigen::MatrixXd(t, m);
  for (int tt = 0; tt < t; ++tt)
    for (int i = 0; i < m; ++i) toy.sigma2(tt, i) = 0.3 + rng.uniform();
  toy.m0 = Eigen::VectorXd(mk);
  toy.c0_diag = Eigen::VectorXd(mk);
  for (int r = 0; r < mk; ++r) {
    toy.m0[r] = rng.normal();
    toy.c0_diag[r] = 0.5 + rng.uniform();
  }
  for (std::size_t e = 0; e < toy.obs.values.size(); ++e) {
    toy.obs.values[e] = 2.0 * rng.normal();
    toy.obs.mask[e] = rng.uniform() >= missing ? 1 : 0;
  }
  return toy;
}

inline std::vector<Toy> standard_toys() {
  std::vector<Toy> toys;
  toys.push_back(make_toy("M=1 K=2 T=3", 1, 2, 3, 4, 0.0, 11));
  toys.push_back(make_toy("M=1 K=2 T=1 all missing", 1, 2, 1, 3, 1.0, 12));
  toys.push_back(make_toy("M=2 K=3 T=4 partly missing", 2, 3, 4, 5, 0.3, 13));
  toys.push_back(make_toy("M=3 K=2 T=4 partly missing", 3, 2, 4, 3, 0.25, 14));
  toys.push_back(make_toy("M=2 K=2 T=2", 2, 2, 2, 2, 0.0, 15));
  return toys;
}

inline Result run(const Toy& toy, int draws, std::uint64_t seed) {
  const mvstdm::SparseMatrix phi = toy.phi.sparseView();
  const mvstdm::SparseMatrix a = toy.a.sparseView();
  const mvstdm::SparseMatrix qp = toy.q_precision.sparseView();
  const Eigen::MatrixXd q = toy.q_precision.inverse();
  const oracle::Conditional exact = oracle::ffbs_conditional(
      toy.obs, toy.phi, toy.sigma2, toy.a, q, toy.m0, toy.c0_diag.asDiagonal().toDenseMatrix());
  const mvstdm::ObservationModel om(toy.obs, phi);
  mvstdm::Rng rng(seed);
  const Eigen::Index dim = exact.mean.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(dim, dim);
  for (int d = 0; d < draws; ++d) {
    const mvstdm::StateSequence s = mvstdm::ffbs(om, toy.sigma2, a, qp, toy.m0, toy.c0_diag, rng);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(s.alphas.data(), dim) - exact.mean;
    sum += x;
    outer.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  const double n = draws;
  const Eigen::VectorXd centered_mean = sum / n;
  Eigen::MatrixXd cov = outer.selfadjointView<Eigen::Lower>();
  cov = (cov - n * centered_mean * centered_mean.transpose()) / (n - 1.0);
  Result r;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double se = std::sqrt(exact.cov(i, i) / n);
    r.max_mean_z = std::max(r.max_mean_z, std::abs(centered_mean[i]) / se);
    r.max_var_rel = std::max(r.max_var_rel, std::abs(cov(i, i) - exact.cov(i, i)) / exact.cov(i, i));
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double scale = std::sqrt(exact.cov(i, i) * exact.cov(j, j));
      r.max_cov_rel = std::max(r.max_cov_rel, std::abs(cov(i, j) - exact.cov(i, j)) / scale);
    }
  }
  return r;
}

}  // namespace ffbs_check
