#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvstdm/basis.hpp"
#include "mvstdm/grid.hpp"

namespace mvstdm {

/// Constrained transition: an M x M array of length-K coefficient vectors.
/// Block (i, j) is the diagonal of A_ij, the effect of variable j at t-1 on
/// variable i at t. Storage is flat with index (i * M + j) * K + k, which is
/// also the layout of the regression coefficient vector in the sampler.
class TransitionBlocks {
 public:
  TransitionBlocks() = default;
  TransitionBlocks(int m, int k, double fill = 0.0);

  /// Own-lag blocks filled with `own`, cross-lag blocks with zero.
  static TransitionBlocks identity(int m, int k, double own = 1.0);

  int m() const { return m_; }
  int k() const { return k_; }

  double& at(int i, int j, int node) { return coef_[offset(i, j) + static_cast<std::size_t>(node)]; }
  double at(int i, int j, int node) const {
    return coef_[offset(i, j) + static_cast<std::size_t>(node)];
  }
  Eigen::Map<Eigen::VectorXd> block(int i, int j);
  Eigen::Map<const Eigen::VectorXd> block(int i, int j) const;

  const std::vector<double>& coefficients() const { return coef_; }
  std::vector<double>& coefficients() { return coef_; }

  bool operator==(const TransitionBlocks&) const = default;

 private:
  std::size_t offset(int i, int j) const {
    return static_cast<std::size_t>(i * m_ + j) * static_cast<std::size_t>(k_);
  }

  int m_ = 0;
  int k_ = 0;
  std::vector<double> coef_;
};

/// sigma2 is T x M (row t, column i); tau2 has length M.
struct VarianceParams {
  Eigen::MatrixXd sigma2;
  Eigen::VectorXd tau2;
};

struct Priors {
  Eigen::VectorXd m0;       // length MK
  Eigen::VectorXd c0_diag;  // diagonal of C0, length MK
  double a_sigma = 1.0;
  double b_sigma = 1.0;
  double a_tau = 1.0;
  double b_tau = 1.0;
  double lambda = 0.25;

  /// m0 = m0_value * 1, C0 = c0_value * I, remaining hyperparameters as given.
  static Priors uniform(int mk, double m0_value = 0.0, double c0_value = 1.0);
  void validate(int mk) const;
};

/// States alpha_0..alpha_T as the columns of an MK x (T+1) matrix; the
/// coefficients of variable i occupy rows [i*K, (i+1)*K).
struct StateSequence {
  Eigen::MatrixXd alphas;

  int horizon() const { return static_cast<int>(alphas.cols()) - 1; }
};

struct TimeLabel {
  int year = 1984;
  int month = 1;  // 1..12

  std::string str() const;
  static TimeLabel parse(const std::string& text);
  TimeLabel plus_months(int n) const;
  int months_since_epoch() const { return year * 12 + (month - 1); }
  auto operator<=>(const TimeLabel&) const = default;
};

/// T x M x N values with a mask (true = observed). Masked values are never read.
struct ObservationTensor {
  int t = 0;
  int m = 0;
  int n = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  std::vector<GeoPoint> locations;
  std::vector<TimeLabel> time_labels;
  std::vector<std::string> variables;

  ObservationTensor() = default;
  ObservationTensor(int t, int m, std::vector<GeoPoint> locations);

  std::size_t index(int time, int var, int loc) const {
    return (static_cast<std::size_t>(time) * static_cast<std::size_t>(m) +
            static_cast<std::size_t>(var)) *
               static_cast<std::size_t>(n) +
           static_cast<std::size_t>(loc);
  }
  double value(int time, int var, int loc) const { return values[index(time, var, loc)]; }
  bool observed(int time, int var, int loc) const { return mask[index(time, var, loc)] != 0; }
  std::size_t observed_count() const;

  /// Tensor restricted to one variable.
  ObservationTensor select_variable(int var) const;
};

/// Sparse MK x MK matrix whose (i, j) block is diag(blocks(i, j)).
SparseMatrix assemble_transition(const TransitionBlocks& blocks);

/// Inverse of assemble_transition: reads the block diagonals back.
TransitionBlocks extract_transition(const SparseMatrix& a, int m, int k);

/// Phi * a_ij, the raw projection of a coefficient vector onto the locations.
Eigen::VectorXd project_transition_raw(const SparseMatrix& phi, const Eigen::VectorXd& coef);

/// (Phi * a_ij) / (Phi * 1_K): basis-weighted local average of the block
/// coefficients at every location. Throws NumericalError naming the first
/// location whose basis row sums to zero.
Eigen::VectorXd project_transition_block(const SparseMatrix& phi, const Eigen::VectorXd& coef);

/// Gaussian log density of the observed entries given states and sigma2.
double log_likelihood(const ObservationTensor& obs, const StateSequence& states,
                      const SparseMatrix& phi, const Eigen::MatrixXd& sigma2);

/// {M, K, blocks:[[[K reals] x M] x M]}.
std::string transition_to_json(const TransitionBlocks& blocks);
TransitionBlocks transition_from_json(const std::string& text);

}  // namespace mvstdm
