#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mvstdm/basis.hpp"
#include "mvstdm/model.hpp"
#include "mvstdm/random.hpp"

namespace mvstdm {

/// Observation-side quantities of the measurement equation that do not change
/// between Gibbs iterations: for every (t, i) the masked Gram matrix
/// Phi' diag(mask) Phi and the masked projection Phi' (mask .* y).
///
/// V_t is diagonal, so the measurement update only ever needs these sums
/// scaled by 1 / sigma2_it. Identical mask patterns share one Gram matrix.
class ObservationModel {
 public:
  ObservationModel(const ObservationTensor& obs, const SparseMatrix& phi);

  int horizon() const { return t_; }
  int variables() const { return m_; }
  int basis_size() const { return k_; }

  /// Gram matrix for (t, i), or nullptr when nothing is observed.
  const Eigen::MatrixXd* gram(int t, int i) const;
  /// Phi' (mask .* y) for (t, i), length K.
  Eigen::Ref<const Eigen::VectorXd> projected(int t, int i) const;

 private:
  int t_ = 0, m_ = 0, k_ = 0;
  std::vector<Eigen::MatrixXd> grams_;
  std::vector<int> gram_index_;  // per (t, i); -1 when fully masked
  Eigen::MatrixXd projected_;    // K x (T*M)
};

/// One joint draw of alpha_0..alpha_T from p(alpha | y, A, Q, V).
///
/// Forward pass in information form. With P = C_{t-1}^{-1} + A'Q^{-1}A,
///   R_t^{-1} = Q^{-1} - Q^{-1} A P^{-1} A' Q^{-1},
///   C_t^{-1} = R_t^{-1} + sum_i Gram_it / sigma2_it,
///   C_t^{-1} m_t = R_t^{-1} A m_{t-1} + sum_i Phi'y_it / sigma2_it.
/// Backward pass: alpha_t | alpha_{t+1} ~ N(P^{-1}(C_t^{-1} m_t + A'Q^{-1} alpha_{t+1}), P^{-1}).
/// Normals are consumed MK at a time, for t = T down to 0.
///
/// Throws NumericalError naming the time index where a factorization fails.
StateSequence ffbs(const ObservationModel& om, const Eigen::MatrixXd& sigma2,
                   const SparseMatrix& transition, const SparseMatrix& q_precision,
                   const Eigen::VectorXd& m0, const Eigen::VectorXd& c0_diag, Rng& rng);

/// Convenience overload building the ObservationModel on the fly.
StateSequence ffbs(const ObservationTensor& obs, const SparseMatrix& phi,
                   const Eigen::MatrixXd& sigma2, const SparseMatrix& transition,
                   const SparseMatrix& q_precision, const Eigen::VectorXd& m0,
                   const Eigen::VectorXd& c0_diag, Rng& rng);

/// Filtered means m_0..m_T (columns), the forward pass alone.
Eigen::MatrixXd filter_means(const ObservationModel& om, const Eigen::MatrixXd& sigma2,
                             const SparseMatrix& transition, const SparseMatrix& q_precision,
                             const Eigen::VectorXd& m0, const Eigen::VectorXd& c0_diag);

}  // namespace mvstdm
