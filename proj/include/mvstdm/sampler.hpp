#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvstdm/basis.hpp"
#include "mvstdm/model.hpp"
#include "mvstdm/random.hpp"

namespace mvstdm {

struct SamplerConfig {
  int n_iter = 1500;
  int burn_in = 500;
  int thin = 1;
  std::uint64_t seed = 1;
  int n_chains = 1;
  bool store_states = false;

  void validate() const;
  /// Number of draws kept per chain: ceil((n_iter - burn_in) / thin).
  int retained() const { return (n_iter - burn_in + thin - 1) / thin; }
};

/// Fixed structure of the model being fitted.
struct ModelSetup {
  SparseMatrix phi;  // N x K basis
  SparseMatrix sar;  // K x K SAR matrix B
  /// false: A stays at its initial value (identity) for the whole chain.
  bool estimate_transition = true;

  int basis_size() const { return static_cast<int>(phi.cols()); }
};

struct ChainDraws {
  int chain = 0;
  std::uint64_t seed = 0;
  std::vector<int> iterations;
  std::vector<Eigen::VectorXd> tau2;
  std::vector<Eigen::MatrixXd> sigma2;        // T x M each
  std::vector<TransitionBlocks> transition;
  std::vector<Eigen::MatrixXd> states;        // MK x (T+1) each, when stored
  double seconds = 0.0;
  std::vector<std::string> warnings;

  std::size_t size() const { return iterations.size(); }
};

struct PosteriorDraws {
  int m = 0;
  int k = 0;
  int t = 0;
  bool transition_estimated = true;
  std::vector<ChainDraws> chains;

  std::size_t total_draws() const;
};

/// tau2_i ~ IG(a_tau + K T / 2, b_tau + 1/2 sum_t eta_t' B'B eta_t),
/// eta_t = alpha_t - A alpha_{t-1} restricted to variable i.
Eigen::VectorXd sample_tau2(const StateSequence& states, const TransitionBlocks& blocks,
                            const SparseMatrix& btb, const Priors& priors, Rng& rng);

/// Shape and rate of the tau2 full conditionals (for tests and diagnostics).
std::pair<Eigen::VectorXd, Eigen::VectorXd> tau2_posterior(const StateSequence& states,
                                                           const TransitionBlocks& blocks,
                                                           const SparseMatrix& btb,
                                                           const Priors& priors);

/// sigma2_it ~ IG(a_sigma + n_obs / 2, b_sigma + 1/2 ||observed residuals||^2).
/// Draws run over t, then i. Fully masked (t, i) draws come from the prior.
Eigen::MatrixXd sample_sigma2(const ObservationTensor& obs, const StateSequence& states,
                              const SparseMatrix& phi, const Priors& priors, Rng& rng);

/// Shape (first) and rate (second) of every sigma2_it full conditional, T x M.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sigma2_posterior(const ObservationTensor& obs,
                                                             const StateSequence& states,
                                                             const SparseMatrix& phi,
                                                             const Priors& priors);

/// Gaussian full conditional of the stacked transition coefficients, in the
/// flat TransitionBlocks layout. Precision is sparse and block diagonal
/// across target variables.
struct TransitionPosterior {
  SparseMatrix precision;
  Eigen::VectorXd rhs;  // precision * mean
};

TransitionPosterior transition_posterior(const StateSequence& states, const SparseMatrix& btb,
                                         const Eigen::VectorXd& tau2, double lambda);

/// vec(A~) ~ N(m_A, C_A) with C_A^{-1} = sum_t X_t' Q^{-1} X_t + I/lambda and
/// prior mean 1 on own-lag, 0 on cross-lag coefficients. Needs T >= 2.
TransitionBlocks sample_transition(const StateSequence& states, const SparseMatrix& btb,
                                   const Eigen::VectorXd& tau2, const Priors& priors, Rng& rng);

using ProgressFn = std::function<void(int chain, int iteration)>;

/// One Gibbs chain, using RNG substream `chain` of config.seed. Starts from
/// sigma2 = 1, tau2 = 1, A = I and standard-normal alpha_0..alpha_T, then
/// cycles tau2, sigma2, A, alpha.
ChainDraws run_chain(const ObservationTensor& obs, const ModelSetup& setup, const Priors& priors,
                     const SamplerConfig& config, int chain = 0,
                     const ProgressFn& progress = nullptr);

/// config.n_chains independent chains run concurrently; chain c equals
/// run_chain(..., c). Failures from every chain are collected into one error.
PosteriorDraws run_chains(const ObservationTensor& obs, const ModelSetup& setup,
                          const Priors& priors, const SamplerConfig& config,
                          const ProgressFn& progress = nullptr);

}  // namespace mvstdm
