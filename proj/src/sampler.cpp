#include "mvstdm/sampler.hpp"

#include <chrono>
#include <future>
#include <span>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mvstdm/errors.hpp"
#include "mvstdm/ffbs.hpp"

namespace mvstdm {

void SamplerConfig::validate() const {
  if (n_iter < 1) throw ValidationError("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) throw ValidationError("burn_in must lie in [0, n_iter)");
  if (thin < 1) throw ValidationError("thin must be >= 1");
  if (n_chains < 1) throw ValidationError("n_chains must be >= 1");
}

std::size_t PosteriorDraws::total_draws() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.size();
  return n;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> tau2_posterior(const StateSequence& states,
                                                           const TransitionBlocks& blocks,
                                                           const SparseMatrix& btb,
                                                           const Priors& priors) {
  const int m = blocks.m();
  const int k = blocks.k();
  const int horizon = states.horizon();
  if (horizon < 1) throw ValidationError("sample_tau2 needs T >= 1");
  if (states.alphas.rows() != m * k || btb.rows() != k) {
    throw ValidationError("sample_tau2 dimension mismatch");
  }
  const SparseMatrix a = assemble_transition(blocks);
  Eigen::VectorXd shape = Eigen::VectorXd::Constant(m, priors.a_tau + 0.5 * k * horizon);
  Eigen::VectorXd rate = Eigen::VectorXd::Constant(m, priors.b_tau);
  for (int t = 1; t <= horizon; ++t) {
    const Eigen::VectorXd eta = states.alphas.col(t) - a * states.alphas.col(t - 1);
    for (int i = 0; i < m; ++i) {
      const auto e = eta.segment(i * k, k);
      rate[i] += 0.5 * e.dot(btb * e);
    }
  }
  return {shape, rate};
}

Eigen::VectorXd sample_tau2(const StateSequence& states, const TransitionBlocks& blocks,
                            const SparseMatrix& btb, const Priors& priors, Rng& rng) {
  const auto [shape, rate] = tau2_posterior(states, blocks, btb, priors);
  Eigen::VectorXd out(shape.size());
  for (Eigen::Index i = 0; i < shape.size(); ++i) out[i] = rng.inv_gamma(shape[i], rate[i]);
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sigma2_posterior(const ObservationTensor& obs,
                                                             const StateSequence& states,
                                                             const SparseMatrix& phi,
                                                             const Priors& priors) {
  const int k = static_cast<int>(phi.cols());
  if (states.alphas.rows() != obs.m * k || states.horizon() != obs.t || phi.rows() != obs.n) {
    throw ValidationError("sample_sigma2 dimension mismatch");
  }
  Eigen::MatrixXd shape(obs.t, obs.m);
  Eigen::MatrixXd rate(obs.t, obs.m);
  for (int t = 0; t < obs.t; ++t) {
    for (int i = 0; i < obs.m; ++i) {
      const Eigen::VectorXd fitted = phi * states.alphas.col(t + 1).segment(i * k, k);
      double rss = 0.0;
      int n_obs = 0;
      for (int s = 0; s < obs.n; ++s) {
        if (!obs.observed(t, i, s)) continue;
        const double r = obs.value(t, i, s) - fitted[s];
        rss += r * r;
        ++n_obs;
      }
      shape(t, i) = priors.a_sigma + 0.5 * n_obs;
      rate(t, i) = priors.b_sigma + 0.5 * rss;
    }
  }
  return {shape, rate};
}

Eigen::MatrixXd sample_sigma2(const ObservationTensor& obs, const StateSequence& states,
                              const SparseMatrix& phi, const Priors& priors, Rng& rng) {
  const auto [shape, rate] = sigma2_posterior(obs, states, phi, priors);
  Eigen::MatrixXd out(obs.t, obs.m);
  for (int t = 0; t < obs.t; ++t) {
    for (int i = 0; i < obs.m; ++i) out(t, i) = rng.inv_gamma(shape(t, i), rate(t, i));
  }
  return out;
}

TransitionPosterior transition_posterior(const StateSequence& states, const SparseMatrix& btb,
                                         const Eigen::VectorXd& tau2, double lambda) {
  const int k = static_cast<int>(btb.rows());
  const int m = static_cast<int>(tau2.size());
  const int horizon = states.horizon();
  if (horizon < 2) {
    throw ValidationError(fmt::format("sample_transition needs T >= 2, got T={}", horizon));
  }
  if (states.alphas.rows() != m * k) throw ValidationError("sample_transition dimension mismatch");
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");

  const auto lagged = states.alphas.leftCols(horizon);
  const Eigen::MatrixXd cross = lagged * lagged.transpose();  // sum_t alpha_t alpha_t'
  const Eigen::Index mk = static_cast<Eigen::Index>(m) * k;
  const auto coef = [&](int i, int j, Eigen::Index node) {
    return static_cast<int>((static_cast<Eigen::Index>(i) * m + j) * k + node);
  };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(btb.nonZeros()) * m * m * m + static_cast<std::size_t>(mk * m));
  TransitionPosterior post;
  post.rhs.resize(mk * m);
  for (int i = 0; i < m; ++i) {
    const double w = 1.0 / tau2[i];
    for (int j = 0; j < m; ++j) {
      for (int jp = 0; jp < m; ++jp) {
        for (Eigen::Index c = 0; c < btb.outerSize(); ++c) {
          for (SparseMatrix::InnerIterator it(btb, c); it; ++it) {
            const double s = cross(j * k + it.row(), jp * k + it.col());
            trip.emplace_back(coef(i, j, it.row()), coef(i, jp, it.col()), w * it.value() * s);
          }
        }
      }
    }
    const Eigen::MatrixXd target = btb * states.alphas.block(i * k, 1, k, horizon);
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXd lin =
          (states.alphas.block(j * k, 0, k, horizon).cwiseProduct(target)).rowwise().sum();
      const double prior_mean = i == j ? 1.0 : 0.0;
      for (Eigen::Index node = 0; node < k; ++node) {
        post.rhs[coef(i, j, node)] = w * lin[node] + prior_mean / lambda;
      }
    }
  }
  for (Eigen::Index c = 0; c < mk * m; ++c) {
    trip.emplace_back(static_cast<int>(c), static_cast<int>(c), 1.0 / lambda);
  }
  post.precision.resize(mk * m, mk * m);
  post.precision.setFromTriplets(trip.begin(), trip.end());
  post.precision.makeCompressed();
  return post;
}

TransitionBlocks sample_transition(const StateSequence& states, const SparseMatrix& btb,
                                   const Eigen::VectorXd& tau2, const Priors& priors, Rng& rng) {
  const TransitionPosterior post = transition_posterior(states, btb, tau2, priors.lambda);
  Eigen::SimplicialLLT<SparseMatrix> llt(post.precision);
  if (llt.info() != Eigen::Success) {
    const Eigen::VectorXd d = post.precision.diagonal();
    throw NumericalError(fmt::format(
        "transition posterior precision is not positive definite (diagonal range [{:.3g}, {:.3g}])",
        d.minCoeff(), d.maxCoeff()));
  }
  const Eigen::VectorXd mean = llt.solve(post.rhs);
  const Eigen::VectorXd z = rng.normal_vector(mean.size());
  const Eigen::VectorXd noise = llt.permutationPinv() * Eigen::VectorXd(llt.matrixU().solve(z));
  const Eigen::VectorXd draw = mean + noise;

  const int m = static_cast<int>(tau2.size());
  const int k = static_cast<int>(btb.rows());
  TransitionBlocks out(m, k);
  std::copy(draw.data(), draw.data() + draw.size(), out.coefficients().begin());
  return out;
}

ChainDraws run_chain(const ObservationTensor& obs, const ModelSetup& setup, const Priors& priors,
                     const SamplerConfig& config, int chain, const ProgressFn& progress) {
  config.validate();
  const int k = setup.basis_size();
  const int m = obs.m;
  const int horizon = obs.t;
  const int mk = m * k;
  priors.validate(mk);
  if (setup.phi.rows() != obs.n) throw ValidationError("basis rows must equal location count");
  if (setup.sar.rows() != k || setup.sar.cols() != k) throw ValidationError("SAR matrix must be K x K");
  if (obs.observed_count() == 0) throw ValidationError("no observed entries to fit");

  const auto start = std::chrono::steady_clock::now();
  ChainDraws out;
  out.chain = chain;
  Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(chain));
  out.seed = config.seed;

  const bool estimate_a = setup.estimate_transition && horizon >= 2;
  if (setup.estimate_transition && !estimate_a) {
    out.warnings.push_back(
        fmt::format("T={} leaves too few transitions; A is held at the identity", horizon));
  }

  const SparseMatrix btb = sar_precision(setup.sar);
  const ObservationModel om(obs, setup.phi);

  Eigen::MatrixXd sigma2 = Eigen::MatrixXd::Ones(horizon, m);
  Eigen::VectorXd tau2 = Eigen::VectorXd::Ones(m);
  TransitionBlocks blocks = TransitionBlocks::identity(m, k);
  StateSequence states;
  states.alphas.resize(mk, horizon + 1);
  for (int t = 0; t <= horizon; ++t) states.alphas.col(t) = rng.normal_vector(mk);

  const int kept = config.retained();
  out.iterations.reserve(static_cast<std::size_t>(kept));
  for (int iter = 0; iter < config.n_iter; ++iter) {
    try {
      tau2 = sample_tau2(states, blocks, btb, priors, rng);
      sigma2 = sample_sigma2(obs, states, setup.phi, priors, rng);
      if (estimate_a) blocks = sample_transition(states, btb, tau2, priors, rng);
      const SparseMatrix q_precision =
          build_innovation_precision(setup.sar, std::span<const double>(tau2.data(), static_cast<std::size_t>(tau2.size())));
      states = ffbs(om, sigma2, assemble_transition(blocks), q_precision, priors.m0,
                    priors.c0_diag, rng);
    } catch (const NumericalError& e) {
      throw NumericalError(fmt::format("chain {} iteration {}: {}", chain, iter, e.what()));
    }
    if (iter >= config.burn_in && (iter - config.burn_in) % config.thin == 0) {
      out.iterations.push_back(iter);
      out.tau2.push_back(tau2);
      out.sigma2.push_back(sigma2);
      out.transition.push_back(blocks);
      if (config.store_states) out.states.push_back(states.alphas);
    }
    if (progress) progress(chain, iter);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PosteriorDraws run_chains(const ObservationTensor& obs, const ModelSetup& setup,
                          const Priors& priors, const SamplerConfig& config,
                          const ProgressFn& progress) {
  config.validate();
  PosteriorDraws draws;
  draws.m = obs.m;
  draws.k = setup.basis_size();
  draws.t = obs.t;
  draws.transition_estimated = setup.estimate_transition && obs.t >= 2;

  std::vector<std::future<ChainDraws>> jobs;
  for (int c = 0; c < config.n_chains; ++c) {
    jobs.push_back(std::async(std::launch::async, [&, c] {
      return run_chain(obs, setup, priors, config, c, progress);
    }));
  }
  std::vector<std::string> failures;
  bool numerical = false;
  for (int c = 0; c < config.n_chains; ++c) {
    try {
      draws.chains.push_back(jobs[static_cast<std::size_t>(c)].get());
    } catch (const ValidationError& e) {
      failures.push_back(fmt::format("chain {}: {}", c, e.what()));
    } catch (const std::exception& e) {
      failures.push_back(fmt::format("chain {}: {}", c, e.what()));
      numerical = true;
    }
  }
  if (!failures.empty()) {
    const std::string msg = fmt::format("{} of {} chains failed: {}", failures.size(),
                                        config.n_chains, fmt::join(failures, "; "));
    if (numerical) throw NumericalError(msg);
    throw ValidationError(msg);
  }
  return draws;
}

}  // namespace mvstdm
