#include "mvstdm/ffbs.hpp"

#include <map>

#include <fmt/format.h>

#include "mvstdm/errors.hpp"

namespace mvstdm {

namespace {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Llt = Eigen::LLT<Eigen::MatrixXd>;

Eigen::MatrixXd masked_gram(const RowSparse& phi, const std::vector<std::uint8_t>& pattern) {
  const Eigen::Index k = phi.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index s = 0; s < phi.rows(); ++s) {
    if (!pattern[static_cast<std::size_t>(s)]) continue;
    for (RowSparse::InnerIterator a(phi, s); a; ++a) {
      for (RowSparse::InnerIterator b(phi, s); b; ++b) g(a.col(), b.col()) += a.value() * b.value();
    }
  }
  return g;
}

struct ForwardPass {
  std::vector<Eigen::VectorXd> info;  // C_t^{-1} m_t, t = 0..T
  std::vector<Llt> smoother;          // factor of C_t^{-1} + A'Q^{-1}A, t = 0..T-1
  Llt last;                           // factor of C_T^{-1}
  Eigen::MatrixXd means;              // m_t as columns
  Eigen::MatrixXd qinv_a;             // Q^{-1} A
};

void check_inputs(const ObservationModel& om, const Eigen::MatrixXd& sigma2,
                  const SparseMatrix& a, const SparseMatrix& qinv, const Eigen::VectorXd& m0,
                  const Eigen::VectorXd& c0) {
  const Eigen::Index n = static_cast<Eigen::Index>(om.variables()) * om.basis_size();
  if (a.rows() != n || a.cols() != n || qinv.rows() != n || qinv.cols() != n || m0.size() != n ||
      c0.size() != n) {
    throw ValidationError(fmt::format("ffbs: state dimension mismatch (expected {})", n));
  }
  if (sigma2.rows() != om.horizon() || sigma2.cols() != om.variables()) {
    throw ValidationError("ffbs: sigma2 must be T x M");
  }
  if (!(sigma2.array() > 0.0).all()) throw DomainError("ffbs: sigma2 must be positive");
  if (!(c0.array() > 0.0).all()) throw DomainError("ffbs: C0 must be positive");
}

ForwardPass forward(const ObservationModel& om, const Eigen::MatrixXd& sigma2,
                    const SparseMatrix& a, const SparseMatrix& qinv, const Eigen::VectorXd& m0,
                    const Eigen::VectorXd& c0) {
  check_inputs(om, sigma2, a, qinv, m0, c0);
  const int horizon = om.horizon();
  const int m = om.variables();
  const int k = om.basis_size();
  const Eigen::Index n = static_cast<Eigen::Index>(m) * k;

  ForwardPass fp;
  fp.info.reserve(static_cast<std::size_t>(horizon) + 1);
  fp.smoother.reserve(static_cast<std::size_t>(horizon));
  fp.means.resize(n, horizon + 1);

  const Eigen::MatrixXd qinv_dense = Eigen::MatrixXd(qinv);
  const SparseMatrix qinv_a_sparse = qinv * a;
  fp.qinv_a = Eigen::MatrixXd(qinv_a_sparse);
  const Eigen::MatrixXd at_qinv_a = Eigen::MatrixXd(SparseMatrix(a.transpose()) * qinv_a_sparse);

  Eigen::MatrixXd c_inv = c0.cwiseInverse().asDiagonal();
  Eigen::VectorXd info = m0.cwiseQuotient(c0);
  fp.means.col(0) = m0;
  fp.info.push_back(info);

  for (int t = 1; t <= horizon; ++t) {
    Eigen::MatrixXd p = c_inv + at_qinv_a;
    Llt p_llt(p);
    if (p_llt.info() != Eigen::Success) {
      throw NumericalError(fmt::format("ffbs: smoothing precision not positive definite at t={}", t - 1));
    }
    const Eigen::MatrixXd gain = p_llt.solve(fp.qinv_a.transpose());
    Eigen::MatrixXd r_inv = qinv_dense - fp.qinv_a * gain;
    r_inv = 0.5 * (r_inv + r_inv.transpose()).eval();
    fp.smoother.push_back(std::move(p_llt));

    const Eigen::VectorXd a_t = a * fp.means.col(t - 1);
    info = r_inv * a_t;
    c_inv = std::move(r_inv);
    for (int i = 0; i < m; ++i) {
      const Eigen::MatrixXd* g = om.gram(t - 1, i);
      if (!g) continue;
      const double w = 1.0 / sigma2(t - 1, i);
      c_inv.block(i * k, i * k, k, k) += w * (*g);
      info.segment(i * k, k) += w * om.projected(t - 1, i);
    }

    Llt c_llt(c_inv);
    if (c_llt.info() != Eigen::Success) {
      throw NumericalError(fmt::format("ffbs: filter covariance lost positive definiteness at t={}", t));
    }
    fp.means.col(t) = c_llt.solve(info);
    fp.info.push_back(info);
    if (t == horizon) fp.last = std::move(c_llt);
  }
  if (horizon == 0) fp.last = Llt(c_inv);
  return fp;
}

}  // namespace

ObservationModel::ObservationModel(const ObservationTensor& obs, const SparseMatrix& phi)
    : t_(obs.t), m_(obs.m), k_(static_cast<int>(phi.cols())) {
  if (phi.rows() != obs.n) {
    throw ValidationError(
        fmt::format("basis has {} rows but the tensor has {} locations", phi.rows(), obs.n));
  }
  const RowSparse phi_rows = phi;
  projected_ = Eigen::MatrixXd::Zero(k_, static_cast<Eigen::Index>(t_) * m_);
  gram_index_.assign(static_cast<std::size_t>(t_) * static_cast<std::size_t>(m_), -1);
  std::map<std::vector<std::uint8_t>, int> seen;
  std::vector<std::uint8_t> pattern(static_cast<std::size_t>(obs.n));
  Eigen::VectorXd y(obs.n);
  for (int t = 0; t < t_; ++t) {
    for (int i = 0; i < m_; ++i) {
      bool any = false;
      for (int s = 0; s < obs.n; ++s) {
        const bool o = obs.observed(t, i, s);
        pattern[static_cast<std::size_t>(s)] = o ? 1 : 0;
        y[s] = o ? obs.value(t, i, s) : 0.0;
        any = any || o;
      }
      const std::size_t slot = static_cast<std::size_t>(t) * static_cast<std::size_t>(m_) +
                               static_cast<std::size_t>(i);
      projected_.col(static_cast<Eigen::Index>(slot)) = phi.transpose() * y;
      if (!any) continue;
      auto [it, fresh] = seen.try_emplace(pattern, static_cast<int>(grams_.size()));
      if (fresh) grams_.push_back(masked_gram(phi_rows, pattern));
      gram_index_[slot] = it->second;
    }
  }
}

const Eigen::MatrixXd* ObservationModel::gram(int t, int i) const {
  const int idx = gram_index_[static_cast<std::size_t>(t) * static_cast<std::size_t>(m_) +
                              static_cast<std::size_t>(i)];
  return idx < 0 ? nullptr : &grams_[static_cast<std::size_t>(idx)];
}

Eigen::Ref<const Eigen::VectorXd> ObservationModel::projected(int t, int i) const {
  return projected_.col(static_cast<Eigen::Index>(t) * m_ + i);
}

StateSequence ffbs(const ObservationModel& om, const Eigen::MatrixXd& sigma2,
                   const SparseMatrix& transition, const SparseMatrix& q_precision,
                   const Eigen::VectorXd& m0, const Eigen::VectorXd& c0_diag, Rng& rng) {
  ForwardPass fp = forward(om, sigma2, transition, q_precision, m0, c0_diag);
  const int horizon = om.horizon();
  const Eigen::Index n = m0.size();

  StateSequence out;
  out.alphas.resize(n, horizon + 1);
  out.alphas.col(horizon) =
      fp.means.col(horizon) + fp.last.matrixU().solve(rng.normal_vector(n));
  for (int t = horizon - 1; t >= 0; --t) {
    const Llt& p = fp.smoother[static_cast<std::size_t>(t)];
    const Eigen::VectorXd lin =
        fp.info[static_cast<std::size_t>(t)] + fp.qinv_a.transpose() * out.alphas.col(t + 1);
    out.alphas.col(t) = p.solve(lin) + p.matrixU().solve(rng.normal_vector(n));
  }
  return out;
}

StateSequence ffbs(const ObservationTensor& obs, const SparseMatrix& phi,
                   const Eigen::MatrixXd& sigma2, const SparseMatrix& transition,
                   const SparseMatrix& q_precision, const Eigen::VectorXd& m0,
                   const Eigen::VectorXd& c0_diag, Rng& rng) {
  return ffbs(ObservationModel(obs, phi), sigma2, transition, q_precision, m0, c0_diag, rng);
}

Eigen::MatrixXd filter_means(const ObservationModel& om, const Eigen::MatrixXd& sigma2,
                             const SparseMatrix& transition, const SparseMatrix& q_precision,
                             const Eigen::VectorXd& m0, const Eigen::VectorXd& c0_diag) {
  return forward(om, sigma2, transition, q_precision, m0, c0_diag).means;
}

}  // namespace mvstdm
