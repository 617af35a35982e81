// Independent reference computations used by the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "mvstdm/basis.hpp"
#include "mvstdm/model.hpp"

namespace oracle {

/// Angle between unit vectors, through the dot product.
inline double arc(const mvstdm::GeoPoint& p, const mvstdm::GeoPoint& q) {
  const Eigen::Vector3d a(std::cos(p.lat) * std::cos(p.lon), std::cos(p.lat) * std::sin(p.lon),
                          std::sin(p.lat));
  const Eigen::Vector3d b(std::cos(q.lat) * std::cos(q.lon), std::cos(q.lat) * std::sin(q.lon),
                          std::sin(q.lat));
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

inline double wendland(double d) {
  if (d >= 1.0) return 0.0;
  return std::pow(1.0 - d, 6) * (35.0 * d * d + 18.0 * d + 3.0) / 3.0;
}

/// P(X <= x) for X ~ IG(shape, rate).
inline double inv_gamma_cdf(double x, double shape, double rate) {
  return boost::math::gamma_q(shape, rate / x);
}

/// Asymptotic two-sided one-sample KS p-value with the Stephens correction.
inline double ks_pvalue(std::vector<double> draws, double shape, double rate) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = inv_gamma_cdf(draws[i], shape, rate);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

/// Exact conditional moments of alpha_0..alpha_T (stacked) given the observed
/// entries, by dense Gaussian conditioning in covariance form.
struct Conditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline Conditional ffbs_conditional(const mvstdm::ObservationTensor& obs, const Eigen::MatrixXd& phi,
                                    const Eigen::MatrixXd& sigma2, const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& q, const Eigen::VectorXd& m0,
                                    const Eigen::MatrixXd& c0) {
  const int mk = static_cast<int>(a.rows());
  const int k = static_cast<int>(phi.cols());
  const int t_max = obs.t;
  const int dim = mk * (t_max + 1);
  // Prior moments of the stacked state.
  Eigen::VectorXd mu(dim);
  Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<Eigen::MatrixXd> marg(static_cast<std::size_t>(t_max + 1));
  mu.segment(0, mk) = m0;
  marg[0] = c0;
  for (int t = 1; t <= t_max; ++t) {
    mu.segment(t * mk, mk) = a * mu.segment((t - 1) * mk, mk);
    marg[static_cast<std::size_t>(t)] = a * marg[static_cast<std::size_t>(t - 1)] * a.transpose() + q;
  }
  for (int s = 0; s <= t_max; ++s) {
    Eigen::MatrixXd block = marg[static_cast<std::size_t>(s)];  // Cov(alpha_t, alpha_s), t >= s
    for (int t = s; t <= t_max; ++t) {
      if (t > s) block = a * block;
      sig.block(t * mk, s * mk, mk, mk) = block;
      sig.block(s * mk, t * mk, mk, mk) = block.transpose();
    }
  }
  // Observed entries y = H alpha + eps.
  std::vector<int> rows_t, rows_i, rows_s;
  for (int t = 0; t < t_max; ++t)
    for (int i = 0; i < obs.m; ++i)
      for (int s = 0; s < obs.n; ++s)
        if (obs.observed(t, i, s)) {
          rows_t.push_back(t);
          rows_i.push_back(i);
          rows_s.push_back(s);
        }
  const int ny = static_cast<int>(rows_t.size());
  if (ny == 0) return {mu, sig};
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(ny, dim);
  Eigen::VectorXd y(ny), noise(ny);
  for (int r = 0; r < ny; ++r) {
    const int t = rows_t[static_cast<std::size_t>(r)], i = rows_i[static_cast<std::size_t>(r)],
              s = rows_s[static_cast<std::size_t>(r)];
    h.block(r, (t + 1) * mk + i * k, 1, k) = phi.row(s);
    y[r] = obs.value(t, i, s);
    noise[r] = sigma2(t, i);
  }
  Eigen::MatrixXd syy = h * sig * h.transpose();
  syy.diagonal() += noise;
  const Eigen::MatrixXd say = sig * h.transpose();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(syy);
  Conditional out;
  out.mean = mu + say * ldlt.solve(y - h * mu);
  out.cov = sig - say * ldlt.solve(say.transpose());
  return out;
}

}  // namespace oracle
