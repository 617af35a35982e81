#include "mvstdm/model.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "mvstdm/errors.hpp"

namespace mvstdm {

TransitionBlocks::TransitionBlocks(int m, int k, double fill) : m_(m), k_(k) {
  if (m < 1 || k < 1) throw ValidationError(fmt::format("invalid transition dims M={} K={}", m, k));
  coef_.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m) *
                   static_cast<std::size_t>(k),
               fill);
}

TransitionBlocks TransitionBlocks::identity(int m, int k, double own) {
  TransitionBlocks b(m, k, 0.0);
  for (int i = 0; i < m; ++i) b.block(i, i).setConstant(own);
  return b;
}

Eigen::Map<Eigen::VectorXd> TransitionBlocks::block(int i, int j) {
  return {coef_.data() + offset(i, j), k_};
}

Eigen::Map<const Eigen::VectorXd> TransitionBlocks::block(int i, int j) const {
  return {coef_.data() + offset(i, j), k_};
}

Priors Priors::uniform(int mk, double m0_value, double c0_value) {
  Priors p;
  p.m0 = Eigen::VectorXd::Constant(mk, m0_value);
  p.c0_diag = Eigen::VectorXd::Constant(mk, c0_value);
  return p;
}

void Priors::validate(int mk) const {
  if (m0.size() != mk || c0_diag.size() != mk) {
    throw ValidationError(fmt::format("prior m0/C0 length must be {}", mk));
  }
  if (!m0.allFinite()) throw ValidationError("prior m0 must be finite");
  if (!(c0_diag.array() > 0.0).all()) throw ValidationError("prior C0 entries must be positive");
  for (double h : {a_sigma, b_sigma, a_tau, b_tau, lambda}) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw ValidationError("prior hyperparameters must be positive and finite");
    }
  }
}

std::string TimeLabel::str() const { return fmt::format("{:04d}-{:02d}", year, month); }

TimeLabel TimeLabel::parse(const std::string& text) {
  TimeLabel t;
  char dash = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%d%c%d%n", &t.year, &dash, &t.month, &consumed) != 3 ||
      dash != '-' || t.month < 1 || t.month > 12 || consumed != static_cast<int>(text.size())) {
    throw ValidationError(fmt::format("bad time label '{}', expected YYYY-MM", text));
  }
  return t;
}

TimeLabel TimeLabel::plus_months(int n) const {
  const int idx = months_since_epoch() + n;
  return {idx / 12, idx % 12 + 1};
}

ObservationTensor::ObservationTensor(int t_, int m_, std::vector<GeoPoint> locs)
    : t(t_), m(m_), n(static_cast<int>(locs.size())), locations(std::move(locs)) {
  if (t < 1 || m < 1 || n < 1) {
    throw ValidationError(fmt::format("invalid tensor dims T={} M={} N={}", t, m, n));
  }
  const std::size_t total =
      static_cast<std::size_t>(t) * static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
  values.assign(total, 0.0);
  mask.assign(total, 1);
  time_labels.resize(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) time_labels[static_cast<std::size_t>(i)] = TimeLabel{}.plus_months(i);
  for (int i = 0; i < m; ++i) variables.push_back(fmt::format("var{}", i + 1));
}

std::size_t ObservationTensor::observed_count() const {
  std::size_t c = 0;
  for (auto v : mask) c += v != 0;
  return c;
}

ObservationTensor ObservationTensor::select_variable(int var) const {
  if (var < 0 || var >= m) throw ValidationError(fmt::format("variable index {} out of range", var));
  ObservationTensor out(t, 1, locations);
  out.time_labels = time_labels;
  out.variables = {variables[static_cast<std::size_t>(var)]};
  for (int time = 0; time < t; ++time) {
    for (int s = 0; s < n; ++s) {
      out.values[out.index(time, 0, s)] = value(time, var, s);
      out.mask[out.index(time, 0, s)] = mask[index(time, var, s)];
    }
  }
  return out;
}

SparseMatrix assemble_transition(const TransitionBlocks& blocks) {
  const int m = blocks.m();
  const int k = blocks.k();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(blocks.coefficients().size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int node = 0; node < k; ++node) {
        trip.emplace_back(i * k + node, j * k + node, blocks.at(i, j, node));
      }
    }
  }
  SparseMatrix a(m * k, m * k);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

TransitionBlocks extract_transition(const SparseMatrix& a, int m, int k) {
  if (a.rows() != m * k || a.cols() != m * k) throw ValidationError("transition size mismatch");
  TransitionBlocks blocks(m, k);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int node = 0; node < k; ++node) blocks.at(i, j, node) = a.coeff(i * k + node, j * k + node);
    }
  }
  return blocks;
}

Eigen::VectorXd project_transition_raw(const SparseMatrix& phi, const Eigen::VectorXd& coef) {
  if (coef.size() != phi.cols()) throw ValidationError("coefficient length must equal K");
  return phi * coef;
}

Eigen::VectorXd project_transition_block(const SparseMatrix& phi, const Eigen::VectorXd& coef) {
  const Eigen::VectorXd num = project_transition_raw(phi, coef);
  const Eigen::VectorXd den = phi * Eigen::VectorXd::Ones(phi.cols());
  for (Eigen::Index s = 0; s < den.size(); ++s) {
    if (den[s] == 0.0) {
      throw NumericalError(fmt::format(
          "basis row {} sums to zero; location lies outside every basis support", s));
    }
  }
  return num.cwiseQuotient(den);
}

double log_likelihood(const ObservationTensor& obs, const StateSequence& states,
                      const SparseMatrix& phi, const Eigen::MatrixXd& sigma2) {
  const int k = static_cast<int>(phi.cols());
  if (states.alphas.rows() != obs.m * k || states.horizon() != obs.t || phi.rows() != obs.n ||
      sigma2.rows() != obs.t || sigma2.cols() != obs.m) {
    throw ValidationError("log_likelihood dimension mismatch");
  }
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (int t = 0; t < obs.t; ++t) {
    for (int i = 0; i < obs.m; ++i) {
      const double v = sigma2(t, i);
      if (!(v > 0.0)) throw DomainError(fmt::format("sigma2({}, {}) must be positive", t, i));
      const Eigen::VectorXd mean = phi * states.alphas.col(t + 1).segment(i * k, k);
      for (int s = 0; s < obs.n; ++s) {
        if (!obs.observed(t, i, s)) continue;
        const double r = obs.value(t, i, s) - mean[s];
        total += -0.5 * (log2pi + std::log(v) + r * r / v);
      }
    }
  }
  return total;
}

std::string transition_to_json(const TransitionBlocks& blocks) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < blocks.m(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < blocks.m(); ++j) {
      const auto b = blocks.block(i, j);
      row.push_back(std::vector<double>(b.data(), b.data() + b.size()));
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json j{{"M", blocks.m()}, {"K", blocks.k()}, {"blocks", std::move(rows)}};
  return j.dump();
}

TransitionBlocks transition_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const int m = j.at("M").get<int>();
    const int k = j.at("K").get<int>();
    TransitionBlocks blocks(m, k);
    const auto& rows = j.at("blocks");
    if (rows.size() != static_cast<std::size_t>(m)) throw ValidationError("blocks must have M rows");
    for (int i = 0; i < m; ++i) {
      if (rows[i].size() != static_cast<std::size_t>(m)) throw ValidationError("blocks row length");
      for (int jj = 0; jj < m; ++jj) {
        const auto v = rows[i][jj].get<std::vector<double>>();
        if (v.size() != static_cast<std::size_t>(k)) throw ValidationError("block length must be K");
        for (int node = 0; node < k; ++node) blocks.at(i, jj, node) = v[static_cast<std::size_t>(node)];
      }
    }
    return blocks;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("invalid transition JSON: {}", e.what()));
  }
}

}  // namespace mvstdm
