#include "mvstdm/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "mvstdm/errors.hpp"
#include "mvstdm/random.hpp"

namespace mvstdm {

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ValidationError("summary of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  Summary s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.q025 = quantile(v, 0.025);
  s.q975 = quantile(v, 0.975);
  // Constant samples must report exactly (c, c, c).
  if (v.front() == v.back()) s.mean = s.q025 = s.q975 = v.front();
  return s;
}

PosteriorSummary posterior_summary(const PosteriorDraws& draws) {
  if (draws.total_draws() < 2) throw ValidationError("posterior summary needs at least 2 draws");
  PosteriorSummary out;
  out.m = draws.m;
  out.k = draws.k;
  out.t = draws.t;
  std::vector<double> buf;
  auto pooled = [&](auto&& get) {
    buf.clear();
    for (const auto& c : draws.chains) {
      for (std::size_t d = 0; d < c.size(); ++d) buf.push_back(get(c, d));
    }
    return summarize(buf);
  };
  for (int i = 0; i < draws.m; ++i) {
    out.tau2.push_back(pooled([i](const ChainDraws& c, std::size_t d) { return c.tau2[d][i]; }));
  }
  for (int t = 0; t < draws.t; ++t) {
    for (int i = 0; i < draws.m; ++i) {
      out.sigma2.push_back(
          pooled([t, i](const ChainDraws& c, std::size_t d) { return c.sigma2[d](t, i); }));
    }
  }
  if (draws.transition_estimated) {
    const std::size_t n = static_cast<std::size_t>(draws.m) * static_cast<std::size_t>(draws.m) *
                          static_cast<std::size_t>(draws.k);
    for (std::size_t e = 0; e < n; ++e) {
      out.transition.push_back(pooled(
          [e](const ChainDraws& c, std::size_t d) { return c.transition[d].coefficients()[e]; }));
    }
  }
  return out;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (chains.empty() || n < 4) throw ValidationError("split R-hat needs chains of length >= 4");
  const std::size_t half = n / 2;
  std::vector<std::vector<double>> parts;
  for (const auto& c : chains) {
    parts.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    parts.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(n - half),
                       c.begin() + static_cast<std::ptrdiff_t>(n));
  }
  const auto len = static_cast<double>(half);
  const auto count = static_cast<double>(parts.size());
  std::vector<double> means, vars;
  for (const auto& p : parts) {
    const double mu = std::accumulate(p.begin(), p.end(), 0.0) / len;
    double ss = 0.0;
    for (double x : p) ss += (x - mu) * (x - mu);
    means.push_back(mu);
    vars.push_back(ss / (len - 1.0));
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / count;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= len / (count - 1.0);
  const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / count;
  if (within == 0.0) return 1.0;
  const double var_plus = (len - 1.0) / len * within + between / len;
  return std::sqrt(var_plus / within);
}

double coverage(std::span<const Summary> intervals, std::span<const double> truths) {
  if (intervals.size() != truths.size() || truths.empty()) {
    throw ValidationError("coverage needs aligned, non-empty inputs");
  }
  std::size_t inside = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    inside += truths[i] >= intervals[i].q025 && truths[i] <= intervals[i].q975;
  }
  return static_cast<double>(inside) / static_cast<double>(truths.size());
}

double crps_empirical(std::span<const double> samples, double y) {
  if (samples.empty()) throw ValidationError("CRPS needs at least one sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto m = static_cast<double>(x.size());
  double abs_err = 0.0;
  double spread = 0.0;  // sum_i (2i - m - 1) x_(i), i = 1..m
  for (std::size_t i = 0; i < x.size(); ++i) {
    abs_err += std::abs(x[i] - y);
    spread += (2.0 * static_cast<double>(i + 1) - m - 1.0) * x[i];
  }
  // sum_ij |x_i - x_j| = 2 * spread
  return std::max(0.0, abs_err / m - spread / (m * m));
}

double rmspe(std::span<const double> errors) {
  if (errors.empty()) throw ValidationError("RMSPE of an empty group");
  double ss = 0.0;
  for (double e : errors) ss += e * e;
  return std::sqrt(ss / static_cast<double>(errors.size()));
}

HoldoutSpec HoldoutSpec::north_america(int variable) {
  HoldoutSpec s;
  s.kind = HoldoutKind::spatial_block;
  s.variable = variable;
  s.time_start = TimeLabel{1991, 8};
  s.time_end = TimeLabel{1994, 7};
  return s;
}

HoldoutSpec HoldoutSpec::random(int variable, double fraction, std::uint64_t seed) {
  HoldoutSpec s;
  s.kind = HoldoutKind::random_fraction;
  s.variable = variable;
  s.fraction = fraction;
  s.seed = seed;
  return s;
}

ObservationTensor HoldoutMask::apply(const ObservationTensor& obs) const {
  if (held_out.size() != obs.mask.size()) throw ValidationError("holdout mask does not match tensor");
  ObservationTensor out = obs;
  for (std::size_t e = 0; e < held_out.size(); ++e) {
    if (held_out[e]) out.mask[e] = 0;
  }
  return out;
}

HoldoutMask build_holdout_mask(const HoldoutSpec& spec, const ObservationTensor& obs) {
  if (spec.variable < 0 || spec.variable >= obs.m) {
    throw ValidationError(fmt::format("holdout variable {} out of range", spec.variable));
  }
  HoldoutMask mask;
  mask.spec = spec;
  mask.held_out.assign(obs.mask.size(), 0);

  std::vector<std::uint8_t> time_in(static_cast<std::size_t>(obs.t), 1);
  for (int t = 0; t < obs.t; ++t) {
    const TimeLabel& label = obs.time_labels[static_cast<std::size_t>(t)];
    if ((spec.time_start && label < *spec.time_start) || (spec.time_end && label > *spec.time_end)) {
      time_in[static_cast<std::size_t>(t)] = 0;
    }
  }

  if (spec.kind == HoldoutKind::spatial_block) {
    if (spec.lon_min > spec.lon_max || spec.lat_min > spec.lat_max) {
      throw ValidationError("holdout box bounds are inverted");
    }
    for (int s = 0; s < obs.n; ++s) {
      const GeoPoint& p = obs.locations[static_cast<std::size_t>(s)];
      if (p.lon_deg() >= spec.lon_min && p.lon_deg() <= spec.lon_max && p.lat_deg() >= spec.lat_min &&
          p.lat_deg() <= spec.lat_max) {
        mask.locations.push_back(s);
      }
    }
  } else {
    if (!(spec.fraction > 0.0 && spec.fraction < 1.0)) {
      throw ValidationError("holdout fraction must lie in (0, 1)");
    }
    const auto count = static_cast<std::size_t>(std::llround(spec.fraction * obs.n));
    std::vector<int> order(static_cast<std::size_t>(obs.n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    mask.locations.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(mask.locations.begin(), mask.locations.end());
  }

  for (int t = 0; t < obs.t; ++t) {
    if (!time_in[static_cast<std::size_t>(t)]) continue;
    for (int s : mask.locations) {
      mask.held_out[obs.index(t, spec.variable, s)] = 1;
      ++mask.count;
    }
  }
  if (mask.count == 0) throw ValidationError("holdout mask selects no entries");
  if (mask.count == obs.mask.size()) throw ValidationError("holdout mask covers every entry");
  return mask;
}

std::vector<HeldOutEntry> held_out_entries(const HoldoutMask& mask, const ObservationTensor& obs) {
  std::vector<HeldOutEntry> out;
  out.reserve(mask.count);
  for (int t = 0; t < obs.t; ++t) {
    for (int i = 0; i < obs.m; ++i) {
      for (int s = 0; s < obs.n; ++s) {
        if (mask.held_out[obs.index(t, i, s)]) out.push_back({t, i, s});
      }
    }
  }
  return out;
}

Eigen::MatrixXd predictive_draws(const PosteriorDraws& draws, const SparseMatrix& phi,
                                 std::span<const HeldOutEntry> entries, std::uint64_t seed) {
  for (const auto& c : draws.chains) {
    if (c.states.size() != c.size()) {
      throw ValidationError(
          "posterior draws do not include states; refit with store_states enabled");
    }
  }
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = phi;
  const int k = static_cast<int>(phi.cols());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(entries.size()),
                      static_cast<Eigen::Index>(draws.total_draws()));
  Rng rng = Rng::substream(seed, 0);
  Eigen::Index col = 0;
  for (const auto& c : draws.chains) {
    for (std::size_t d = 0; d < c.size(); ++d, ++col) {
      const Eigen::MatrixXd& alphas = c.states[d];
      for (std::size_t e = 0; e < entries.size(); ++e) {
        const HeldOutEntry& h = entries[e];
        double mean = 0.0;
        for (decltype(rows)::InnerIterator it(rows, h.location); it; ++it) {
          mean += it.value() * alphas(h.variable * k + it.col(), h.t + 1);
        }
        const double sd = std::sqrt(c.sigma2[d](h.t, h.variable));
        out(static_cast<Eigen::Index>(e), col) = mean + sd * rng.normal();
      }
    }
  }
  return out;
}

std::vector<EntryScore> score_entries(const Eigen::MatrixXd& samples,
                                      std::span<const HeldOutEntry> entries,
                                      const ObservationTensor& truth) {
  if (static_cast<std::size_t>(samples.rows()) != entries.size()) {
    throw ValidationError("sample rows must match held-out entries");
  }
  std::vector<EntryScore> out;
  out.reserve(entries.size());
  std::vector<double> row(static_cast<std::size_t>(samples.cols()));
  for (std::size_t e = 0; e < entries.size(); ++e) {
    for (Eigen::Index d = 0; d < samples.cols(); ++d) {
      row[static_cast<std::size_t>(d)] = samples(static_cast<Eigen::Index>(e), d);
    }
    const HeldOutEntry& h = entries[e];
    EntryScore s;
    s.entry = h;
    s.time = truth.time_labels[static_cast<std::size_t>(h.t)];
    s.truth = truth.value(h.t, h.variable, h.location);
    const Summary sum = summarize(row);
    s.mean = sum.mean;
    s.q025 = sum.q025;
    s.q975 = sum.q975;
    s.crps = crps_empirical(row, s.truth);
    out.push_back(s);
  }
  return out;
}

std::vector<ScoreRow> score_table(const std::string& model, const std::string& variable,
                                  std::span<const EntryScore> scores) {
  if (scores.empty()) throw ValidationError("no scored entries");
  std::map<TimeLabel, std::vector<const EntryScore*>> by_month;
  for (const auto& s : scores) by_month[s.time].push_back(&s);

  auto row_for = [&](const std::string& month, const std::vector<const EntryScore*>& group) {
    std::vector<double> err;
    double crps = 0.0;
    for (const EntryScore* s : group) {
      err.push_back(s->mean - s->truth);
      crps += s->crps;
    }
    return ScoreRow{model, variable, month, crps / static_cast<double>(group.size()), rmspe(err),
                    group.size()};
  };

  std::vector<ScoreRow> out;
  std::vector<const EntryScore*> all;
  for (const auto& [label, group] : by_month) {
    out.push_back(row_for(label.str(), group));
    all.insert(all.end(), group.begin(), group.end());
  }
  out.push_back(row_for("all", all));
  return out;
}

}  // namespace mvstdm
