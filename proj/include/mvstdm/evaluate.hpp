#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvstdm/basis.hpp"
#include "mvstdm/model.hpp"
#include "mvstdm/sampler.hpp"

namespace mvstdm {

struct Summary {
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

/// Quantile by linear interpolation between order statistics:
/// h = (n - 1) p, result x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile(std::vector<double> values, double p);

Summary summarize(std::span<const double> values);

struct PosteriorSummary {
  std::vector<Summary> tau2;        // M
  std::vector<Summary> sigma2;      // T x M, index t * M + i
  std::vector<Summary> transition;  // flat TransitionBlocks layout; empty if A was fixed
  int m = 0, k = 0, t = 0;

  const Summary& sigma2_at(int t_, int i) const {
    return sigma2[static_cast<std::size_t>(t_) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
  }
};

/// Pooled over chains. Needs at least two draws.
PosteriorSummary posterior_summary(const PosteriorDraws& draws);

/// Split-chain potential scale reduction factor.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Fraction of truths inside [q025, q975].
double coverage(std::span<const Summary> intervals, std::span<const double> truths);

/// (1/m) sum |x_i - y| - 1/(2 m^2) sum_ij |x_i - x_j|, evaluated in
/// O(m log m) through the sorted-sample identity.
double crps_empirical(std::span<const double> samples, double y);

/// sqrt(mean(e^2)). Throws ValidationError on an empty group.
double rmspe(std::span<const double> errors);

enum class HoldoutKind { random_fraction, spatial_block };

struct HoldoutSpec {
  HoldoutKind kind = HoldoutKind::spatial_block;
  int variable = 0;
  // random_fraction
  double fraction = 0.1;
  std::uint64_t seed = 1;
  // spatial_block, degrees, inclusive bounds on location centers
  double lon_min = -155.0, lon_max = -35.0;
  double lat_min = -5.0, lat_max = 80.0;
  std::optional<TimeLabel> time_start, time_end;

  /// North America block for variable `variable` over Aug 1991 - Jul 1994.
  static HoldoutSpec north_america(int variable);
  /// Random fraction of locations, whole time series of variable `variable`.
  static HoldoutSpec random(int variable, double fraction, std::uint64_t seed);
};

struct HoldoutMask {
  HoldoutSpec spec;
  std::vector<std::uint8_t> held_out;  // aligned with the tensor, 1 = held out
  std::size_t count = 0;
  std::vector<int> locations;          // held-out location indices

  /// Copy of obs with held-out entries masked.
  ObservationTensor apply(const ObservationTensor& obs) const;
};

/// Deterministic mask; throws ValidationError when it is empty or covers
/// every entry.
HoldoutMask build_holdout_mask(const HoldoutSpec& spec, const ObservationTensor& obs);

struct HeldOutEntry {
  int t = 0, variable = 0, location = 0;
};

std::vector<HeldOutEntry> held_out_entries(const HoldoutMask& mask, const ObservationTensor& obs);

/// Posterior predictive samples y* = phi_s . alpha_t^(i) + eps, eps ~ N(0, sigma2_it),
/// one row per entry and one column per retained draw (chains pooled).
/// Throws ValidationError when states were not stored.
Eigen::MatrixXd predictive_draws(const PosteriorDraws& draws, const SparseMatrix& phi,
                                 std::span<const HeldOutEntry> entries, std::uint64_t seed);

struct EntryScore {
  HeldOutEntry entry;
  TimeLabel time;
  double truth = 0.0;
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double crps = 0.0;
};

std::vector<EntryScore> score_entries(const Eigen::MatrixXd& samples,
                                      std::span<const HeldOutEntry> entries,
                                      const ObservationTensor& truth);

struct ScoreRow {
  std::string model;
  std::string variable;
  std::string month;  // YYYY-MM, or "all" for the time average
  double crps = 0.0;
  double rmspe = 0.0;
  std::size_t n = 0;
};

/// Per-month rows (entry CRPS averaged over locations, RMSPE over locations)
/// followed by one "all" row over the whole period.
std::vector<ScoreRow> score_table(const std::string& model, const std::string& variable,
                                  std::span<const EntryScore> scores);

}  // namespace mvstdm
