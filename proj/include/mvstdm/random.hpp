#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mvstdm {

/// Reproducible random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are implementation-defined, so all
/// variates are derived here from raw engine output:
///   - uniform: top 53 bits, shifted to the open interval (0, 1);
///   - normal: Marsaglia polar method, the second variate of each accepted
///     pair is cached and returned by the next call;
///   - gamma: Marsaglia-Tsang squeeze, with the u^(1/a) boost for a < 1.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent substream `stream` of a master seed (SplitMix64 mixing).
  static Rng substream(std::uint64_t master, std::uint64_t stream);

  double uniform();
  double normal();
  double gamma(double shape);
  /// Inverse-gamma with shape a and rate b: b / Gamma(a, 1).
  double inv_gamma(double shape, double rate);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mvstdm
