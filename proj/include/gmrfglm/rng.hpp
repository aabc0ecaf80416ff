#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>

namespace gmrfglm {

/// Purpose tags for independent random streams.
enum class Purpose : std::uint64_t {
  General = 1,
  GibbsW,
  GibbsA,
  GibbsLambda,
  GibbsAlpha,
  GibbsBeta,
  SvbW,
  SvbA,
  SynthDesign,
  SynthField,
  SynthIntercept,
  SynthNoise,
  Test,
};

/// Mixes (seed, purpose, index, block) into a single 64-bit stream key.
std::uint64_t stream_key(std::uint64_t seed, Purpose purpose, std::uint64_t index = 0,
                         std::uint64_t block = 0);

/// Counter-based generator: output i of a stream is splitmix64(key + i*phi).
/// Any (seed, purpose, index, block) tuple can be regenerated on demand.
class StreamRng {
public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::uint64_t seed, Purpose purpose = Purpose::General,
                     std::uint64_t index = 0, std::uint64_t block = 0)
      : key_(stream_key(seed, purpose, index, block)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  std::uint64_t counter() const { return counter_; }

  double uniform();
  double normal();
  /// Gamma draw with the mean = scale * shape convention.
  double gamma(double shape, double scale);

  Eigen::VectorXd normal_vector(long n);
  void fill_normal(double *out, long n);

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_;
};

} // namespace gmrfglm
