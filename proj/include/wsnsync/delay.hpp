#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wsnsync {

enum class DelayKind { Deterministic, GaussianIID, AR1 };

/// One-way delay of 100 m at the speed of light.
inline constexpr double kDefaultMeanDelay = 100.0 / 299'792'458.0;

/// Parametric one-way delay process d(k) = mean + x(k).
///
/// For AR1 the deviation follows x(k) = rho x(k-1) + w(k) with innovation
/// variance sigma^2 (1 - rho^2), so sigma is the stationary standard
/// deviation. Samples are not clamped at zero.
struct DelaySpec {
  DelayKind kind = DelayKind::Deterministic;
  double mean = kDefaultMeanDelay;
  double sigma = 0.0;
  double rho = 0.0;

  /// Throws ConfigError on sigma < 0, mean < 0 or rho outside [0, 1).
  void validate() const;

  static DelaySpec deterministic(double mean) { return {DelayKind::Deterministic, mean, 0.0, 0.0}; }
  static DelaySpec gaussian(double mean, double sigma) { return {DelayKind::GaussianIID, mean, sigma, 0.0}; }
  static DelaySpec ar1(double mean, double sigma, double rho) { return {DelayKind::AR1, mean, sigma, rho}; }
};

std::string_view to_string(DelayKind kind);
DelayKind delay_kind_from_string(std::string_view name);

/// Seeded, single-owner generator of delays for one link direction.
/// Equal seed and spec give a bit-identical sequence.
class DelaySampler {
 public:
  DelaySampler(const DelaySpec& spec, std::uint64_t seed);

  double sample();

  const DelaySpec& spec() const { return spec_; }

 private:
  DelaySpec spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double prev_deviation_ = 0.0;
  bool started_ = false;
};

/// SplitMix64 step; used to derive independent stream seeds from a run seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace wsnsync
