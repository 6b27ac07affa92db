#include "wsnsync/delay.hpp"

#include <cmath>
#include <string>

#include "wsnsync/errors.hpp"

namespace wsnsync {

void DelaySpec::validate() const {
  if (!(sigma >= 0.0)) throw ConfigError("sigma", "must be >= 0");
  if (!(mean >= 0.0)) throw ConfigError("mean", "must be >= 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho", "must lie in [0, 1)");
}

std::string_view to_string(DelayKind kind) {
  switch (kind) {
    case DelayKind::Deterministic: return "deterministic";
    case DelayKind::GaussianIID: return "gaussian";
    case DelayKind::AR1: return "ar1";
  }
  return "?";
}

DelayKind delay_kind_from_string(std::string_view name) {
  if (name == "deterministic") return DelayKind::Deterministic;
  if (name == "gaussian") return DelayKind::GaussianIID;
  if (name == "ar1") return DelayKind::AR1;
  throw ConfigError("kind", "unknown delay kind '" + std::string(name) + "'");
}

DelaySampler::DelaySampler(const DelaySpec& spec, std::uint64_t seed)
    : spec_(spec), rng_(seed) {
  spec_.validate();
}

double DelaySampler::sample() {
  switch (spec_.kind) {
    case DelayKind::Deterministic:
      return spec_.mean;
    case DelayKind::GaussianIID:
      return spec_.mean + spec_.sigma * normal_(rng_);
    case DelayKind::AR1: {
      if (!started_) {
        prev_deviation_ = spec_.sigma * normal_(rng_);
        started_ = true;
      } else {
        const double innovation_sd = spec_.sigma * std::sqrt(1.0 - spec_.rho * spec_.rho);
        prev_deviation_ = spec_.rho * prev_deviation_ + innovation_sd * normal_(rng_);
      }
      return spec_.mean + prev_deviation_;
    }
  }
  return spec_.mean;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace wsnsync
