#pragma once

// Multinomial blending: every slate position draws a content type from a
// fixed probability vector and takes the best remaining candidate of that
// type. When a type runs out of candidates the draw is renormalized over the
// types that still have some.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mblend/core.hpp"
#include "mblend/error.hpp"
#include "mblend/rng.hpp"

namespace mblend {

enum class BlendVariant { Strict, AtLeast };

/// Validated sampling probabilities over content types.
class BlendConfig {
 public:
  static constexpr double kSumTolerance = 1e-6;

  static BlendConfig strict(std::vector<double> probs) {
    return BlendConfig(std::move(probs), BlendVariant::Strict, std::nullopt);
  }

  static BlendConfig at_least(std::vector<double> probs, ContentTypeId slow_type) {
    return BlendConfig(std::move(probs), BlendVariant::AtLeast, slow_type);
  }

  static BlendConfig make(std::vector<double> probs, BlendVariant variant, std::optional<ContentTypeId> slow_type) {
    if (variant == BlendVariant::Strict && slow_type) {
      throw Error(ErrorCode::InvalidConfig, "slow_type is only meaningful for the at_least variant");
    }
    return BlendConfig(std::move(probs), variant, slow_type);
  }

  const std::vector<double>& probs() const noexcept { return probs_; }
  double prob(ContentTypeId t) const { return probs_.at(t.index()); }
  std::size_t num_types() const noexcept { return probs_.size(); }
  BlendVariant variant() const noexcept { return variant_; }
  std::optional<ContentTypeId> slow_type() const noexcept { return slow_type_; }

  friend bool operator==(const BlendConfig&, const BlendConfig&) = default;

 private:
  BlendConfig(std::vector<double> probs, BlendVariant variant, std::optional<ContentTypeId> slow_type)
      : probs_(std::move(probs)), variant_(variant), slow_type_(slow_type) {
    if (probs_.empty()) throw Error(ErrorCode::InvalidConfig, "probs must contain at least one entry");
    double sum = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        throw Error(ErrorCode::InvalidConfig, "every probability must lie in [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw Error(ErrorCode::InvalidConfig, "probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
    for (double& p : probs_) p /= sum;

    if (variant_ == BlendVariant::AtLeast) {
      if (!slow_type_) throw Error(ErrorCode::InvalidConfig, "the at_least variant requires slow_type");
      if (slow_type_->index() >= probs_.size()) {
        throw Error(ErrorCode::InvalidConfig, "slow_type " + std::to_string(slow_type_->value) + " is out of range");
      }
    }
  }

  std::vector<double> probs_;
  BlendVariant variant_;
  std::optional<ContentTypeId> slow_type_;
};

namespace detail {

inline void check_blend_inputs(const CandidatePool& pool, const BlendConfig& config, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "slate length k must be at least 1");
  if (config.num_types() != pool.num_types()) {
    throw Error(ErrorCode::InvalidConfig, "config has " + std::to_string(config.num_types()) +
                                              " probabilities but the pool declares " +
                                              std::to_string(pool.num_types()) + " content types");
  }
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "no candidates to rank");
}

// Inverse-CDF draw over the types that still have candidates, in ascending
// type order. Always consumes exactly one uniform.
inline std::size_t draw_type(const std::vector<double>& probs, const std::vector<std::size_t>& remaining, Rng& rng) {
  const double u = rng.uniform();

  double total = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    if (remaining[t] > 0) total += probs[t];
  }
  const bool uniform_fallback = !(total > 0.0);
  std::size_t live = 0;
  if (uniform_fallback) {
    for (std::size_t r : remaining) live += (r > 0);
    total = static_cast<double>(live);
  }

  double cumulative = 0.0;
  std::size_t last = probs.size();
  for (std::size_t t = 0; t < probs.size(); ++t) {
    if (remaining[t] == 0) continue;
    const double w = uniform_fallback ? 1.0 : probs[t];
    if (w <= 0.0) continue;
    cumulative += w / total;
    last = t;
    if (u < cumulative) return t;
  }
  // Rounding left the cumulative sum a hair below 1.
  return last;
}

}  // namespace detail

/// Strict multinomial blending. Advances `rng` by one draw per filled position.
inline Slate blend_slate(const CandidatePool& pool, const BlendConfig& config, std::size_t k, Rng& rng) {
  detail::check_blend_inputs(pool, config, k);

  const std::size_t num_types = pool.num_types();
  std::vector<std::size_t> remaining = pool.sizes();
  std::vector<std::size_t> cursor(num_types, 0);

  Slate slate;
  slate.k = k;
  const std::size_t length = std::min(k, pool.size());
  slate.entries.reserve(length);
  while (slate.size() < length) {
    const std::size_t t = detail::draw_type(config.probs(), remaining, rng);
    const ContentTypeId type(t);
    slate.append(pool.of_type(type)[cursor[t]], type);
    ++cursor[t];
    --remaining[t];
  }
  return slate;
}

/// Lower-bound variant: keep the plain score ranking whenever it already gives
/// the slow type at least its target share, otherwise blend. The guard branch
/// leaves `rng` untouched.
inline Slate blend_slate_at_least(const CandidatePool& pool, const BlendConfig& config, std::size_t k, Rng& rng) {
  if (config.variant() != BlendVariant::AtLeast || !config.slow_type()) {
    throw Error(ErrorCode::InvalidConfig, "blend_slate_at_least requires an at_least config with slow_type");
  }
  detail::check_blend_inputs(pool, config, k);

  Slate baseline = sort_rank(pool, k);
  const ContentTypeId slow = *config.slow_type();
  std::size_t slow_count = 0;
  for (const auto& e : baseline.entries) slow_count += (e.candidate.content_type == slow);
  const double slow_share = static_cast<double>(slow_count) / static_cast<double>(baseline.size());
  // Small slack so that e.g. 2/10 satisfies a target of 0.2 after renormalization.
  if (slow_share >= config.prob(slow) - 1e-12) return baseline;

  return blend_slate(pool, config, k, rng);
}

/// Dispatches on the config's variant.
inline Slate blend(const CandidatePool& pool, const BlendConfig& config, std::size_t k, Rng& rng) {
  return config.variant() == BlendVariant::AtLeast ? blend_slate_at_least(pool, config, k, rng)
                                                   : blend_slate(pool, config, k, rng);
}

/// Fraction of slate positions taken by each content type.
inline std::vector<double> realized_exposure(const Slate& slate, std::size_t num_types) {
  if (slate.empty()) throw Error(ErrorCode::EmptyPool, "cannot compute exposure of an empty slate");
  std::vector<double> exposure(num_types, 0.0);
  for (const auto& e : slate.entries) {
    const std::size_t t = e.candidate.content_type.index();
    if (t >= num_types) {
      throw Error(ErrorCode::UnknownContentType, "slate entry '" + e.candidate.id + "' has content type " +
                                                     std::to_string(t) + " outside [0, " +
                                                     std::to_string(num_types) + ")");
    }
    exposure[t] += 1.0;
  }
  for (double& x : exposure) x /= static_cast<double>(slate.size());
  return exposure;
}

}  // namespace mblend
