#pragma once

// Position-based inverse propensity scoring for multinomial blending.
//
// Each logged impression (item of type c with within-type rank m shown at
// position j) is reweighted by target / logging placement probability, with
// the target side taken from the closed-form propensities. The estimate is
// the mean reweighted reward per logged impression; it is unbiased when the
// reward of an impression depends only on the item and its position.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mblend/binomial.hpp"
#include "mblend/blend.hpp"
#include "mblend/core.hpp"
#include "mblend/error.hpp"
#include "mblend/propensity.hpp"

namespace mblend {

struct ImpressionLog {
  std::vector<std::size_t> pool_sizes;
  ContentTypeId type;
  std::size_t rank{};      // within-type rank m, 1-based
  std::size_t position{};  // slate position j, 1-based
  double reward{};
  double logging_propensity{};

  friend bool operator==(const ImpressionLog&, const ImpressionLog&) = default;
};

struct IpsEstimate {
  double value{};
  double effective_sample_size{};
  double standard_error{};
  std::size_t num_rows{};
};

struct IpsOptions {
  std::optional<double> clip;  // cap on importance weights; biases the estimate
};

namespace detail {

inline std::string row_label(std::size_t row) { return "log row " + std::to_string(row); }

inline void validate_log_row(const ImpressionLog& log, std::size_t row, std::size_t num_types, std::size_t k) {
  if (log.pool_sizes.size() != num_types) {
    throw Error(ErrorCode::InvalidLog, row_label(row) + ": pool_sizes has " + std::to_string(log.pool_sizes.size()) +
                                           " entries, target policy has " + std::to_string(num_types) + " types");
  }
  if (log.type.index() >= num_types) throw Error(ErrorCode::InvalidLog, row_label(row) + ": content type out of range");
  if (log.rank < 1 || log.rank > log.pool_sizes[log.type.index()]) {
    throw Error(ErrorCode::InvalidLog, row_label(row) + ": within-type rank m must lie in [1, pool size]");
  }
  if (log.position < 1 || log.position > k) {
    throw Error(ErrorCode::InvalidLog, row_label(row) + ": position j must lie in [1, " + std::to_string(k) + "]");
  }
  if (!std::isfinite(log.reward) || log.reward < 0.0) {
    throw Error(ErrorCode::InvalidLog, row_label(row) + ": reward must be finite and non-negative");
  }
  if (!std::isfinite(log.logging_propensity) || log.logging_propensity > 1.0) {
    throw Error(ErrorCode::InvalidLog, row_label(row) + ": logging_propensity must be a probability");
  }
  if (log.logging_propensity <= 0.0) {
    throw Error(ErrorCode::SupportViolation,
                row_label(row) + ": logging propensity is zero, the impression cannot be reweighted");
  }
}

}  // namespace detail

inline IpsEstimate ips_estimate(std::span<const ImpressionLog> logs, const BlendConfig& target, std::size_t k,
                                const IpsOptions& options = {}) {
  if (target.variant() != BlendVariant::Strict) {
    throw Error(ErrorCode::InvalidConfig, "target propensities exist only for the strict variant");
  }
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "slate length k must be at least 1");
  if (options.clip && !(*options.clip > 0.0)) throw Error(ErrorCode::InvalidConfig, "clip must be positive");
  if (logs.empty()) throw Error(ErrorCode::InvalidLog, "no impressions to evaluate");

  LogFactorials log_fact(k + 1);
  double sum_terms = 0.0;
  double sum_terms_sq = 0.0;
  double sum_w = 0.0;
  double sum_w_sq = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const ImpressionLog& log = logs[i];
    detail::validate_log_row(log, i, target.num_types(), k);
    const double target_p = closed_form_propensity(target.prob(log.type), log.rank, log.position, log_fact);
    double w = target_p / log.logging_propensity;
    if (options.clip) w = std::min(w, *options.clip);
    const double term = log.reward * w;
    sum_terms += term;
    sum_terms_sq += term * term;
    sum_w += w;
    sum_w_sq += w * w;
  }

  const auto n = static_cast<double>(logs.size());
  IpsEstimate out;
  out.num_rows = logs.size();
  out.value = sum_terms / n;
  out.effective_sample_size = sum_w_sq > 0.0 ? sum_w * sum_w / sum_w_sq : 0.0;
  if (logs.size() > 1) {
    const double variance = std::max(0.0, (sum_terms_sq - n * out.value * out.value) / (n - 1.0));
    out.standard_error = std::sqrt(variance / n);
  }
  return out;
}

}  // namespace mblend
