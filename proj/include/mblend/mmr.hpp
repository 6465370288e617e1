#pragma once

// Maximal marginal relevance re-ranking with content-type similarity.
//
// Position 1 takes the best-scoring candidate. Every later position takes the
// remaining candidate maximizing
//
//   lambda * score - (1 - lambda) * share of the partial slate with its type
//
// Scores enter raw. Lambda therefore trades off against the scale of the
// scorer's output: rescaling scores changes the ranking for 0 < lambda < 1.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mblend/core.hpp"
#include "mblend/error.hpp"

namespace mblend {

class MmrConfig {
 public:
  explicit MmrConfig(double lambda) : lambda_(lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "lambda must lie in [0, 1], got " + std::to_string(lambda));
    }
  }

  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

/// Share of `partial` with the candidate's content type; 0 for an empty slate.
inline double type_similarity(const Candidate& candidate, const Slate& partial) {
  if (partial.empty()) return 0.0;
  std::size_t same = 0;
  for (const auto& e : partial.entries) same += (e.candidate.content_type == candidate.content_type);
  return static_cast<double>(same) / static_cast<double>(partial.size());
}

inline double mmr_marginal(double lambda, double score, std::size_t same_type, std::size_t partial_size) {
  const double similarity =
      partial_size == 0 ? 0.0 : static_cast<double>(same_type) / static_cast<double>(partial_size);
  return lambda * score - (1.0 - lambda) * similarity;
}

inline Slate mmr_rank(const CandidatePool& pool, const MmrConfig& config, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "slate length k must be at least 1");
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "no candidates to rank");

  // The penalty is shared by all candidates of a type, so within a type the
  // pool order decides and only the C type heads can win a position.
  const std::size_t num_types = pool.num_types();
  std::vector<std::size_t> cursor(num_types, 0);
  std::vector<std::size_t> placed(num_types, 0);

  Slate slate;
  slate.k = k;
  const std::size_t length = std::min(k, pool.size());
  slate.entries.reserve(length);
  while (slate.size() < length) {
    const Candidate* best = nullptr;
    double best_value = 0.0;
    std::size_t best_type = 0;
    for (std::size_t t = 0; t < num_types; ++t) {
      auto list = pool.of_type(ContentTypeId(t));
      if (cursor[t] >= list.size()) continue;
      const Candidate& head = list[cursor[t]];
      const double value = mmr_marginal(config.lambda(), head.score, placed[t], slate.size());
      if (best == nullptr || value > best_value || (value == best_value && ranks_before(head, *best))) {
        best = &head;
        best_value = value;
        best_type = t;
      }
    }
    slate.append(*best);
    ++cursor[best_type];
    ++placed[best_type];
  }
  return slate;
}

}  // namespace mblend
