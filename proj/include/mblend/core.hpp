#pragma once

// Shared domain types: candidates, per-type candidate pools and slates.
//
// Ordering rule used everywhere in the library: higher score first, equal
// scores broken by ascending id (lexicographic byte order).

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mblend/error.hpp"

namespace mblend {

/// 0-based content type index, dense in [0, C) within one request.
struct ContentTypeId {
  std::uint32_t value{};

  constexpr ContentTypeId() = default;
  constexpr explicit ContentTypeId(std::uint32_t v) : value(v) {}
  constexpr explicit ContentTypeId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr explicit ContentTypeId(int v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const noexcept { return value; }
  friend constexpr auto operator<=>(ContentTypeId, ContentTypeId) = default;
};

struct Candidate {
  std::string id;
  ContentTypeId content_type;
  double score{};

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// True when `a` must be ranked ahead of `b`.
inline bool ranks_before(const Candidate& a, const Candidate& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

struct SlateEntry {
  std::size_t position{};  // 1-based
  Candidate candidate;
  std::optional<ContentTypeId> sampled_type;

  friend bool operator==(const SlateEntry&, const SlateEntry&) = default;
};

struct Slate {
  std::vector<SlateEntry> entries;
  std::size_t k{};  // requested length; entries.size() == min(k, n)

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }

  void append(Candidate candidate, std::optional<ContentTypeId> sampled = std::nullopt) {
    entries.push_back(SlateEntry{entries.size() + 1, std::move(candidate), sampled});
  }

  friend bool operator==(const Slate&, const Slate&) = default;
};

/// Candidates grouped by content type, each group in ranking order.
/// Only `build_pool` constructs one, so every instance is validated.
class CandidatePool {
 public:
  std::size_t num_types() const noexcept { return by_type_.size(); }

  std::span<const Candidate> of_type(ContentTypeId type) const { return by_type_.at(type.index()); }

  std::size_t size() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    out.reserve(by_type_.size());
    for (const auto& list : by_type_) out.push_back(list.size());
    return out;
  }

  /// All candidates ordered by type ascending, then within-type rank.
  std::vector<Candidate> flatten() const {
    std::vector<Candidate> out;
    out.reserve(total_);
    for (const auto& list : by_type_) out.insert(out.end(), list.begin(), list.end());
    return out;
  }

  friend bool operator==(const CandidatePool&, const CandidatePool&) = default;

 private:
  friend CandidatePool build_pool(std::vector<Candidate> candidates, std::size_t num_types);

  std::vector<std::vector<Candidate>> by_type_;
  std::size_t total_ = 0;
};

inline CandidatePool build_pool(std::vector<Candidate> candidates, std::size_t num_types) {
  if (num_types == 0) throw Error(ErrorCode::InvalidConfig, "number of content types must be at least 1");

  std::unordered_set<std::string> seen;
  seen.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (!std::isfinite(c.score)) throw Error(ErrorCode::NonFiniteScore, "candidate '" + c.id + "' has a non-finite score");
    if (c.content_type.index() >= num_types) {
      throw Error(ErrorCode::UnknownContentType, "candidate '" + c.id + "' has content type " +
                                                     std::to_string(c.content_type.value) + " but only " +
                                                     std::to_string(num_types) + " types are declared");
    }
    if (!seen.insert(c.id).second) throw Error(ErrorCode::DuplicateId, "candidate id '" + c.id + "' appears twice");
  }

  CandidatePool pool;
  pool.by_type_.resize(num_types);
  pool.total_ = candidates.size();
  for (auto& c : candidates) pool.by_type_[c.content_type.index()].push_back(std::move(c));
  for (auto& list : pool.by_type_) std::sort(list.begin(), list.end(), ranks_before);
  return pool;
}

/// Plain score ranking across all types, truncated to min(k, n).
inline Slate sort_rank(const CandidatePool& pool, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "slate length k must be at least 1");

  Slate slate;
  slate.k = k;
  const std::size_t length = std::min(k, pool.size());
  slate.entries.reserve(length);

  std::vector<std::size_t> cursor(pool.num_types(), 0);
  while (slate.size() < length) {
    const Candidate* best = nullptr;
    std::size_t best_type = 0;
    for (std::size_t t = 0; t < pool.num_types(); ++t) {
      auto list = pool.of_type(ContentTypeId(t));
      if (cursor[t] >= list.size()) continue;
      const Candidate& head = list[cursor[t]];
      if (best == nullptr || ranks_before(head, *best)) {
        best = &head;
        best_type = t;
      }
    }
    slate.append(*best);
    ++cursor[best_type];
  }
  return slate;
}

}  // namespace mblend
