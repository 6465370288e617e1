#pragma once

// Random instance generators shared by the unit and acceptance suites.

#include <cstddef>
#include <string>
#include <vector>

#include "mblend/core.hpp"
#include "mblend/rng.hpp"

namespace mblend::testing {

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
}

/// n candidates over `num_types` types. Scores come from a coarse grid when
/// `coarse` is set so that ties are frequent.
inline std::vector<Candidate> random_candidates(Rng& rng, std::size_t n, std::size_t num_types, bool coarse) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double score = coarse ? static_cast<double>(uniform_index(rng, 5)) * 0.25 : rng.uniform() * 2.0 - 0.5;
    // Zero-padded ids shuffled so id order and insertion order differ.
    out.push_back({"c" + std::to_string(1000 + (i * 7919) % 1000), ContentTypeId(uniform_index(rng, num_types)),
                   score});
  }
  return out;
}

/// Pools whose every type holds `per_type` candidates with distinct scores.
inline CandidatePool ample_pool(std::size_t num_types, std::size_t per_type, Rng& rng) {
  std::vector<Candidate> out;
  for (std::size_t t = 0; t < num_types; ++t) {
    for (std::size_t i = 0; i < per_type; ++i) {
      out.push_back({"t" + std::to_string(t) + "-" + std::to_string(i), ContentTypeId(t), rng.uniform()});
    }
  }
  return build_pool(std::move(out), num_types);
}

inline std::vector<Candidate> brute_force_sorted(std::vector<Candidate> all) {
  // Insertion sort on the ranking rule, independent of std::sort.
  for (std::size_t i = 1; i < all.size(); ++i) {
    for (std::size_t j = i; j > 0; --j) {
      const auto& a = all[j - 1];
      const auto& b = all[j];
      const bool swap = b.score > a.score || (b.score == a.score && b.id < a.id);
      if (!swap) break;
      std::swap(all[j - 1], all[j]);
    }
  }
  return all;
}

/// Step-by-step evaluation of the MMR recurrence over every remaining
/// candidate, recounting type overlap from the selected list each time.
inline std::vector<Candidate> brute_force_mmr(std::vector<Candidate> remaining, double lambda, std::size_t k) {
  std::vector<Candidate> selected;
  while (selected.size() < k && !remaining.empty()) {
    std::size_t best = 0;
    double best_value = 0.0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      std::size_t same = 0;
      for (const auto& s : selected) same += (s.content_type == remaining[i].content_type);
      const double sim =
          selected.empty() ? 0.0 : static_cast<double>(same) / static_cast<double>(selected.size());
      const double value = lambda * remaining[i].score - (1.0 - lambda) * sim;
      const auto& b = remaining[best];
      const bool better = i == 0 || value > best_value ||
                          (value == best_value &&
                           (remaining[i].score > b.score || (remaining[i].score == b.score && remaining[i].id < b.id)));
      if (better) {
        best = i;
        best_value = value;
      }
    }
    selected.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return selected;
}

/// Exact placement probabilities of multinomial blending by enumerating every
/// type sequence of length min(k, n), honoring renormalization once a pool
/// is empty. Result is indexed [type][rank - 1][position - 1].
inline std::vector<std::vector<std::vector<double>>> enumerate_placements(const std::vector<std::size_t>& sizes,
                                                                         const std::vector<double>& probs,
                                                                         std::size_t k) {
  const std::size_t C = sizes.size();
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  const std::size_t length = std::min(k, n);
  std::vector<std::vector<std::vector<double>>> out(C);
  for (std::size_t t = 0; t < C; ++t) out[t].assign(sizes[t], std::vector<double>(k, 0.0));

  std::vector<std::size_t> used(C, 0);
  auto recurse = [&](auto&& self, std::size_t position, double prob) -> void {
    if (position == length || prob == 0.0) return;
    double total = 0.0;
    std::size_t live = 0;
    for (std::size_t t = 0; t < C; ++t) {
      if (used[t] < sizes[t]) {
        total += probs[t];
        ++live;
      }
    }
    for (std::size_t t = 0; t < C; ++t) {
      if (used[t] >= sizes[t]) continue;
      const double step = total > 0.0 ? probs[t] / total : 1.0 / static_cast<double>(live);
      if (step == 0.0) continue;
      out[t][used[t]][position] += prob * step;
      ++used[t];
      self(self, position + 1, prob * step);
      --used[t];
    }
  };
  recurse(recurse, 0, 1.0);
  return out;
}

}  // namespace mblend::testing
