#pragma once

// Placement probabilities of candidates under multinomial blending.
//
// Rows follow the flattened pool order (type ascending, then within-type
// rank m = 1, 2, ...); columns are slate positions j = 1..k. For the m-th
// best item of type c the closed form is
//
//   P[c, m, j] = BinomialPmf(m - 1; j - 1, p_c) * p_c
//
// i.e. exactly m - 1 of the first j - 1 draws picked c and draw j picks c
// again. The formula ignores renormalization after a pool runs dry, so it is
// exact only when every type with p_c > 0 holds at least k candidates; the
// `exact` flag reports this.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mblend/binomial.hpp"
#include "mblend/blend.hpp"
#include "mblend/core.hpp"
#include "mblend/error.hpp"
#include "mblend/rng.hpp"

namespace mblend {

struct PropensityRow {
  ContentTypeId type;
  std::size_t rank{};  // within-type rank m, 1-based

  friend bool operator==(const PropensityRow&, const PropensityRow&) = default;
};

class PropensityMatrix {
 public:
  PropensityMatrix() = default;
  PropensityMatrix(std::vector<PropensityRow> rows, std::size_t positions, bool exact)
      : rows_(std::move(rows)), positions_(positions), exact_(exact), values_(rows_.size() * positions, 0.0) {}

  std::size_t num_rows() const noexcept { return rows_.size(); }
  std::size_t num_positions() const noexcept { return positions_; }
  bool exact() const noexcept { return exact_; }
  const std::vector<PropensityRow>& rows() const noexcept { return rows_; }

  /// `row` is 0-based, `position` is the 1-based slate position.
  double at(std::size_t row, std::size_t position) const { return values_.at(row * positions_ + position - 1); }
  double& at(std::size_t row, std::size_t position) { return values_.at(row * positions_ + position - 1); }

  std::span<const double> row_values(std::size_t row) const {
    return std::span<const double>(values_).subspan(row * positions_, positions_);
  }

  double column_sum(std::size_t position) const {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) sum += at(r, position);
    return sum;
  }

  double row_sum(std::size_t row) const {
    double sum = 0.0;
    for (double v : row_values(row)) sum += v;
    return sum;
  }

 private:
  std::vector<PropensityRow> rows_;
  std::size_t positions_ = 0;
  bool exact_ = true;
  std::vector<double> values_;
};

/// Closed-form probability that the `rank`-th best item of a type sampled with
/// probability `type_prob` lands at 1-based `position`.
inline double closed_form_propensity(double type_prob, std::size_t rank, std::size_t position,
                                     LogFactorials& log_fact) {
  if (rank == 0 || position == 0 || rank > position) return 0.0;
  return binomial_pmf(rank - 1, position - 1, type_prob, log_fact) * type_prob;
}

/// True when no pool with positive sampling probability can run dry within k draws.
inline bool closed_form_is_exact(std::span<const std::size_t> pool_sizes, const BlendConfig& config, std::size_t k) {
  for (std::size_t t = 0; t < pool_sizes.size(); ++t) {
    if (config.probs()[t] > 0.0 && pool_sizes[t] < k) return false;
  }
  return true;
}

namespace detail {

inline std::vector<PropensityRow> propensity_rows(std::span<const std::size_t> pool_sizes) {
  std::vector<PropensityRow> rows;
  for (std::size_t t = 0; t < pool_sizes.size(); ++t) {
    for (std::size_t m = 1; m <= pool_sizes[t]; ++m) rows.push_back({ContentTypeId(t), m});
  }
  return rows;
}

}  // namespace detail

inline PropensityMatrix closed_form_propensities(std::span<const std::size_t> pool_sizes, const BlendConfig& config,
                                                 std::size_t k) {
  if (config.variant() != BlendVariant::Strict) {
    throw Error(ErrorCode::InvalidConfig, "closed-form propensities exist only for the strict variant");
  }
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "slate length k must be at least 1");
  if (pool_sizes.size() != config.num_types()) {
    throw Error(ErrorCode::InvalidConfig, "got " + std::to_string(pool_sizes.size()) + " pool sizes for " +
                                              std::to_string(config.num_types()) + " content types");
  }

  PropensityMatrix matrix(detail::propensity_rows(pool_sizes), k, closed_form_is_exact(pool_sizes, config, k));
  LogFactorials log_fact(k + 1);
  for (std::size_t r = 0; r < matrix.num_rows(); ++r) {
    const auto [type, rank] = matrix.rows()[r];
    const double p = config.prob(type);
    for (std::size_t j = rank; j <= k; ++j) matrix.at(r, j) = closed_form_propensity(p, rank, j, log_fact);
  }
  return matrix;
}

/// Empirical placement frequencies over `samples` blended slates. Samples are
/// split into fixed-size chunks with seeds derived from one draw of `rng` and
/// the chunk index, so the result does not depend on `threads`.
inline PropensityMatrix monte_carlo_propensities(const CandidatePool& pool, const BlendConfig& config, std::size_t k,
                                                 std::size_t samples, Rng& rng, unsigned threads = 1) {
  if (samples == 0) throw Error(ErrorCode::InvalidConfig, "samples must be at least 1");
  detail::check_blend_inputs(pool, config, k);

  constexpr std::size_t kChunk = 8192;
  const std::uint64_t master = rng.next_u64();
  const auto sizes = pool.sizes();
  std::vector<std::size_t> row_offset(sizes.size(), 0);
  for (std::size_t t = 1; t < sizes.size(); ++t) row_offset[t] = row_offset[t - 1] + sizes[t - 1];

  const std::size_t num_chunks = (samples + kChunk - 1) / kChunk;
  const std::size_t cells = pool.size() * k;
  std::vector<std::vector<std::uint64_t>> chunk_counts(num_chunks);

  auto run_chunk = [&](std::size_t chunk) {
    std::vector<std::uint64_t> counts(cells, 0);
    Rng chunk_rng(derive_seed(master, chunk));
    const std::size_t begin = chunk * kChunk;
    const std::size_t end = std::min(samples, begin + kChunk);
    std::vector<std::size_t> placed(sizes.size());
    for (std::size_t s = begin; s < end; ++s) {
      const Slate slate = blend(pool, config, k, chunk_rng);
      std::fill(placed.begin(), placed.end(), 0);
      // Both policy branches keep within-type order, so the n-th placement of
      // a type is its rank-n item.
      for (const auto& e : slate.entries) {
        const std::size_t t = e.candidate.content_type.index();
        const std::size_t row = row_offset[t] + placed[t]++;
        ++counts[row * k + e.position - 1];
      }
    }
    chunk_counts[chunk] = std::move(counts);
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(num_chunks)));
  if (threads == 1) {
    for (std::size_t c = 0; c < num_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t c = next++; c < num_chunks; c = next++) run_chunk(c);
      });
    }
  }

  PropensityMatrix matrix(detail::propensity_rows(sizes), k, true);
  std::vector<std::uint64_t> totals(cells, 0);
  for (const auto& counts : chunk_counts) {
    for (std::size_t i = 0; i < cells; ++i) totals[i] += counts[i];
  }
  for (std::size_t r = 0; r < matrix.num_rows(); ++r) {
    for (std::size_t j = 1; j <= k; ++j) {
      matrix.at(r, j) = static_cast<double>(totals[r * k + j - 1]) / static_cast<double>(samples);
    }
  }
  return matrix;
}

}  // namespace mblend
