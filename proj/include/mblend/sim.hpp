#pragma once

// Synthetic fast/slow content environment for comparing ranking policies.
//
// Users carry a log-normal affinity per content type; items carry a quality
// in [min_quality, 1). Relevance is min(1, affinity * quality). The scorer
// predicts base_click * min(1, affinity^e * quality) plus Gaussian noise, all
// times score_scale, where e = scorer_affinity_exponent[type]. With e = 1 the
// scorer knows the user's true interest in a type; smaller e shrinks it
// toward the population mean, as happens for types whose sparse engagement
// gives a click-trained ranker little signal. Clicks
// follow a position-based model: position j is examined with probability
// examination_decay^(j-1), and an examined item is clicked with probability
// base_click[type] * relevance.
//
// All parameter defaults are made-up simulation settings, not measured values.
//
// Random streams are keyed by (seed, purpose, user, session), plus the policy
// index for policy-internal randomness. Users, items, scores and click draws
// are therefore identical across policies (common random numbers).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mblend/binomial.hpp"
#include "mblend/blend.hpp"
#include "mblend/core.hpp"
#include "mblend/error.hpp"
#include "mblend/mmr.hpp"
#include "mblend/ope.hpp"
#include "mblend/propensity.hpp"
#include "mblend/rng.hpp"

namespace mblend::sim {

struct SimConfig {
  std::size_t num_types = 2;
  std::size_t users = 10000;
  std::size_t slates_per_user = 5;
  std::size_t k = 10;
  std::size_t pool_size_per_type = 20;
  double examination_decay = 0.85;
  std::vector<double> base_click = {0.25, 0.05};
  std::vector<double> engagement_weight = {1.0, 8.0};
  double affinity_spread = 1.0;
  double score_noise = 0.02;
  double score_scale = 1.0;
  double min_quality = 0.0;
  std::vector<double> scorer_affinity_exponent = {1.0, 0.25};
  ContentTypeId slow_type{1};
  std::uint64_t seed = 7;
  // Index of the first simulated user. Disjoint ranges give independent user
  // samples from the same environment (the item universe depends on seed only).
  std::uint64_t user_offset = 0;

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, "sim config: " + msg); };
    if (num_types == 0) fail("num_types must be at least 1");
    if (users == 0 || slates_per_user == 0) fail("users and slates_per_user must be at least 1");
    if (k == 0) fail("k must be at least 1");
    if (k > pool_size_per_type * num_types) fail("k exceeds the number of items");
    if (!(examination_decay > 0.0 && examination_decay <= 1.0)) fail("examination_decay must lie in (0, 1]");
    if (base_click.size() != num_types) fail("base_click needs one entry per content type");
    if (engagement_weight.size() != num_types) fail("engagement_weight needs one entry per content type");
    for (double p : base_click) {
      if (!(p >= 0.0 && p <= 1.0)) fail("base_click entries must lie in [0, 1]");
    }
    for (double w : engagement_weight) {
      if (!(w >= 0.0 && std::isfinite(w))) fail("engagement_weight entries must be finite and non-negative");
    }
    if (!(affinity_spread >= 0.0 && std::isfinite(affinity_spread))) fail("affinity_spread must be >= 0");
    if (!(score_noise >= 0.0 && std::isfinite(score_noise))) fail("score_noise must be >= 0");
    if (!(score_scale > 0.0 && std::isfinite(score_scale))) fail("score_scale must be > 0");
    if (!(min_quality >= 0.0 && min_quality <= 1.0)) fail("min_quality must lie in [0, 1]");
    if (scorer_affinity_exponent.size() != num_types) fail("scorer_affinity_exponent needs one entry per content type");
    for (double e : scorer_affinity_exponent) {
      if (!(e >= 0.0 && e <= 1.0)) fail("scorer_affinity_exponent entries must lie in [0, 1]");
    }
    if (slow_type.index() >= num_types) fail("slow_type out of range");
  }
};

struct SortPolicy {};

/// Score ranking with the best slow-type item forced to a fixed position,
/// standing in for hand-curated overrides.
struct PinnedPolicy {
  std::size_t position = 3;
};

struct MmrPolicy {
  MmrConfig config{1.0};
};

struct BlendPolicy {
  BlendConfig config;
};

using PolicyKind = std::variant<SortPolicy, PinnedPolicy, MmrPolicy, BlendPolicy>;

struct Policy {
  PolicyKind kind;
  std::string name;  // empty: derived from the kind
};

inline std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

inline std::string policy_name(const Policy& policy) {
  if (!policy.name.empty()) return policy.name;
  struct Namer {
    std::string operator()(const SortPolicy&) const { return "sort"; }
    std::string operator()(const PinnedPolicy& p) const { return "pinned@" + std::to_string(p.position); }
    std::string operator()(const MmrPolicy& p) const { return "mmr(" + format_number(p.config.lambda()) + ")"; }
    std::string operator()(const BlendPolicy& p) const {
      std::string out = p.config.variant() == BlendVariant::AtLeast ? "mb_at_least[" : "mb[";
      for (std::size_t i = 0; i < p.config.num_types(); ++i) {
        if (i) out += ",";
        out += format_number(p.config.probs()[i]);
      }
      return out + "]";
    }
  };
  return std::visit(Namer{}, policy.kind);
}

inline void validate_policy(const Policy& policy, const SimConfig& config) {
  if (const auto* pinned = std::get_if<PinnedPolicy>(&policy.kind)) {
    if (pinned->position < 1 || pinned->position > config.k) {
      throw Error(ErrorCode::InvalidConfig, "pinned position must lie in [1, k]");
    }
  }
  if (const auto* mb = std::get_if<BlendPolicy>(&policy.kind)) {
    if (mb->config.num_types() != config.num_types) {
      throw Error(ErrorCode::InvalidConfig, "blend policy '" + policy_name(policy) + "' has " +
                                                std::to_string(mb->config.num_types()) + " probabilities for " +
                                                std::to_string(config.num_types) + " content types");
    }
  }
}

struct User {
  std::size_t index{};
  std::vector<double> affinity;  // per content type
};

struct Item {
  std::string id;
  ContentTypeId type;
  double quality{};
};

namespace streams {
inline constexpr std::uint64_t kUsers = 1;
inline constexpr std::uint64_t kItems = 2;
inline constexpr std::uint64_t kScores = 3;
inline constexpr std::uint64_t kClicks = 4;
inline constexpr std::uint64_t kPolicy = 5;
}  // namespace streams

/// Standard normal via Box-Muller; consumes two uniforms.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::vector<Item> draw_items(const SimConfig& config) {
  Rng rng(derive_seed(config.seed, streams::kItems));
  std::vector<Item> items;
  items.reserve(config.num_types * config.pool_size_per_type);
  for (std::size_t t = 0; t < config.num_types; ++t) {
    for (std::size_t i = 0; i < config.pool_size_per_type; ++i) {
      const double q = config.min_quality + (1.0 - config.min_quality) * rng.uniform();
      items.push_back({"t" + std::to_string(t) + "-" + std::to_string(i), ContentTypeId(t), q});
    }
  }
  return items;
}

inline User draw_user(const SimConfig& config, std::size_t index) {
  Rng rng(derive_seed(config.seed, streams::kUsers, index));
  User user{index, std::vector<double>(config.num_types)};
  const double s = config.affinity_spread;
  // Log-normal with mean 1.
  for (double& a : user.affinity) a = std::exp(s * standard_normal(rng) - 0.5 * s * s);
  return user;
}

inline double relevance(const User& user, const Item& item) {
  return std::min(1.0, user.affinity[item.type.index()] * item.quality);
}

struct SessionLog {
  Slate slate;
  std::vector<bool> examined;
  std::vector<bool> clicked;
  std::vector<ImpressionLog> impressions;  // filled for strict blending only
};

struct SessionRngs {
  Rng scores;
  Rng clicks;
  Rng policy;
};

inline SessionRngs session_rngs(const SimConfig& config, std::size_t user, std::size_t session, std::size_t policy) {
  const std::uint64_t us = derive_seed(user, session);
  return SessionRngs{Rng(derive_seed(config.seed, streams::kScores, us)),
                     Rng(derive_seed(config.seed, streams::kClicks, us)),
                     Rng(derive_seed(derive_seed(config.seed, streams::kPolicy, policy), us))};
}

inline CandidatePool score_items(const User& user, const std::vector<Item>& items, const SimConfig& config,
                                 Rng& rng) {
  std::vector<Candidate> candidates;
  candidates.reserve(items.size());
  for (const auto& item : items) {
    const std::size_t t = item.type.index();
    const double seen_affinity = std::pow(user.affinity[t], config.scorer_affinity_exponent[t]);
    const double predicted = config.base_click[t] * std::min(1.0, seen_affinity * item.quality);
    const double score = config.score_scale * (predicted + config.score_noise * standard_normal(rng));
    candidates.push_back({item.id, item.type, score});
  }
  return build_pool(std::move(candidates), config.num_types);
}

inline Slate pinned_rank(const CandidatePool& pool, const PinnedPolicy& pinned, ContentTypeId slow, std::size_t k) {
  Slate ranked = sort_rank(pool, pool.size());
  auto slow_items = pool.of_type(slow);
  Slate out;
  out.k = k;
  if (slow_items.empty()) {
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.append(ranked.entries[i].candidate);
    return out;
  }
  const Candidate& best_slow = slow_items.front();
  std::vector<Candidate> order;
  order.reserve(ranked.size());
  for (auto& e : ranked.entries) order.push_back(std::move(e.candidate));
  const auto it = std::find(order.begin(), order.end(), best_slow);
  if (static_cast<std::size_t>(it - order.begin()) + 1 > pinned.position) {
    Candidate moved = *it;
    order.erase(it);
    order.insert(order.begin() + static_cast<std::ptrdiff_t>(pinned.position - 1), std::move(moved));
  }
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.append(order[i]);
  return out;
}

inline Slate apply_policy(const Policy& policy, const CandidatePool& pool, const SimConfig& config, Rng& rng) {
  struct Apply {
    const CandidatePool& pool;
    const SimConfig& config;
    Rng& rng;
    Slate operator()(const SortPolicy&) const { return sort_rank(pool, config.k); }
    Slate operator()(const PinnedPolicy& p) const { return pinned_rank(pool, p, config.slow_type, config.k); }
    Slate operator()(const MmrPolicy& p) const { return mmr_rank(pool, p.config, config.k); }
    Slate operator()(const BlendPolicy& p) const { return blend(pool, p.config, config.k, rng); }
  };
  return std::visit(Apply{pool, config, rng}, policy.kind);
}

/// One slate shown to `user` in session `session` under `policy`.
inline SessionLog simulate_session(const User& user, std::size_t session, const std::vector<Item>& items,
                                   const Policy& policy, std::size_t policy_index, const SimConfig& config) {
  SessionRngs rngs = session_rngs(config, user.index, session, policy_index);
  const CandidatePool pool = score_items(user, items, config, rngs.scores);

  SessionLog log;
  log.slate = apply_policy(policy, pool, config, rngs.policy);

  // Item lookup by id for relevance; ids encode (type, index).
  auto item_of = [&](const Candidate& c) -> const Item& {
    const auto dash = c.id.find('-');
    const std::size_t idx = std::stoul(c.id.substr(dash + 1));
    return items[c.content_type.index() * config.pool_size_per_type + idx];
  };

  const auto* mb = std::get_if<BlendPolicy>(&policy.kind);
  const bool log_impressions = mb != nullptr && mb->config.variant() == BlendVariant::Strict;
  const auto pool_sizes = pool.sizes();
  std::vector<std::size_t> placed(config.num_types, 0);
  LogFactorials log_fact(config.k + 1);

  double examine_p = 1.0;
  for (const auto& e : log.slate.entries) {
    // Two uniforms per position regardless of outcome keep streams aligned
    // across policies.
    const double u_examine = rngs.clicks.uniform();
    const double u_click = rngs.clicks.uniform();
    const std::size_t t = e.candidate.content_type.index();
    const bool examined = u_examine < examine_p;
    const double click_p = config.base_click[t] * relevance(user, item_of(e.candidate));
    const bool clicked = examined && u_click < click_p;
    log.examined.push_back(examined);
    log.clicked.push_back(clicked);
    const std::size_t rank = ++placed[t];
    if (log_impressions) {
      log.impressions.push_back(ImpressionLog{
          pool_sizes, e.candidate.content_type, rank, e.position, clicked ? 1.0 : 0.0,
          closed_form_propensity(mb->config.probs()[t], rank, e.position, log_fact)});
    }
    examine_p *= config.examination_decay;
  }
  return log;
}

struct PolicyMetrics {
  std::string policy;
  std::vector<double> exposure;      // per type, sums to 1
  std::vector<double> click_through;  // per type, clicks / impressions (0 when unshown)
  std::vector<std::uint64_t> impressions;
  std::vector<std::uint64_t> clicks;
  double total_engagement = 0.0;
  double slow_engagement = 0.0;
  std::uint64_t slow_engagers = 0;  // users with at least one slow-type click
  std::uint64_t users = 0;
  std::uint64_t slates = 0;
  std::vector<ImpressionLog> logs;  // only when requested
};

struct MetricsReport {
  SimConfig config;
  std::vector<PolicyMetrics> policies;
};

struct RunOptions {
  unsigned threads = 1;
  bool collect_logs = false;
};

namespace detail {

struct UserTally {
  std::vector<std::uint64_t> impressions;
  std::vector<std::uint64_t> clicks;
  double engagement = 0.0;
  double slow_engagement = 0.0;
  bool slow_click = false;
  std::vector<ImpressionLog> logs;
};

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace detail

inline PolicyMetrics run_policy(const Policy& policy, std::size_t policy_index, const SimConfig& config,
                                const std::vector<Item>& items, const RunOptions& options) {
  const std::size_t C = config.num_types;
  const std::size_t slow = config.slow_type.index();
  std::vector<detail::UserTally> tallies(config.users);

  detail::parallel_for(config.users, options.threads, [&](std::size_t u) {
    const User user = draw_user(config, config.user_offset + u);
    detail::UserTally tally;
    tally.impressions.assign(C, 0);
    tally.clicks.assign(C, 0);
    for (std::size_t s = 0; s < config.slates_per_user; ++s) {
      SessionLog log = simulate_session(user, s, items, policy, policy_index, config);
      for (std::size_t i = 0; i < log.slate.size(); ++i) {
        const std::size_t t = log.slate.entries[i].candidate.content_type.index();
        ++tally.impressions[t];
        if (log.clicked[i]) {
          ++tally.clicks[t];
          tally.engagement += config.engagement_weight[t];
          if (t == slow) {
            tally.slow_engagement += config.engagement_weight[t];
            tally.slow_click = true;
          }
        }
      }
      if (options.collect_logs) {
        tally.logs.insert(tally.logs.end(), log.impressions.begin(), log.impressions.end());
      }
    }
    tallies[u] = std::move(tally);
  });

  PolicyMetrics m;
  m.policy = policy_name(policy);
  m.impressions.assign(C, 0);
  m.clicks.assign(C, 0);
  m.users = config.users;
  m.slates = config.users * config.slates_per_user;
  for (auto& tally : tallies) {
    for (std::size_t t = 0; t < C; ++t) {
      m.impressions[t] += tally.impressions[t];
      m.clicks[t] += tally.clicks[t];
    }
    m.total_engagement += tally.engagement;
    m.slow_engagement += tally.slow_engagement;
    m.slow_engagers += tally.slow_click;
    if (options.collect_logs) m.logs.insert(m.logs.end(), tally.logs.begin(), tally.logs.end());
  }
  std::uint64_t total = 0;
  for (auto n : m.impressions) total += n;
  for (std::size_t t = 0; t < C; ++t) {
    m.exposure.push_back(static_cast<double>(m.impressions[t]) / static_cast<double>(total));
    m.click_through.push_back(m.impressions[t] ? static_cast<double>(m.clicks[t]) / static_cast<double>(m.impressions[t])
                                               : 0.0);
  }
  return m;
}

/// Runs every policy against the same users and items.
inline MetricsReport run_experiment(const std::vector<Policy>& policies, const SimConfig& config,
                                    const RunOptions& options = {}) {
  config.validate();
  if (policies.empty()) throw Error(ErrorCode::InvalidConfig, "at least one policy is required");
  for (const auto& p : policies) validate_policy(p, config);

  const auto items = draw_items(config);
  MetricsReport report{config, {}};
  for (std::size_t i = 0; i < policies.size(); ++i) {
    report.policies.push_back(run_policy(policies[i], i, config, items, options));
  }
  return report;
}

struct SweepRow {
  double lambda{};
  double slow_exposure{};
  double overall_engagement{};
  std::uint64_t slow_engagers{};
};

/// One MMR experiment per lambda. Slow exposure is reported as observed; it
/// need not be monotone in lambda.
inline std::vector<SweepRow> sweep_lambda(const std::vector<double>& lambdas, const SimConfig& config,
                                          const RunOptions& options = {}) {
  config.validate();
  const auto items = draw_items(config);
  std::vector<SweepRow> rows;
  rows.reserve(lambdas.size());
  for (double lambda : lambdas) {
    const Policy policy{MmrPolicy{MmrConfig(lambda)}, {}};
    const PolicyMetrics m = run_policy(policy, 0, config, items, {options.threads, false});
    rows.push_back({lambda, m.exposure[config.slow_type.index()], m.total_engagement, m.slow_engagers});
  }
  return rows;
}

/// Sweep row whose slow exposure is closest to `target` (first on ties).
inline const SweepRow& closest_to_exposure(const std::vector<SweepRow>& rows, double target) {
  if (rows.empty()) throw Error(ErrorCode::InvalidConfig, "empty lambda sweep");
  const SweepRow* best = &rows.front();
  for (const auto& r : rows) {
    if (std::abs(r.slow_exposure - target) < std::abs(best->slow_exposure - target)) best = &r;
  }
  return *best;
}

inline std::string percent_lift(double value, double base) {
  if (base == 0.0) return value == 0.0 ? "+0.00%" : "n/a";
  std::ostringstream os;
  os << std::showpos << std::fixed << std::setprecision(2) << 100.0 * (value - base) / base << '%';
  return os.str();
}

/// Aligned text table: one row per policy, lifts relative to the first policy.
inline std::string render_table(const MetricsReport& report) {
  const std::size_t slow = report.config.slow_type.index();
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Policy", "Slow exposure", "Slow engagement", "Overall engagement", "Slow engagers"});
  const PolicyMetrics& base = report.policies.front();
  for (const auto& m : report.policies) {
    std::ostringstream exposure;
    exposure << std::fixed << std::setprecision(4) << m.exposure[slow];
    cells.push_back({m.policy, exposure.str(), percent_lift(m.slow_engagement, base.slow_engagement),
                     percent_lift(m.total_engagement, base.total_engagement), std::to_string(m.slow_engagers)});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (c == 0) {
        os << std::left << std::setw(static_cast<int>(width[c])) << cells[r][c];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[c])) << cells[r][c];
      }
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  return os.str();
}

}  // namespace mblend::sim
