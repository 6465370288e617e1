#pragma once

// JSON and JSONL encodings for candidates, slates, configs, propensity
// matrices, impression logs and simulation reports.

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mblend/blend.hpp"
#include "mblend/core.hpp"
#include "mblend/error.hpp"
#include "mblend/ope.hpp"
#include "mblend/propensity.hpp"
#include "mblend/sim.hpp"

namespace mblend::io {

using json = nlohmann::json;

namespace detail {

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline json parse_object(const std::string& text, std::size_t line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, at_line(line) + "malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw Error(ErrorCode::Parse, at_line(line) + "expected a JSON object");
  return j;
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::Parse, where + "missing field \"" + key + "\"");
  return *it;
}

inline std::size_t as_index(const json& v, const char* key, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorCode::Parse, where + "\"" + key + "\" must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline double as_number(const json& v, const char* key, const std::string& where) {
  if (!v.is_number()) throw Error(ErrorCode::Parse, where + "\"" + key + "\" must be a number");
  return v.get<double>();
}

inline bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Candidates

/// Reads one {"id", "content_type", "score"} object per line. Blank lines are
/// skipped. Any rejected line aborts with its 1-based line number. When
/// `num_types` is given, content types are range-checked as well.
inline std::vector<Candidate> read_candidates(std::istream& in, std::optional<std::size_t> num_types = std::nullopt) {
  std::vector<Candidate> out;
  std::unordered_set<std::string> seen;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (detail::blank(text)) continue;
    const std::string where = detail::at_line(line);
    const json j = detail::parse_object(text, line);
    const json& id = detail::require(j, "id", where);
    if (!id.is_string()) throw Error(ErrorCode::Parse, where + "\"id\" must be a string");
    Candidate c{id.get<std::string>(),
                ContentTypeId(detail::as_index(detail::require(j, "content_type", where), "content_type", where)),
                detail::as_number(detail::require(j, "score", where), "score", where)};
    if (!std::isfinite(c.score)) throw Error(ErrorCode::NonFiniteScore, where + "score is not finite");
    if (num_types && c.content_type.index() >= *num_types) {
      throw Error(ErrorCode::UnknownContentType, where + "content type " + std::to_string(c.content_type.value) +
                                                     " is not below " + std::to_string(*num_types));
    }
    if (!seen.insert(c.id).second) throw Error(ErrorCode::DuplicateId, where + "duplicate id '" + c.id + "'");
    out.push_back(std::move(c));
  }
  return out;
}

inline json to_json(const Candidate& c) {
  return json{{"id", c.id}, {"content_type", c.content_type.value}, {"score", c.score}};
}

// ---------------------------------------------------------------------------
// Slates

inline json to_json(const Slate& slate) {
  json arr = json::array();
  for (const auto& e : slate.entries) {
    arr.push_back(json{{"position", e.position},
                       {"id", e.candidate.id},
                       {"content_type", e.candidate.content_type.value},
                       {"score", e.candidate.score},
                       {"sampled_type", e.sampled_type ? json(e.sampled_type->value) : json(nullptr)}});
  }
  return arr;
}

inline Slate slate_from_json(const json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::Parse, "slate must be a JSON array");
  Slate slate;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& e = arr[i];
    const std::string where = "slate entry " + std::to_string(i + 1) + ": ";
    if (!e.is_object()) throw Error(ErrorCode::Parse, where + "expected an object");
    const json& id = detail::require(e, "id", where);
    if (!id.is_string()) throw Error(ErrorCode::Parse, where + "\"id\" must be a string");
    Candidate c{id.get<std::string>(),
                ContentTypeId(detail::as_index(detail::require(e, "content_type", where), "content_type", where)),
                detail::as_number(detail::require(e, "score", where), "score", where)};
    std::optional<ContentTypeId> sampled;
    if (auto it = e.find("sampled_type"); it != e.end() && !it->is_null()) {
      sampled = ContentTypeId(detail::as_index(*it, "sampled_type", where));
    }
    const std::size_t position = detail::as_index(detail::require(e, "position", where), "position", where);
    if (position != i + 1) throw Error(ErrorCode::Parse, where + "positions must be contiguous from 1");
    slate.append(std::move(c), sampled);
  }
  slate.k = slate.size();
  return slate;
}

// ---------------------------------------------------------------------------
// Blend configs

inline BlendConfig blend_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "blend config must be a JSON object");
  const json& probs = detail::require(j, "probs", "blend config: ");
  if (!probs.is_array()) throw Error(ErrorCode::Parse, "blend config: \"probs\" must be an array");
  std::vector<double> p;
  for (const auto& v : probs) p.push_back(detail::as_number(v, "probs", "blend config: "));

  BlendVariant variant = BlendVariant::Strict;
  if (auto it = j.find("variant"); it != j.end()) {
    if (*it == "strict") {
      variant = BlendVariant::Strict;
    } else if (*it == "at_least") {
      variant = BlendVariant::AtLeast;
    } else {
      throw Error(ErrorCode::InvalidConfig, "blend config: variant must be \"strict\" or \"at_least\"");
    }
  }
  std::optional<ContentTypeId> slow;
  if (auto it = j.find("slow_type"); it != j.end() && !it->is_null()) {
    slow = ContentTypeId(detail::as_index(*it, "slow_type", "blend config: "));
  }
  return BlendConfig::make(std::move(p), variant, slow);
}

inline json to_json(const BlendConfig& c) {
  json j{{"probs", c.probs()}, {"variant", c.variant() == BlendVariant::AtLeast ? "at_least" : "strict"}};
  if (c.slow_type()) j["slow_type"] = c.slow_type()->value;
  return j;
}

// ---------------------------------------------------------------------------
// Propensity matrices

inline json to_json(const PropensityMatrix& m) {
  json rows = json::array();
  json matrix = json::array();
  for (std::size_t r = 0; r < m.num_rows(); ++r) {
    rows.push_back(json{{"type", m.rows()[r].type.value}, {"m", m.rows()[r].rank}});
    auto values = m.row_values(r);
    matrix.push_back(json(std::vector<double>(values.begin(), values.end())));
  }
  return json{{"exact", m.exact()}, {"k", m.num_positions()}, {"rows", rows}, {"matrix", matrix}};
}

inline std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Header `type,m,p1..pk`, one line per candidate row.
inline void write_csv(std::ostream& out, const PropensityMatrix& m) {
  out << "type,m";
  for (std::size_t j = 1; j <= m.num_positions(); ++j) out << ",p" << j;
  out << '\n';
  for (std::size_t r = 0; r < m.num_rows(); ++r) {
    out << m.rows()[r].type.value << ',' << m.rows()[r].rank;
    for (double v : m.row_values(r)) out << ',' << format_g17(v);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Impression logs

inline json to_json(const ImpressionLog& log) {
  return json{{"pool_sizes", log.pool_sizes}, {"type", log.type.value},     {"m", log.rank},
              {"j", log.position},            {"reward", log.reward},      {"logging_propensity", log.logging_propensity}};
}

inline std::vector<ImpressionLog> read_logs(std::istream& in) {
  std::vector<ImpressionLog> out;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (detail::blank(text)) continue;
    const std::string where = detail::at_line(line);
    const json j = detail::parse_object(text, line);
    const json& sizes = detail::require(j, "pool_sizes", where);
    if (!sizes.is_array()) throw Error(ErrorCode::Parse, where + "\"pool_sizes\" must be an array");
    ImpressionLog log;
    for (const auto& s : sizes) log.pool_sizes.push_back(detail::as_index(s, "pool_sizes", where));
    log.type = ContentTypeId(detail::as_index(detail::require(j, "type", where), "type", where));
    log.rank = detail::as_index(detail::require(j, "m", where), "m", where);
    log.position = detail::as_index(detail::require(j, "j", where), "j", where);
    log.reward = detail::as_number(detail::require(j, "reward", where), "reward", where);
    log.logging_propensity =
        detail::as_number(detail::require(j, "logging_propensity", where), "logging_propensity", where);
    out.push_back(std::move(log));
  }
  return out;
}

inline void write_logs(std::ostream& out, std::span<const ImpressionLog> logs) {
  for (const auto& log : logs) out << to_json(log).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Simulation

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      field = it->get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::Parse, std::string("sim config: field \"") + key + "\" has the wrong type");
    }
  }
}

}  // namespace detail

inline sim::SimConfig sim_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "sim config must be a JSON object");
  sim::SimConfig c;
  detail::read_opt(j, "num_types", c.num_types);
  detail::read_opt(j, "users", c.users);
  detail::read_opt(j, "slates_per_user", c.slates_per_user);
  detail::read_opt(j, "k", c.k);
  detail::read_opt(j, "pool_size_per_type", c.pool_size_per_type);
  detail::read_opt(j, "examination_decay", c.examination_decay);
  detail::read_opt(j, "base_click", c.base_click);
  detail::read_opt(j, "engagement_weight", c.engagement_weight);
  detail::read_opt(j, "affinity_spread", c.affinity_spread);
  detail::read_opt(j, "score_noise", c.score_noise);
  detail::read_opt(j, "score_scale", c.score_scale);
  detail::read_opt(j, "min_quality", c.min_quality);
  detail::read_opt(j, "scorer_affinity_exponent", c.scorer_affinity_exponent);
  std::uint32_t slow = c.slow_type.value;
  detail::read_opt(j, "slow_type", slow);
  c.slow_type = ContentTypeId(slow);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "user_offset", c.user_offset);
  c.validate();
  return c;
}

inline json to_json(const sim::SimConfig& c) {
  return json{{"num_types", c.num_types},
              {"users", c.users},
              {"slates_per_user", c.slates_per_user},
              {"k", c.k},
              {"pool_size_per_type", c.pool_size_per_type},
              {"examination_decay", c.examination_decay},
              {"base_click", c.base_click},
              {"engagement_weight", c.engagement_weight},
              {"affinity_spread", c.affinity_spread},
              {"score_noise", c.score_noise},
              {"score_scale", c.score_scale},
              {"min_quality", c.min_quality},
              {"scorer_affinity_exponent", c.scorer_affinity_exponent},
              {"slow_type", c.slow_type.value},
              {"seed", c.seed},
              {"user_offset", c.user_offset}};
}

/// {"policy": "sort" | "pinned" | "mmr" | "mb", ...}; "mb" takes the blend
/// config fields, "mmr" takes "lambda", "pinned" takes "position".
inline sim::Policy policy_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "policy must be a JSON object");
  const json& kind = detail::require(j, "policy", "policy: ");
  std::string name;
  if (auto it = j.find("name"); it != j.end() && it->is_string()) name = it->get<std::string>();
  if (kind == "sort") return {sim::SortPolicy{}, name};
  if (kind == "pinned") {
    sim::PinnedPolicy p;
    if (auto it = j.find("position"); it != j.end()) p.position = detail::as_index(*it, "position", "policy: ");
    return {p, name};
  }
  if (kind == "mmr") {
    return {sim::MmrPolicy{MmrConfig(detail::as_number(detail::require(j, "lambda", "policy: "), "lambda", "policy: "))},
            name};
  }
  if (kind == "mb") return {sim::BlendPolicy{blend_config_from_json(j)}, name};
  throw Error(ErrorCode::InvalidConfig, "unknown policy kind " + kind.dump());
}

inline std::vector<sim::Policy> policies_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, "\"policies\" must be an array");
  std::vector<sim::Policy> out;
  for (const auto& p : j) out.push_back(policy_from_json(p));
  return out;
}

inline json to_json(const sim::PolicyMetrics& m) {
  return json{{"policy", m.policy},
              {"exposure", m.exposure},
              {"click_through", m.click_through},
              {"impressions", m.impressions},
              {"clicks", m.clicks},
              {"total_engagement", m.total_engagement},
              {"slow_engagement", m.slow_engagement},
              {"new_slow_engagers", m.slow_engagers},
              {"users", m.users},
              {"slates", m.slates}};
}

inline json to_json(const sim::MetricsReport& r) {
  json policies = json::array();
  for (const auto& m : r.policies) policies.push_back(to_json(m));
  return json{{"config", to_json(r.config)}, {"policies", policies}};
}

inline json to_json(const std::vector<sim::SweepRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back(json{{"lambda", r.lambda},
                       {"slow_exposure", r.slow_exposure},
                       {"overall_engagement", r.overall_engagement},
                       {"new_slow_engagers", r.slow_engagers}});
  }
  return arr;
}

}  // namespace mblend::io
