// Command-line front end: blend, propensity, simulate, evaluate, exposure.
//
// Stdout carries data, stderr carries diagnostics. Exit codes: 0 ok,
// 1 I/O or parse failure, 2 invalid configuration, 3 support violation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mblend/io.hpp"
#include "mblend/mblend.hpp"

namespace {

using mblend::Error;
using mblend::ErrorCode;
using json = nlohmann::json;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::EmptyPool:
      return 2;
    case ErrorCode::SupportViolation:
      return 3;
    default:
      return 1;
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t drawn = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << drawn << '\n';
  return drawn;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return in;
}

json read_json_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

mblend::BlendVariant parse_variant(const std::string& s) {
  if (s == "strict") return mblend::BlendVariant::Strict;
  if (s == "at_least") return mblend::BlendVariant::AtLeast;
  throw Error(ErrorCode::InvalidConfig, "--variant must be strict or at_least");
}

// ---------------------------------------------------------------------------

struct BlendArgs {
  std::string candidates;
  std::string policy = "mb";
  std::vector<double> probs;
  std::string config_path;
  std::string variant = "strict";
  std::optional<std::uint32_t> slow_type;
  double lambda = 0.5;
  std::size_t k = 10;
  std::optional<std::size_t> num_types;
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::optional<mblend::BlendConfig> blend_config_from(const BlendArgs& a) {
  if (!a.config_path.empty()) return mblend::io::blend_config_from_json(read_json_file(a.config_path));
  if (a.probs.empty()) return std::nullopt;
  std::optional<mblend::ContentTypeId> slow;
  if (a.slow_type) slow = mblend::ContentTypeId(*a.slow_type);
  return mblend::BlendConfig::make(a.probs, parse_variant(a.variant), slow);
}

int cmd_blend(const BlendArgs& a) {
  std::optional<mblend::BlendConfig> config;
  if (a.policy == "mb") {
    config = blend_config_from(a);
    if (!config) throw Error(ErrorCode::InvalidConfig, "--policy mb needs --probs or --config");
  } else if (a.policy != "sort" && a.policy != "mmr") {
    throw Error(ErrorCode::InvalidConfig, "--policy must be sort, mmr or mb");
  }

  std::optional<std::size_t> num_types = a.num_types;
  if (config) {
    if (num_types && *num_types != config->num_types()) {
      throw Error(ErrorCode::InvalidConfig, "--num-types disagrees with the number of probabilities");
    }
    num_types = config->num_types();
  }

  auto in = open_input(a.candidates);
  auto candidates = mblend::io::read_candidates(in, num_types);
  if (!num_types) {
    std::size_t max_type = 0;
    for (const auto& c : candidates) max_type = std::max(max_type, c.content_type.index());
    num_types = max_type + 1;
  }
  const auto pool = mblend::build_pool(std::move(candidates), *num_types);

  mblend::Slate slate;
  if (a.policy == "sort") {
    if (pool.empty()) throw Error(ErrorCode::EmptyPool, "no candidates to rank");
    slate = mblend::sort_rank(pool, a.k);
  } else if (a.policy == "mmr") {
    slate = mblend::mmr_rank(pool, mblend::MmrConfig(a.lambda), a.k);
  } else {
    mblend::Rng rng(resolve_seed(a.seed));
    slate = mblend::blend(pool, *config, a.k, rng);
  }
  write_output(a.out, mblend::io::to_json(slate).dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct PropensityArgs {
  std::vector<double> probs;
  std::size_t k = 10;
  std::vector<std::size_t> pool_sizes;
  std::size_t mc_samples = 0;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string csv;
  std::string out;
};

mblend::CandidatePool synthetic_pool(const std::vector<std::size_t>& sizes) {
  std::vector<mblend::Candidate> candidates;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    for (std::size_t m = 1; m <= sizes[t]; ++m) {
      candidates.push_back({"t" + std::to_string(t) + "-" + std::to_string(m), mblend::ContentTypeId(t),
                            static_cast<double>(sizes[t] - m)});
    }
  }
  return mblend::build_pool(std::move(candidates), sizes.size());
}

int cmd_propensity(const PropensityArgs& a) {
  const auto config = mblend::BlendConfig::strict(a.probs);
  const auto closed = mblend::closed_form_propensities(a.pool_sizes, config, a.k);
  json out = mblend::io::to_json(closed);
  if (!closed.exact()) {
    std::cerr << "warning: a pool with positive probability holds fewer than k candidates; "
                 "the closed form ignores exhaustion and is approximate\n";
  }

  if (a.mc_samples > 0) {
    mblend::Rng rng(resolve_seed(a.seed));
    const auto pool = synthetic_pool(a.pool_sizes);
    const auto mc = mblend::monte_carlo_propensities(pool, config, a.k, a.mc_samples, rng, a.threads);
    double max_dev = 0.0;
    for (std::size_t r = 0; r < closed.num_rows(); ++r) {
      for (std::size_t j = 1; j <= a.k; ++j) max_dev = std::max(max_dev, std::abs(closed.at(r, j) - mc.at(r, j)));
    }
    out["monte_carlo"] = json{{"samples", a.mc_samples}, {"matrix", mblend::io::to_json(mc)["matrix"]}};
    out["max_abs_deviation"] = max_dev;
  }

  if (!a.csv.empty()) {
    std::ostringstream csv;
    mblend::io::write_csv(csv, closed);
    write_output(a.csv, csv.str());
  }
  write_output(a.out, out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::string out;
  std::string table;
  std::string logs;
  std::optional<std::size_t> log_policy;
  std::vector<double> sweep;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

std::vector<mblend::sim::Policy> default_policies(const mblend::sim::SimConfig& c) {
  std::vector<double> probs(c.num_types, 0.0);
  const double slow_p = 0.3;
  const double rest = c.num_types > 1 ? (1.0 - slow_p) / static_cast<double>(c.num_types - 1) : 1.0;
  for (std::size_t t = 0; t < c.num_types; ++t) probs[t] = t == c.slow_type.index() ? slow_p : rest;
  if (c.num_types == 1) probs[0] = 1.0;
  return {{mblend::sim::SortPolicy{}, {}},
          {mblend::sim::PinnedPolicy{std::min<std::size_t>(3, c.k)}, {}},
          {mblend::sim::MmrPolicy{mblend::MmrConfig(0.5)}, {}},
          {mblend::sim::BlendPolicy{mblend::BlendConfig::strict(probs)}, {}}};
}

int cmd_simulate(const SimulateArgs& a) {
  json cfg = a.config_path.empty() ? json::object() : read_json_file(a.config_path);
  if (!cfg.is_object()) throw Error(ErrorCode::Parse, "sim config must be a JSON object");
  if (a.seed) {
    cfg["seed"] = *a.seed;
  } else if (!cfg.contains("seed")) {
    cfg["seed"] = resolve_seed(std::nullopt);
  }
  const auto config = mblend::io::sim_config_from_json(cfg);
  const auto policies =
      cfg.contains("policies") ? mblend::io::policies_from_json(cfg["policies"]) : default_policies(config);

  std::optional<std::size_t> log_policy = a.log_policy;
  if (!a.logs.empty() && !log_policy) {
    for (std::size_t i = 0; i < policies.size(); ++i) {
      const auto* mb = std::get_if<mblend::sim::BlendPolicy>(&policies[i].kind);
      if (mb && mb->config.variant() == mblend::BlendVariant::Strict) {
        log_policy = i;
        break;
      }
    }
    if (!log_policy) throw Error(ErrorCode::InvalidConfig, "--logs needs a strict mb policy to log");
  }
  if (log_policy && *log_policy >= policies.size()) throw Error(ErrorCode::InvalidConfig, "--log-policy out of range");

  const auto report = mblend::sim::run_experiment(policies, config, {a.threads, !a.logs.empty()});
  json out = mblend::io::to_json(report);
  if (!a.sweep.empty()) out["sweep"] = mblend::io::to_json(mblend::sim::sweep_lambda(a.sweep, config, {a.threads, false}));

  if (!a.logs.empty()) {
    std::ostringstream logs;
    mblend::io::write_logs(logs, report.policies[*log_policy].logs);
    write_output(a.logs, logs.str());
  }
  if (!a.table.empty()) write_output(a.table, mblend::sim::render_table(report));
  if (a.table != "-" || !a.out.empty()) write_output(a.out, out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string logs;
  std::vector<double> target_probs;
  std::size_t k = 10;
  std::optional<double> clip;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  auto in = open_input(a.logs);
  const auto logs = mblend::io::read_logs(in);
  const auto target = mblend::BlendConfig::strict(a.target_probs);
  const auto est = mblend::ips_estimate(logs, target, a.k, {a.clip});
  json out{{"value", est.value},
           {"effective_sample_size", est.effective_sample_size},
           {"standard_error", est.standard_error},
           {"num_rows", est.num_rows}};
  if (a.clip) out["clip"] = *a.clip;
  write_output(a.out, out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct ExposureArgs {
  std::string slate;
  std::size_t num_types = 1;
  std::string out;
};

int cmd_exposure(const ExposureArgs& a) {
  const auto slate = mblend::io::slate_from_json(read_json_file(a.slate));
  write_output(a.out, json(mblend::realized_exposure(slate, a.num_types)).dump() + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank candidates of several content types into one slate"};
  app.require_subcommand(1);

  BlendArgs blend;
  auto* blend_cmd = app.add_subcommand("blend", "Rank a candidate file into a slate");
  blend_cmd->add_option("--candidates", blend.candidates, "Candidate JSONL file")->required();
  blend_cmd->add_option("--policy", blend.policy, "sort, mmr or mb")->capture_default_str();
  blend_cmd->add_option("--probs", blend.probs, "Per-type sampling probabilities, e.g. 0.5,0.3,0.2")->delimiter(',');
  blend_cmd->add_option("--config", blend.config_path, "Blend config JSON (alternative to --probs)");
  blend_cmd->add_option("--variant", blend.variant, "strict or at_least")->capture_default_str();
  blend_cmd->add_option("--slow-type", blend.slow_type, "Slow content type for the at_least variant");
  blend_cmd->add_option("--lambda", blend.lambda, "MMR trade-off in [0, 1]")->capture_default_str();
  blend_cmd->add_option("--k", blend.k, "Slate length")->capture_default_str();
  blend_cmd->add_option("--num-types", blend.num_types, "Declared number of content types");
  blend_cmd->add_option("--seed", blend.seed, "RNG seed (drawn from OS entropy and printed when omitted)");
  blend_cmd->add_option("--out", blend.out, "Output path (default stdout)");

  PropensityArgs prop;
  auto* prop_cmd = app.add_subcommand("propensity", "Closed-form placement probabilities for blending");
  prop_cmd->add_option("--probs", prop.probs, "Per-type sampling probabilities")->delimiter(',')->required();
  prop_cmd->add_option("--k", prop.k, "Slate length")->capture_default_str();
  prop_cmd->add_option("--pool-sizes", prop.pool_sizes, "Candidates per type, e.g. 20,20,20")
      ->delimiter(',')
      ->required();
  prop_cmd->add_option("--mc-samples", prop.mc_samples, "Also estimate by Monte Carlo with this many slates");
  prop_cmd->add_option("--seed", prop.seed, "RNG seed for Monte Carlo");
  prop_cmd->add_option("--threads", prop.threads, "Worker threads for Monte Carlo")->capture_default_str();
  prop_cmd->add_option("--csv", prop.csv, "Also write the closed-form matrix as CSV");
  prop_cmd->add_option("--out", prop.out, "Output path (default stdout)");

  SimulateArgs simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Compare policies in the synthetic environment");
  sim_cmd->add_option("--config", simulate.config_path, "SimConfig JSON, optionally with a \"policies\" array");
  sim_cmd->add_option("--out", simulate.out, "Report path (default stdout)");
  sim_cmd->add_option("--table", simulate.table, "Write an aligned text table to this path ('-' for stdout)");
  sim_cmd->add_option("--logs", simulate.logs, "Write impression logs of a strict mb policy as JSONL");
  sim_cmd->add_option("--log-policy", simulate.log_policy, "Index of the policy to log (default: first strict mb)");
  sim_cmd->add_option("--sweep", simulate.sweep, "MMR lambdas to sweep, e.g. 0,0.25,0.5")->delimiter(',');
  sim_cmd->add_option("--seed", simulate.seed, "Master seed (overrides the config)");
  sim_cmd->add_option("--threads", simulate.threads, "Worker threads")->capture_default_str();

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "IPS estimate of a target blend policy from impression logs");
  eval_cmd->add_option("--logs", eval.logs, "Impression log JSONL")->required();
  eval_cmd->add_option("--target-probs", eval.target_probs, "Target sampling probabilities")
      ->delimiter(',')
      ->required();
  eval_cmd->add_option("--k", eval.k, "Slate length")->capture_default_str();
  eval_cmd->add_option("--clip", eval.clip, "Cap importance weights (biased)");
  eval_cmd->add_option("--out", eval.out, "Output path (default stdout)");

  ExposureArgs exposure;
  auto* exp_cmd = app.add_subcommand("exposure", "Per-type share of a slate produced by 'blend'");
  exp_cmd->add_option("--slate", exposure.slate, "Slate JSON")->required();
  exp_cmd->add_option("--num-types", exposure.num_types, "Number of content types")->required();
  exp_cmd->add_option("--out", exposure.out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*blend_cmd) return cmd_blend(blend);
    if (*prop_cmd) return cmd_propensity(prop);
    if (*sim_cmd) return cmd_simulate(simulate);
    if (*eval_cmd) return cmd_evaluate(eval);
    if (*exp_cmd) return cmd_exposure(exposure);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  }
  return 0;
}
