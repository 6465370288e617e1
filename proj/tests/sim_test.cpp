#include <gtest/gtest.h>

#include "mblend/io.hpp"
#include "mblend/sim.hpp"

namespace mblend::sim {
namespace {

SimConfig small_config() {
  SimConfig c;
  c.users = 300;
  c.slates_per_user = 3;
  return c;
}

Policy mb(std::vector<double> probs) { return {BlendPolicy{BlendConfig::strict(std::move(probs))}, {}}; }
Policy mmr(double lambda) { return {MmrPolicy{MmrConfig(lambda)}, {}}; }

std::uint64_t total(const std::vector<std::uint64_t>& v) {
  std::uint64_t s = 0;
  for (auto x : v) s += x;
  return s;
}

TEST(SimConfig, Validation) {
  auto bad = [](auto mutate) {
    SimConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), Error);
  };
  bad([](SimConfig& c) { c.k = 0; });
  bad([](SimConfig& c) { c.k = 41; });
  bad([](SimConfig& c) { c.examination_decay = 0.0; });
  bad([](SimConfig& c) { c.base_click = {0.5}; });
  bad([](SimConfig& c) { c.base_click = {1.5, 0.1}; });
  bad([](SimConfig& c) { c.engagement_weight = {-1.0, 1.0}; });
  bad([](SimConfig& c) { c.slow_type = ContentTypeId(2); });
  bad([](SimConfig& c) { c.score_scale = 0.0; });
  bad([](SimConfig& c) { c.users = 0; });
  EXPECT_NO_THROW(SimConfig{}.validate());

  EXPECT_THROW(run_experiment({}, small_config()), Error);
  EXPECT_THROW(run_experiment({mb({0.2, 0.3, 0.5})}, small_config()), Error);
  EXPECT_THROW(run_experiment({{PinnedPolicy{11}, {}}}, small_config()), Error);
}

TEST(SimulateSession, ZeroClickProbability) {
  SimConfig c = small_config();
  c.base_click = {0.0, 0.0};
  const auto report = run_experiment({{SortPolicy{}, {}}, mb({0.5, 0.5})}, c);
  for (const auto& m : report.policies) {
    EXPECT_EQ(total(m.clicks), 0u);
    EXPECT_EQ(m.total_engagement, 0.0);
    EXPECT_NEAR(m.exposure[0] + m.exposure[1], 1.0, 1e-12);
  }
}

TEST(SimulateSession, EverythingClickedWhenCertain) {
  SimConfig c = small_config();
  c.base_click = {1.0, 1.0};
  c.examination_decay = 1.0;
  c.min_quality = 1.0;
  c.affinity_spread = 0.0;
  const auto items = draw_items(c);
  const auto user = draw_user(c, 0);
  const auto log = simulate_session(user, 0, items, mb({0.5, 0.5}), 0, c);
  EXPECT_EQ(std::count(log.clicked.begin(), log.clicked.end(), true), static_cast<long>(c.k));
  const auto report = run_experiment({{SortPolicy{}, {}}}, c);
  EXPECT_EQ(total(report.policies[0].clicks), c.users * c.slates_per_user * c.k);
}

TEST(SimulateSession, DeterministicGivenSeed) {
  const SimConfig c = small_config();
  const auto items = draw_items(c);
  const auto user = draw_user(c, 5);
  const auto a = simulate_session(user, 2, items, mb({0.7, 0.3}), 1, c);
  const auto b = simulate_session(user, 2, items, mb({0.7, 0.3}), 1, c);
  EXPECT_EQ(a.slate, b.slate);
  EXPECT_EQ(a.clicked, b.clicked);
  EXPECT_EQ(a.impressions, b.impressions);
  ASSERT_EQ(a.impressions.size(), c.k);
  for (const auto& row : a.impressions) EXPECT_GT(row.logging_propensity, 0.0);
}

TEST(RunExperiment, PairedUniverseAndThreadIndependence) {
  const SimConfig c = small_config();
  const std::vector<Policy> policies{{SortPolicy{}, {}}, mb({0.7, 0.3}), mmr(0.5), {PinnedPolicy{3}, {}}};
  const auto one = io::to_json(run_experiment(policies, c, {1, false})).dump();
  const auto four = io::to_json(run_experiment(policies, c, {4, false})).dump();
  EXPECT_EQ(one, four);

  // Policy order must not change any policy's own outcome.
  const auto swapped = run_experiment({policies[2], policies[0]}, c);
  const auto original = run_experiment(policies, c);
  EXPECT_EQ(io::to_json(swapped.policies[1]).dump(), io::to_json(original.policies[0]).dump());
  EXPECT_EQ(io::to_json(swapped.policies[0]).dump(), io::to_json(original.policies[2]).dump());
}

TEST(RunExperiment, ConservationLaws) {
  const auto report = run_experiment({{SortPolicy{}, {}}, mb({0.6, 0.4}), mmr(0.3)}, small_config());
  for (const auto& m : report.policies) {
    EXPECT_NEAR(m.exposure[0] + m.exposure[1], 1.0, 1e-12);
    for (std::size_t t = 0; t < 2; ++t) EXPECT_LE(m.clicks[t], m.impressions[t]);
    EXPECT_LE(m.slow_engagers, m.users);
  }
}

TEST(RunExperiment, SymmetricTypesUnderSort) {
  SimConfig c = small_config();
  c.base_click = {0.2, 0.2};
  c.engagement_weight = {1.0, 1.0};
  const auto m = run_experiment({{SortPolicy{}, {}}}, c).policies[0];
  EXPECT_NEAR(m.exposure[0], 0.5, 0.1);
}

TEST(RunExperiment, BlendingLiftsSlowExposureToTarget) {
  SimConfig c;
  c.users = 2000;
  const auto report = run_experiment({{SortPolicy{}, {}}, mb({0.7, 0.3})}, c);
  const auto& sort = report.policies[0];
  const auto& blend = report.policies[1];
  EXPECT_NEAR(blend.exposure[1], 0.3, 0.01);
  EXPECT_GT(blend.exposure[1], sort.exposure[1]);
  EXPECT_GT(blend.slow_engagement, sort.slow_engagement);
}

TEST(RunExperiment, PinnedPolicyPlacesSlowItem) {
  SimConfig c = small_config();
  const auto items = draw_items(c);
  for (std::size_t u = 0; u < 20; ++u) {
    const auto log = simulate_session(draw_user(c, u), 0, items, {PinnedPolicy{3}, {}}, 0, c);
    bool found = false;
    for (std::size_t i = 0; i < 3; ++i) found |= log.slate.entries[i].candidate.content_type == c.slow_type;
    EXPECT_TRUE(found);
  }
}

TEST(SweepLambda, LambdaOneMatchesSort) {
  const SimConfig c = small_config();
  const auto rows = sweep_lambda({1.0, 0.5}, c);
  const auto sort = run_experiment({{SortPolicy{}, {}}}, c).policies[0];
  EXPECT_EQ(rows[0].slow_exposure, sort.exposure[1]);
  EXPECT_EQ(rows[0].overall_engagement, sort.total_engagement);
  EXPECT_EQ(rows[0].slow_engagers, sort.slow_engagers);
  EXPECT_THROW(sweep_lambda({1.5}, c), Error);
}

TEST(SweepLambda, ScoreScaleShiftsMmrButNotBlending) {
  SimConfig c = small_config();
  SimConfig scaled = c;
  scaled.score_scale = 10.0;
  const std::vector<double> lambdas{0.1, 0.3, 0.5, 0.7, 0.9};
  const auto base_rows = sweep_lambda(lambdas, c);
  const auto scaled_rows = sweep_lambda(lambdas, scaled);
  bool changed = false;
  for (std::size_t i = 0; i < lambdas.size(); ++i) changed |= base_rows[i].slow_exposure != scaled_rows[i].slow_exposure;
  EXPECT_TRUE(changed);

  const auto a = run_experiment({mb({0.7, 0.3})}, c).policies[0];
  const auto b = run_experiment({mb({0.7, 0.3})}, scaled).policies[0];
  EXPECT_EQ(a.impressions, b.impressions);
  EXPECT_EQ(a.exposure, b.exposure);
}

TEST(ClosestToExposure, PicksNearestRow) {
  const std::vector<SweepRow> rows{{0.1, 0.5, 0, 0}, {0.5, 0.28, 0, 0}, {0.9, 0.05, 0, 0}};
  EXPECT_EQ(closest_to_exposure(rows, 0.3).lambda, 0.5);
  EXPECT_THROW(closest_to_exposure({}, 0.3), Error);
}

TEST(RenderTable, ListsPoliciesWithLifts) {
  const auto report = run_experiment({{SortPolicy{}, {}}, mb({0.7, 0.3})}, small_config());
  const auto table = render_table(report);
  EXPECT_NE(table.find("sort"), std::string::npos);
  EXPECT_NE(table.find("mb[0.7,0.3]"), std::string::npos);
  EXPECT_NE(table.find("+0.00%"), std::string::npos);
}

}  // namespace
}  // namespace mblend::sim
