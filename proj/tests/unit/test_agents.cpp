#include <filesystem>
#include <numeric>
#include <random>

#include "../support/fixtures.hpp"
#include "doctest.h"
#include "repairbench/agents.hpp"
#include "repairbench/errors.hpp"
#include "repairbench/harness.hpp"

using namespace repairbench;
using namespace repairbench::agents;

namespace {

std::vector<std::array<double, kAttributeFeatures>> all_candidates() {
  std::vector<std::array<double, kAttributeFeatures>> out;
  for (Color c : kAllColors) {
    for (Shape s : kAllShapes) out.push_back(attribute_features(c, s));
  }
  return out;
}

LinearGroundingParams random_params(std::uint64_t seed, double scale) {
  auto p = LinearGroundingParams::zeros(grammar::default_vocabulary().size());
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (auto& w : p.w) w = n(gen);
  return p;
}

Bow bow_of(const std::string& text) {
  return bag_of_words(grammar::default_vocabulary().encode(fixtures::utt(text)));
}

}  // namespace

TEST_CASE("attribute features and bag of words") {
  const auto a = attribute_features(Color::blue, Shape::cylinder);
  CHECK(std::accumulate(a.begin(), a.end(), 0.0) == 3.0);
  CHECK(a[index_of(Color::blue)] == 1.0);
  CHECK(a[kNumColors + index_of(Shape::cylinder)] == 1.0);
  CHECK(a[kAttributeFeatures - 1] == 1.0);
  const auto b = bow_of("reach the cube sorry the red cube");
  CHECK(std::is_sorted(b.begin(), b.end()));
  CHECK(b.size() == 5);
  CHECK(std::find(b.begin(), b.end(), 0) == b.end());
}

TEST_CASE("zero weights give a uniform choice") {
  const auto p = LinearGroundingParams::zeros(grammar::default_vocabulary().size());
  CHECK(p.w.size() == 51 * 13);
  const auto probs = target_distribution(p, bow_of("reach the red cube"), all_candidates());
  for (double q : probs) CHECK(q == doctest::Approx(1.0 / 27.0));
}

TEST_CASE("softmax sums to one and keeps its argmax under scaling at low temperature") {
  const auto cands = all_candidates();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto p = random_params(seed, 3.0);
    const auto bow = bow_of("lift the green barrel not the green object");
    const auto probs = target_distribution(p, bow, cands);
    CHECK(std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) < 1e-9);

    p.tau = 1e-3;
    const auto cold = target_distribution(p, bow, cands);
    const auto best = std::max_element(cold.begin(), cold.end()) - cold.begin();
    for (auto& w : p.w) w *= 7.5;
    const auto scaled = target_distribution(p, bow, cands);
    CHECK(std::max_element(scaled.begin(), scaled.end()) - scaled.begin() == best);
    CHECK(std::abs(std::accumulate(scaled.begin(), scaled.end(), 0.0) - 1.0) < 1e-9);
  }
}

TEST_CASE("extreme scores stay finite") {
  auto p = random_params(3, 1e6);
  const auto probs = target_distribution(p, bow_of("reach the red cube"), all_candidates());
  for (double q : probs) CHECK(std::isfinite(q));
  CHECK(std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) < 1e-9);
}

TEST_CASE("update with zero advantage leaves the weights alone") {
  auto p = random_params(9, 0.5);
  Decision d;
  d.step = 0;
  d.bow = bow_of("reach the red cube");
  d.candidates = {attribute_features(Color::red, Shape::cube), attribute_features(Color::blue, Shape::cube)};
  d.slots = {0, 1};
  d.chosen = 1;
  d.probs = target_distribution(p, d.bow, d.candidates);
  LearnerTrace trace{{d}, std::vector<int>(20, -1)};

  // the first return initializes the baseline, so its advantage is zero
  const auto before = p.w;
  learner_update(p, trace, 100);
  CHECK(p.w == before);
  REQUIRE(p.baselines.size() == 1);
  CHECK(p.baselines[0] == -0.2);

  // a matching baseline gives zero advantage as well
  learner_update(p, trace, 100);
  CHECK(p.w == before);

  // a better-than-baseline return moves the chosen block up
  trace.rewards = {-1, 0};
  learner_update(p, trace, 100);
  CHECK(p.w != before);
  const auto blue = p.index(static_cast<std::size_t>(d.bow.front()), index_of(Color::blue));
  CHECK(p.w[blue] > before[blue]);
  CHECK_THROWS_AS(learner_update(p, trace, 0), ContractViolation);
}

TEST_CASE("snapshot round trip") {
  auto p = random_params(4, 1.0);
  p.alpha = 0.125;
  p.tau = 0.7;
  p.baselines = {-0.31, -0.0625};
  const auto text = params_to_text(p);
  const auto q = params_from_text(text);
  CHECK(q.w == p.w);
  CHECK(q.alpha == p.alpha);
  CHECK(q.tau == p.tau);
  CHECK(q.baselines == p.baselines);
  CHECK(params_to_text(q) == text);

  const auto path = std::filesystem::temp_directory_path() / "repairbench_params_test.txt";
  save_params(p, path);
  CHECK(load_params(path).w == p.w);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(params_from_text("linear-grounding 2\n"), ConfigError);
  CHECK_THROWS_AS(params_from_text(text.substr(0, text.size() / 2)), ConfigError);
}

TEST_CASE("oracle follows the intended target after every correction") {
  env::EpisodeConfig cfg;
  cfg.backend = world::Backend::grid;
  cfg.num_objects = 3;
  cfg.correction_probability = 1.0;
  env::Environment e(cfg);
  OracleAgent oracle(AgentContext::from(cfg));
  int corrected = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    auto obs = e.reset(s);
    oracle.begin_episode(obs);
    env::StepResult r;
    do {
      const auto action = oracle.act(obs);
      if (e.scenario().correction_issued) CHECK(oracle.target() == e.scenario().intended_target);
      r = e.step(action);
      obs = r.observation;
    } while (!r.done);
    if (e.summary().correction_issued) {
      ++corrected;
      CHECK(oracle.target() == e.scenario().intended_target);
    }
    CHECK(r.info.success);
  }
  CHECK(corrected > 300);
}

TEST_CASE("blind oracle keeps its first target") {
  env::EpisodeConfig cfg;
  cfg.backend = world::Backend::grid;
  cfg.correction_probability = 1.0;
  cfg.kinds = {env::ScenarioKind::instruction_correction};
  env::Environment e(cfg);
  OracleAgent blind(AgentContext::from(cfg), true);
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto obs = e.reset(s);
    blind.begin_episode(obs);
    blind.act(obs);
    const auto first = blind.target();
    CHECK(first == e.scenario().named_object);
    env::StepResult r;
    do {
      r = e.step(blind.act(obs));
      obs = r.observation;
      CHECK(blind.target() == first);
    } while (!r.done);
    CHECK_FALSE(r.info.success);
  }
}

TEST_CASE("random agent produces actions for its backend") {
  RandomAgent cont(AgentContext{Task::reach, world::Backend::continuous, {}}, 1);
  RandomAgent grid(AgentContext{Task::reach, world::Backend::grid, {}}, 1);
  env::Observation obs;
  for (int k = 0; k < 100; ++k) {
    const auto a = std::get<world::ContinuousAction>(cont.act(obs));
    CHECK(std::abs(a.dx) <= 0.05);
    CHECK(std::abs(a.finger) <= 1.0);
    CHECK(std::holds_alternative<world::GridAction>(grid.act(obs)));
  }
}

TEST_CASE("learner is seeded and re-decides when the goal changes") {
  env::EpisodeConfig cfg;
  cfg.backend = world::Backend::grid;
  cfg.correction_probability = 1.0;
  const auto p = LinearGroundingParams::zeros(grammar::default_vocabulary().size());
  for (std::uint64_t s = 0; s < 30; ++s) {
    env::Environment e1(cfg);
    env::Environment e2(cfg);
    LearnerAgent a(AgentContext::from(cfg), p, 5);
    LearnerAgent b(AgentContext::from(cfg), p, 5);
    const auto r1 = harness::play_episode(e1, a, s, [&](int r) { a.record_reward(r); });
    const auto r2 = harness::play_episode(e2, b, s, [&](int r) { b.record_reward(r); });
    CHECK(r1.length == r2.length);
    CHECK(a.trace().decisions.size() == b.trace().decisions.size());
    CHECK(a.trace().rewards.size() == static_cast<std::size_t>(r1.length));
    const auto decisions = a.trace().decisions.size();
    if (e1.summary().correction_issued && r1.length < cfg.max_steps) {
      CHECK(decisions == 2);
    } else {
      CHECK(decisions == 1);
    }
  }
}

TEST_CASE("learner trained on uncorrected reach episodes grounds colors and shapes") {
  harness::ExperimentConfig cfg;
  cfg.env.backend = world::Backend::grid;
  cfg.env.correction_probability = 0.0;
  cfg.agent.kind = harness::AgentKind::learner;
  cfg.train_episodes = 20000;
  cfg.eval_episodes = 1000;
  cfg.seeds = 1;
  cfg.workers = 2;
  const auto result = harness::run_experiment(cfg);
  REQUIRE(result.table.size() == 2);
  CHECK(result.table.front().overall_success < 0.7);
  CHECK(result.table.back().overall_success >= 0.95);
}
