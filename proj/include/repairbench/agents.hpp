#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "repairbench/env.hpp"
#include "repairbench/rng.hpp"

namespace repairbench::agents {

/// What a policy needs to know about the episode besides the observation.
struct AgentContext {
  Task task = Task::reach;
  world::Backend backend = world::Backend::continuous;
  world::WorldConfig world;

  static AgentContext from(const env::EpisodeConfig& cfg) { return {cfg.task, cfg.backend, cfg.world}; }
};

/// Drives the gripper (or grid agent) to satisfy the task on one object.
/// Works from observations only; remembers start positions and the current
/// push plan between steps.
class ScriptedController {
 public:
  explicit ScriptedController(AgentContext ctx) : ctx_(ctx) {}

  /// Records start positions from the first observation of an episode.
  void begin_episode(const env::Observation& obs);
  world::Action act(const env::Observation& obs, int target);
  /// Action that changes nothing (the grid has no no-op; it steps up).
  world::Action idle() const;

 private:
  world::Action act_continuous(const env::Observation& obs, int target);
  world::Action act_grid(const env::Observation& obs, int target) const;
  world::Action travel(const Vec3& g, const Vec3& goal, double finger) const;
  Vec3 plan_push(const env::Observation& obs, int target) const;

  AgentContext ctx_;
  std::array<Vec3, env::kMaxObjects> start_{};
  bool pushing_ = false;
  Vec3 push_dir_;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_episode(const env::Observation& obs) = 0;
  virtual world::Action act(const env::Observation& obs) = 0;
};

/// Parses the goal, takes the lowest-id matching object and drives the
/// controller there. Re-parses whenever the goal text changes.
class OracleAgent : public Agent {
 public:
  OracleAgent(AgentContext ctx, bool blind = false,
              const grammar::Grammar& grammar = grammar::default_grammar(),
              const grammar::Vocabulary& vocab = grammar::default_vocabulary());

  void begin_episode(const env::Observation& obs) override;
  world::Action act(const env::Observation& obs) override;
  std::optional<int> target() const { return target_; }

 private:
  void resolve(const env::Observation& obs);

  ScriptedController controller_;
  bool blind_;
  const grammar::Grammar* grammar_;
  const grammar::Vocabulary* vocab_;
  std::vector<int> goal_ids_;
  std::optional<int> target_;
};

/// Uniform random actions.
class RandomAgent : public Agent {
 public:
  RandomAgent(AgentContext ctx, std::uint64_t seed) : ctx_(ctx), rng_(seed) {}
  void begin_episode(const env::Observation&) override {}
  world::Action act(const env::Observation& obs) override;

 private:
  AgentContext ctx_;
  Rng rng_;
};

/// Per-object attribute features: color one-hot, shape one-hot, bias.
inline constexpr std::size_t kAttributeFeatures = kNumColors + kNumShapes + 1;

/// Linear scores over (goal word, object attribute) pairs.
struct LinearGroundingParams {
  std::size_t vocab_size = 0;
  std::vector<double> w;  // vocab_size x kAttributeFeatures, row-major
  double alpha = 0.05;
  double tau = 1.0;
  /// Running mean return, one entry per decision index within an episode.
  std::vector<double> baselines;
  double baseline_rate = 0.01;

  static LinearGroundingParams zeros(std::size_t vocab_size);
  std::size_t index(std::size_t word, std::size_t attribute) const {
    return word * kAttributeFeatures + attribute;
  }
};

using Bow = std::vector<int>;  // distinct non-padding word ids, ascending

Bow bag_of_words(std::span<const int> goal_ids);
std::array<double, kAttributeFeatures> attribute_features(Color c, Shape s);
double score(const LinearGroundingParams& p, const Bow& bow, const std::array<double, kAttributeFeatures>& a);

/// Softmax over the candidates' scores divided by tau.
std::vector<double> target_distribution(const LinearGroundingParams& p, const Bow& bow,
                                        std::span<const std::array<double, kAttributeFeatures>> candidates);

/// One target choice made during an episode.
struct Decision {
  int step = 0;  // number of env steps taken before the choice
  Bow bow;
  std::vector<std::array<double, kAttributeFeatures>> candidates;
  std::vector<int> slots;
  std::size_t chosen = 0;
  std::vector<double> probs;
};

struct LearnerTrace {
  std::vector<Decision> decisions;
  std::vector<int> rewards;
};

/// Samples a target from the linear policy at episode start and whenever
/// the goal changes, then lets the controller reach it. Reads `params`
/// without modifying it.
class LearnerAgent : public Agent {
 public:
  LearnerAgent(AgentContext ctx, const LinearGroundingParams& params, std::uint64_t seed);

  void begin_episode(const env::Observation& obs) override;
  world::Action act(const env::Observation& obs) override;
  void record_reward(int r) { trace_.rewards.push_back(r); }
  const LearnerTrace& trace() const { return trace_; }

 private:
  void choose(const env::Observation& obs);

  ScriptedController controller_;
  const LinearGroundingParams* params_;
  Rng rng_;
  std::vector<int> goal_ids_;
  int target_ = 0;
  int steps_ = 0;
  LearnerTrace trace_;
};

/// REINFORCE with a per-decision running-mean baseline. The return of a
/// decision is the reward collected from its step to the end of the
/// episode, divided by max_steps.
void learner_update(LinearGroundingParams& p, const LearnerTrace& trace, int max_steps);

/// Text snapshot: a header line, then one "index weight" line per entry.
void save_params(const LinearGroundingParams& p, const std::filesystem::path& path);
LinearGroundingParams load_params(const std::filesystem::path& path);
std::string params_to_text(const LinearGroundingParams& p);
LinearGroundingParams params_from_text(std::string_view text);

}  // namespace repairbench::agents
