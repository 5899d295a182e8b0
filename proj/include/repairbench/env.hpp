#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "repairbench/grammar.hpp"
#include "repairbench/instructor.hpp"
#include "repairbench/world.hpp"

namespace repairbench {
class Rng;
}

namespace repairbench::env {

using instructor::CorrectionMode;
using instructor::ScenarioKind;
using instructor::Timing;
using world::Backend;

struct EpisodeConfig {
  Task task = Task::reach;
  int num_objects = 2;
  Backend backend = Backend::continuous;
  double correction_probability = 0.5;
  int max_steps = 100;
  CorrectionMode mode = CorrectionMode::AC;
  std::vector<ScenarioKind> kinds = {ScenarioKind::ambiguity, ScenarioKind::common_ground,
                                     ScenarioKind::instruction_correction};
  /// Sampling weights over `kinds`; empty means uniform.
  std::vector<double> kind_weights;
  Timing timing = Timing::on_interaction;
  int delay_steps = 0;
  std::uint64_t seed = 0;
  world::WorldConfig world;

  /// Throws ConfigError with the key path relative to `prefix`.
  void validate(const std::string& prefix = "") const;
};

/// Reads the documented keys; unknown keys are rejected. Throws ConfigError.
EpisodeConfig episode_config_from_json(const nlohmann::json& j, const std::string& prefix = "");
nlohmann::json to_json(const EpisodeConfig& cfg);

/// Observation layout, all doubles:
///   [0, 4)   gripper x, y, z, finger opening
///   then kMaxObjects slots of 16: x, y, z, color one-hot (9), shape
///   one-hot (3), valid flag. Slot i holds object id i; absent slots are 0.
/// Goal token ids are kept separately, padded to kMaxGoalTokens.
inline constexpr std::size_t kMaxObjects = 3;
inline constexpr std::size_t kGripperFeatures = 4;
inline constexpr std::size_t kSlotFeatures = 3 + kNumColors + kNumShapes + 1;
inline constexpr std::size_t kFeatureDim = kGripperFeatures + kMaxObjects * kSlotFeatures;

struct Observation {
  std::vector<double> features;
  std::vector<int> goal_ids;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ObservedObject {
  bool valid = false;
  Vec3 position;
  Color color = Color::red;
  Shape shape = Shape::cube;
};

Observation observe(const world::SceneState& scene, const grammar::Utterance& goal,
                    const grammar::Vocabulary& vocab = grammar::default_vocabulary());
ObservedObject observed_object(const Observation& obs, std::size_t slot);
Vec3 observed_gripper(const Observation& obs);
double observed_finger(const Observation& obs);

struct StepInfo {
  bool success = false;
  bool correction_issued_this_step = false;
  bool wrong_interaction = false;
  std::string goal_text;
};

struct StepResult {
  Observation observation;
  int reward = -1;
  bool done = false;
  StepInfo info;
};

struct SampledScene {
  world::SceneState scene;
  int intended = 0;
};

/// Draws objects and positions. Every distractor shares at most one of
/// {color, shape} with the intended object and no two objects are equal in
/// both. Ambiguity scenes contain exactly one other object sharing the
/// color or the shape (chosen at random) with the intended one; common
/// ground scenes contain another object of the intended shape. Throws
/// SamplingError after 1000 rejected position draws.
SampledScene sample_scene(const EpisodeConfig& cfg, ScenarioKind kind, Rng& rng);

/// Per-episode totals.
struct EpisodeSummary {
  ScenarioKind kind = ScenarioKind::none;
  bool success = false;
  bool correction_issued = false;
  int length = 0;
  int total_reward = 0;
};

/// One episode at a time; not shareable across threads.
class Environment {
 public:
  explicit Environment(EpisodeConfig cfg,
                       const grammar::Grammar& grammar = grammar::default_grammar(),
                       const grammar::Vocabulary& vocab = grammar::default_vocabulary());

  /// Starts an episode fully determined by `seed`. With probability
  /// correction_probability it is a correction episode.
  Observation reset(std::uint64_t seed);
  /// Starts an episode from a hand-built scene and scenario.
  Observation reset_to(world::SceneState scene, instructor::ScenarioSpec spec);

  /// Throws ContractViolation when the episode is over.
  StepResult step(const world::Action& action);

  const EpisodeConfig& config() const { return cfg_; }
  const world::SceneState& scene() const { return scene_; }
  const instructor::ScenarioSpec& scenario() const { return spec_; }
  const grammar::Utterance& goal() const { return spec_.current_goal; }
  bool done() const { return done_; }
  const EpisodeSummary& summary() const { return summary_; }
  const grammar::Vocabulary& vocabulary() const { return *vocab_; }
  const grammar::Grammar& grammar() const { return *grammar_; }

  /// Enables the replay log: one JSON line per episode start and per step.
  void set_recording(bool on) { recording_ = on; }
  const std::vector<std::string>& log_lines() const { return log_; }
  void clear_log() { log_.clear(); }

 private:
  Observation start(std::optional<std::uint64_t> seed);

  EpisodeConfig cfg_;
  const grammar::Grammar* grammar_;
  const grammar::Vocabulary* vocab_;
  world::SceneState scene_;
  instructor::ScenarioSpec spec_;
  bool done_ = true;
  EpisodeSummary summary_;
  bool recording_ = false;
  std::vector<std::string> log_;
};

/// JSON value used for an action in logs and on the wire.
nlohmann::json action_to_json(const world::Action& action);
/// Throws ContractViolation if the value does not fit the backend.
world::Action action_from_json(const nlohmann::json& j, Backend backend);

/// Re-simulates a replay log line by line from its episode records and
/// actions. Returns the index of the first differing line, or nullopt when
/// the regenerated log is identical.
std::optional<std::size_t> verify_replay(std::span<const std::string> lines);

}  // namespace repairbench::env
