#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "repairbench/grammar.hpp"
#include "repairbench/world.hpp"

namespace repairbench {
class Rng;
}

namespace repairbench::instructor {

enum class ScenarioKind { none, ambiguity, common_ground, instruction_correction };
enum class CorrectionMode { AC, ACN };
enum class Timing { immediate, on_interaction };

std::string_view to_string(ScenarioKind k);
std::string_view to_string(CorrectionMode m);
std::string_view to_string(Timing t);
std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s);
std::optional<CorrectionMode> correction_mode_from_string(std::string_view s);
std::optional<Timing> timing_from_string(std::string_view s);

/// A correction prepared for one possible wrong interaction.
struct PlannedCorrection {
  std::optional<int> trigger;
  grammar::ObjectDescription fragment;
  grammar::Beginning beginning;
  grammar::NounForm noun_form = grammar::NounForm::color_shape;
  grammar::SynonymChoice synonyms;
  grammar::Utterance utterance;
  grammar::SemanticGoal combined_goal;
};

/// The instructor's private knowledge about one episode.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::none;
  int intended_target = 0;
  /// What the instructor means by the first utterance. For common ground the
  /// color is the intended one even though it is spoken as a rare word.
  grammar::SemanticGoal instruction_goal;
  grammar::NounForm instruction_form = grammar::NounForm::color_shape;
  grammar::SynonymChoice instruction_synonyms;
  grammar::Utterance instruction;
  /// Object the instruction names when the instructor mis-spoke.
  std::optional<int> named_object;
  CorrectionMode mode = CorrectionMode::AC;
  Timing timing = Timing::on_interaction;
  int delay_steps = 0;

  std::vector<PlannedCorrection> planned;
  bool correction_issued = false;
  std::optional<grammar::SemanticGoal> corrected_goal;
  std::optional<int> pending_trigger;
  int pending_since = 0;

  /// Goal as the agent currently hears it, and its parsed meaning.
  grammar::Utterance current_goal;
  grammar::SemanticGoal current_meaning;

  /// A correction is still expected: the episode is a correction episode
  /// waiting for a wrong interaction.
  bool correction_pending() const {
    return kind != ScenarioKind::none && timing == Timing::on_interaction && !correction_issued;
  }
};

struct CorrectionEvent {
  int step_issued = 0;
  std::optional<int> trigger_object;
  grammar::Utterance correction_utterance;
  grammar::SemanticGoal combined_goal;
};

/// Knobs for build_scenario. Unset optionals are sampled.
struct ScenarioOptions {
  CorrectionMode mode = CorrectionMode::AC;
  Timing timing = Timing::on_interaction;
  int delay_steps = 0;
  std::optional<grammar::NounForm> instruction_form;
  std::optional<grammar::SynonymChoice> instruction_synonyms;
  std::optional<grammar::Beginning> beginning;  // AC only
  std::optional<std::size_t> correction_shape_synonym;
  std::optional<int> named_object;  // instruction correction only
};

/// Objects matching a description; a color_unknown slot matches any color.
std::vector<int> matching_objects(const grammar::ObjectDescription& description,
                                  const world::SceneState& scene);

/// Objects matching the instruction merged with an optional correction.
std::vector<int> resolve_target_set(const grammar::SemanticGoal& instruction,
                                    const std::optional<grammar::ObjectDescription>& correction,
                                    const world::SceneState& scene);

/// Chooses the instruction for `intended` and prepares the correction for
/// every wrong interaction the scenario can provoke. Throws ScenarioError
/// when the scene cannot host the requested kind (no ambiguous pair, no
/// rare synonym, no unique correction).
ScenarioSpec build_scenario(const world::SceneState& scene, int intended, Task task,
                            ScenarioKind kind, const ScenarioOptions& options, Rng& rng,
                            const grammar::Grammar& grammar = grammar::default_grammar());

/// Watch one transition. Issues at most one correction per episode.
std::optional<CorrectionEvent> tick(ScenarioSpec& spec, const world::SceneState& next, Task task,
                                    const world::WorldConfig& cfg = {});

/// Sparse reward: 0 when the goal object's task condition holds, -1
/// otherwise. While a correction is pending only the intended object counts.
int reward(const world::SceneState& next, const ScenarioSpec& spec, Task task,
           const world::WorldConfig& cfg = {});

}  // namespace repairbench::instructor
