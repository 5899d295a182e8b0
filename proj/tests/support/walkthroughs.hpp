#pragma once

// Scripted repair dialogues: the oracle agent guesses the lowest-id match,
// the instructor corrects it once, and the episode ends in success.

#include <optional>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "repairbench/agents.hpp"
#include "repairbench/rng.hpp"

namespace walkthroughs {

using namespace repairbench;
using grammar::NounForm;

struct Outcome {
  bool success = false;
  int extensions = 0;
  std::string first_goal;
  std::string final_goal;
  std::optional<int> trigger;
};

inline Outcome run(const world::SceneState& scene, int intended, Task task, env::ScenarioKind kind,
                   const instructor::ScenarioOptions& opts) {
  env::EpisodeConfig cfg;
  cfg.task = task;
  cfg.num_objects = static_cast<int>(scene.objects.size());
  cfg.mode = opts.mode;
  env::Environment e(cfg);
  Rng rng(0);
  auto plan = instructor::build_scenario(scene, intended, task, kind, opts, rng);
  auto obs = e.reset_to(scene, plan);
  agents::OracleAgent oracle(agents::AgentContext::from(cfg));
  oracle.begin_episode(obs);
  Outcome out;
  out.first_goal = e.goal().text();
  env::StepResult r;
  do {
    r = e.step(oracle.act(obs));
    obs = r.observation;
    if (r.info.correction_issued_this_step) ++out.extensions;
  } while (!r.done);
  out.success = r.info.success;
  out.final_goal = e.goal().text();
  out.trigger = e.scenario().pending_trigger;
  return out;
}

inline instructor::ScenarioOptions ac(NounForm form, grammar::Beginning beginning) {
  instructor::ScenarioOptions o;
  o.instruction_form = form;
  o.instruction_synonyms = grammar::SynonymChoice{};
  o.beginning = beginning;
  o.correction_shape_synonym = 0;
  return o;
}

inline instructor::ScenarioOptions acn(NounForm form) {
  instructor::ScenarioOptions o;
  o.mode = env::CorrectionMode::ACN;
  o.instruction_form = form;
  o.instruction_synonyms = grammar::SynonymChoice{};
  o.correction_shape_synonym = 0;
  return o;
}

inline world::SceneState red_and_blue_cuboid() {
  return fixtures::continuous_scene({{Color::red, Shape::cuboid, -0.1, 0.05}, {Color::blue, Shape::cuboid, 0.1, -0.05}});
}

// Red cube, green cuboid, green cube; the green cube is meant.
inline world::SceneState three_blocks() {
  return fixtures::continuous_scene({{Color::red, Shape::cube, -0.12, 0.0},
                                     {Color::green, Shape::cuboid, 0.0, 0.12},
                                     {Color::green, Shape::cube, 0.12, -0.04}});
}

struct Case {
  std::string name;
  world::SceneState scene;
  int intended;
  Task task;
  env::ScenarioKind kind;
  instructor::ScenarioOptions opts;
  std::string first_goal;
  std::string final_goal;
};

inline std::vector<Case> cases() {
  using env::ScenarioKind;
  auto mis_spoken = ac(NounForm::color_shape, grammar::Beginning::edit());
  mis_spoken.named_object = 0;
  return {
      {"ambiguity", red_and_blue_cuboid(), 1, Task::reach, ScenarioKind::ambiguity,
       ac(NounForm::shape_only, grammar::Beginning::excuse(0)), "reach the cuboid",
       "reach the cuboid sorry the blue object"},
      {"common ground by name", red_and_blue_cuboid(), 1, Task::reach, ScenarioKind::common_ground,
       ac(NounForm::color_shape, grammar::Beginning::edit()), "reach the azure cuboid",
       "reach the azure cuboid actually the blue object"},
      {"common ground by negation", red_and_blue_cuboid(), 1, Task::reach, ScenarioKind::common_ground,
       acn(NounForm::color_shape), "reach the azure cuboid", "reach the azure cuboid not the red object"},
      {"instruction correction", red_and_blue_cuboid(), 1, Task::reach, ScenarioKind::instruction_correction,
       mis_spoken, "reach the red cuboid", "reach the red cuboid actually the blue object"},
      {"three blocks by name", three_blocks(), 2, Task::grasp, ScenarioKind::ambiguity,
       ac(NounForm::shape_only, grammar::Beginning::edit()), "grasp the cube", "grasp the cube actually the green cube"},
      {"three blocks by negation", three_blocks(), 2, Task::grasp, ScenarioKind::ambiguity,
       acn(NounForm::shape_only), "grasp the cube", "grasp the cube not the red object"},
  };
}

}  // namespace walkthroughs
