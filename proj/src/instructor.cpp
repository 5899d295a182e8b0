#include "repairbench/instructor.hpp"

#include <algorithm>
#include <array>

#include "repairbench/errors.hpp"
#include "repairbench/rng.hpp"

namespace repairbench::instructor {

using grammar::Beginning;
using grammar::NounForm;
using grammar::ObjectDescription;
using grammar::SemanticGoal;
using world::ObjectState;
using world::SceneState;

namespace {

constexpr std::array<std::string_view, 4> kKindNames = {"none", "ambiguity", "common_ground",
                                                        "instruction_correction"};

ObjectDescription describe(const ObjectState& o, NounForm form) {
  ObjectDescription d;
  if (form != NounForm::shape_only) d.color = o.color;
  if (form != NounForm::color_only) d.shape = o.shape;
  return d;
}

bool singles_out(const ObjectDescription& d, const SceneState& scene, int id) {
  const auto m = matching_objects(d, scene);
  return m.size() == 1 && m.front() == id;
}

// Semantic part of a correction; surface choices are filled in later.
struct CorrectionPlan {
  std::optional<int> trigger;
  ObjectDescription fragment;
  NounForm noun_form;
};

std::optional<CorrectionPlan> plan_affirmative(const SceneState& scene, int intended,
                                               const ObjectDescription& heard) {
  const auto& target = scene.objects[static_cast<std::size_t>(intended)];
  // Name the color alone when it picks out the target both by itself and
  // together with what was already said; otherwise name color and shape.
  ObjectDescription color_only;
  color_only.color = target.color;
  if (singles_out(color_only, scene, intended) &&
      singles_out(grammar::merge(heard, color_only), scene, intended)) {
    return CorrectionPlan{std::nullopt, color_only, NounForm::color_only};
  }
  ObjectDescription both = describe(target, NounForm::color_shape);
  if (singles_out(grammar::merge(heard, both), scene, intended)) {
    return CorrectionPlan{std::nullopt, both, NounForm::color_shape};
  }
  return std::nullopt;
}

std::optional<CorrectionPlan> plan_negation(const SceneState& scene, int intended, int trigger,
                                            const ObjectDescription& heard) {
  const auto& target = scene.objects[static_cast<std::size_t>(intended)];
  const auto& wrong = scene.objects[static_cast<std::size_t>(trigger)];
  if (wrong.color != target.color) {
    ObjectDescription neg;
    neg.negated_colors.set(index_of(wrong.color));
    if (singles_out(grammar::merge(heard, neg), scene, intended)) {
      return CorrectionPlan{trigger, neg, NounForm::color_only};
    }
  }
  if (wrong.shape != target.shape) {
    ObjectDescription neg;
    neg.negated_shapes.set(index_of(wrong.shape));
    if (singles_out(grammar::merge(heard, neg), scene, intended)) {
      return CorrectionPlan{trigger, neg, NounForm::shape_only};
    }
  }
  return std::nullopt;
}

struct Candidate {
  NounForm form;
  int referent;
  ObjectDescription heard;  // instruction as the listener parses it
  std::vector<CorrectionPlan> plans;
};

// Wrong objects the instructor reacts to, given what the agent heard.
std::vector<int> triggers_for(ScenarioKind kind, const SceneState& scene, int intended,
                              int referent, const ObjectDescription& heard, Timing timing) {
  std::vector<int> out;
  switch (kind) {
    case ScenarioKind::none:
      break;
    case ScenarioKind::ambiguity:
      for (int id : matching_objects(heard, scene)) {
        if (id != intended) out.push_back(id);
      }
      break;
    case ScenarioKind::instruction_correction:
      out.push_back(referent);
      break;
    case ScenarioKind::common_ground:
      if (timing == Timing::immediate) {
        for (int id : matching_objects(heard, scene)) {
          if (id != intended) out.push_back(id);
        }
      } else {
        for (const auto& o : scene.objects) {
          if (o.id != intended) out.push_back(o.id);
        }
      }
      break;
  }
  if (timing == Timing::immediate && out.size() > 1) out.resize(1);
  return out;
}

bool plan_all(Candidate& c, ScenarioKind kind, const SceneState& scene, int intended,
              CorrectionMode mode, Timing timing) {
  if (kind == ScenarioKind::none) return true;
  const auto triggers = triggers_for(kind, scene, intended, c.referent, c.heard, timing);
  if (triggers.empty()) return false;
  for (int t : triggers) {
    auto plan = mode == CorrectionMode::AC ? plan_affirmative(scene, intended, c.heard)
                                           : plan_negation(scene, intended, t, c.heard);
    if (!plan) return false;
    plan->trigger = t;
    c.plans.push_back(*plan);
  }
  return true;
}

std::vector<Candidate> enumerate_candidates(const SceneState& scene, int intended, ScenarioKind kind,
                                            const ScenarioOptions& options,
                                            const grammar::Grammar& grammar) {
  const auto& target = scene.objects[static_cast<std::size_t>(intended)];
  constexpr std::array<NounForm, 3> kForms = {NounForm::color_shape, NounForm::shape_only,
                                              NounForm::color_only};
  std::vector<Candidate> out;
  auto allowed = [&](NounForm f) { return !options.instruction_form || *options.instruction_form == f; };

  switch (kind) {
    case ScenarioKind::none:
      for (NounForm f : kForms) {
        if (allowed(f) && singles_out(describe(target, f), scene, intended)) {
          out.push_back({f, intended, describe(target, f), {}});
        }
      }
      break;
    case ScenarioKind::ambiguity:
      for (NounForm f : {NounForm::shape_only, NounForm::color_only}) {
        const auto d = describe(target, f);
        const auto m = matching_objects(d, scene);
        if (allowed(f) && m.size() == 2 && std::count(m.begin(), m.end(), intended) == 1) {
          out.push_back({f, intended, d, {}});
        }
      }
      break;
    case ScenarioKind::common_ground: {
      if (!allowed(NounForm::color_shape)) break;
      if (grammar.lexicon().rare_color_synonyms[index_of(target.color)].empty()) break;
      ObjectDescription heard;
      heard.color_unknown = true;
      heard.shape = target.shape;
      if (matching_objects(heard, scene).size() >= 2) {
        out.push_back({NounForm::color_shape, intended, heard, {}});
      }
      break;
    }
    case ScenarioKind::instruction_correction:
      for (const auto& o : scene.objects) {
        if (o.id == intended) continue;
        if (options.named_object && *options.named_object != o.id) continue;
        for (NounForm f : kForms) {
          if (allowed(f) && singles_out(describe(o, f), scene, o.id)) {
            out.push_back({f, o.id, describe(o, f), {}});
          }
        }
      }
      break;
  }
  return out;
}

}  // namespace

std::string_view to_string(ScenarioKind k) { return kKindNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(CorrectionMode m) { return m == CorrectionMode::AC ? "AC" : "ACN"; }
std::string_view to_string(Timing t) { return t == Timing::immediate ? "immediate" : "on_interaction"; }

std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<ScenarioKind>(i);
  }
  return std::nullopt;
}

std::optional<CorrectionMode> correction_mode_from_string(std::string_view s) {
  if (s == "AC") return CorrectionMode::AC;
  if (s == "ACN") return CorrectionMode::ACN;
  return std::nullopt;
}

std::optional<Timing> timing_from_string(std::string_view s) {
  if (s == "immediate") return Timing::immediate;
  if (s == "on_interaction") return Timing::on_interaction;
  return std::nullopt;
}

std::vector<int> matching_objects(const ObjectDescription& description, const SceneState& scene) {
  std::vector<int> out;
  for (const auto& o : scene.objects) {
    if (description.matches(o.color, o.shape)) out.push_back(o.id);
  }
  return out;
}

std::vector<int> resolve_target_set(const SemanticGoal& instruction,
                                    const std::optional<ObjectDescription>& correction,
                                    const SceneState& scene) {
  const ObjectDescription merged =
      correction ? grammar::merge(instruction.object, *correction) : instruction.object;
  return matching_objects(merged, scene);
}

ScenarioSpec build_scenario(const SceneState& scene, int intended, Task task, ScenarioKind kind,
                            const ScenarioOptions& options, Rng& rng,
                            const grammar::Grammar& grammar) {
  if (intended < 0 || static_cast<std::size_t>(intended) >= scene.objects.size()) {
    throw ContractViolation("intended target is not an object of the scene");
  }
  if (options.delay_steps < 0) throw ContractViolation("delay_steps must be non-negative");
  if (options.beginning && options.beginning->kind == Beginning::Kind::negation) {
    throw ContractViolation("the beginning override applies to affirmative corrections");
  }

  auto candidates = enumerate_candidates(scene, intended, kind, options, grammar);
  std::erase_if(candidates, [&](Candidate& c) {
    return !plan_all(c, kind, scene, intended, options.mode, options.timing);
  });
  if (candidates.empty()) {
    throw ScenarioError("scene cannot host a " + std::string(to_string(kind)) + " scenario");
  }
  const Candidate chosen = candidates[rng.index(candidates.size())];
  const auto& referent = scene.objects[static_cast<std::size_t>(chosen.referent)];

  ScenarioSpec spec;
  spec.kind = kind;
  spec.intended_target = intended;
  spec.mode = options.mode;
  spec.timing = options.timing;
  spec.delay_steps = options.delay_steps;
  spec.instruction_form = chosen.form;
  spec.instruction_goal = {task, describe(referent, chosen.form)};
  if (kind == ScenarioKind::instruction_correction) spec.named_object = chosen.referent;

  const auto& lex = grammar.lexicon();
  if (options.instruction_synonyms) {
    spec.instruction_synonyms = *options.instruction_synonyms;
  } else {
    spec.instruction_synonyms = grammar.sample_synonyms(task, spec.instruction_goal.object.shape, rng);
  }
  spec.instruction_synonyms.rare_color = kind == ScenarioKind::common_ground;
  spec.instruction =
      grammar.generate_instruction(spec.instruction_goal, chosen.form, spec.instruction_synonyms);

  if (kind != ScenarioKind::none) {
    Beginning beginning = Beginning::negation();
    if (options.mode == CorrectionMode::AC) {
      if (options.beginning) {
        beginning = *options.beginning;
      } else {
        const std::size_t pick = rng.index(1 + lex.excuses.size());
        beginning = pick == 0 ? Beginning::edit() : Beginning::excuse(pick - 1);
      }
    }
    for (const auto& plan : chosen.plans) {
      PlannedCorrection pc;
      pc.trigger = plan.trigger;
      pc.fragment = plan.fragment;
      pc.beginning = beginning;
      pc.noun_form = plan.noun_form;
      std::optional<Shape> shape = plan.fragment.shape;
      for (Shape s : kAllShapes) {
        if (plan.fragment.negated_shapes.test(index_of(s))) shape = s;
      }
      if (options.correction_shape_synonym) {
        pc.synonyms.shape = *options.correction_shape_synonym;
      } else if (shape) {
        pc.synonyms.shape = rng.index(lex.shapes[index_of(*shape)].size());
      }
      pc.utterance = grammar.generate_correction(pc.fragment, beginning, pc.noun_form, pc.synonyms);
      pc.combined_goal = grammar.parse(grammar::extend_goal(spec.instruction, pc.utterance)).combined;
      if (!singles_out(pc.combined_goal.object, scene, intended)) {
        throw std::logic_error("planned correction does not single out the intended object");
      }
      spec.planned.push_back(std::move(pc));
    }
  }

  if (kind != ScenarioKind::none && options.timing == Timing::immediate) {
    const auto& pc = spec.planned.front();
    spec.correction_issued = true;
    spec.corrected_goal = pc.combined_goal;
    spec.current_goal = grammar::extend_goal(spec.instruction, pc.utterance);
    spec.current_meaning = pc.combined_goal;
  } else {
    spec.current_goal = spec.instruction;
    spec.current_meaning = grammar.parse(spec.instruction).combined;
  }
  return spec;
}

std::optional<CorrectionEvent> tick(ScenarioSpec& spec, const SceneState& next, Task task,
                                    const world::WorldConfig& cfg) {
  if (!spec.correction_pending()) return std::nullopt;
  if (!spec.pending_trigger) {
    const auto wrong = world::detect_interaction(next, task, cfg);
    if (!wrong || *wrong == spec.intended_target) return std::nullopt;
    const bool expected = std::any_of(spec.planned.begin(), spec.planned.end(),
                                      [&](const PlannedCorrection& p) { return p.trigger == *wrong; });
    if (!expected) return std::nullopt;
    spec.pending_trigger = *wrong;
    spec.pending_since = next.step_count;
  }
  if (next.step_count - spec.pending_since < spec.delay_steps) return std::nullopt;

  const auto plan = std::find_if(spec.planned.begin(), spec.planned.end(),
                                 [&](const PlannedCorrection& p) { return p.trigger == spec.pending_trigger; });
  spec.correction_issued = true;
  spec.corrected_goal = plan->combined_goal;
  spec.current_goal = grammar::extend_goal(spec.instruction, plan->utterance);
  spec.current_meaning = plan->combined_goal;
  return CorrectionEvent{next.step_count, spec.pending_trigger, plan->utterance, plan->combined_goal};
}

int reward(const SceneState& next, const ScenarioSpec& spec, Task task, const world::WorldConfig& cfg) {
  const auto targets = matching_objects(spec.current_meaning.object, next);
  if (spec.correction_pending()) {
    const int intended = spec.intended_target;
    const bool heard = std::find(targets.begin(), targets.end(), intended) != targets.end();
    return heard && world::evaluate_condition(next, intended, task, cfg) ? 0 : -1;
  }
  if (targets.size() != 1) return -1;
  return world::evaluate_condition(next, targets.front(), task, cfg) ? 0 : -1;
}

}  // namespace repairbench::instructor
