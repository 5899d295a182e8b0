#include <istream>
#include <ostream>
#include <sstream>

#include "repairbench/errors.hpp"
#include "repairbench/harness.hpp"
#include "repairbench/rng.hpp"

namespace repairbench::harness {

namespace {

std::optional<world::GridAction> parse_move(const std::string& s) {
  if (s == "up" || s == "w") return world::GridAction::up;
  if (s == "down" || s == "s") return world::GridAction::down;
  if (s == "left" || s == "a") return world::GridAction::left;
  if (s == "right" || s == "d") return world::GridAction::right;
  if (s == "interact" || s == "e") return world::GridAction::interact;
  return std::nullopt;
}

std::string vocabulary_line(const grammar::Vocabulary& vocab) {
  std::string out = "known words:";
  for (std::size_t i = 1; i < vocab.size(); ++i) out += ' ' + vocab.words()[i];
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// The unique object the goal describes satisfies the task.
bool satisfied(const world::SceneState& scene, const grammar::SemanticGoal& goal, const env::EpisodeConfig& cfg) {
  const auto targets = instructor::matching_objects(goal.object, scene);
  return targets.size() == 1 && world::evaluate_condition(scene, targets.front(), cfg.task, cfg.world);
}

}  // namespace

int interactive_session(const env::EpisodeConfig& cfg, std::istream& in, std::ostream& out) {
  if (cfg.backend != world::Backend::grid) throw ConfigError("backend", "interactive play needs the grid backend");
  cfg.validate();
  const auto& grammar = grammar::default_grammar();
  const auto& vocab = grammar::default_vocabulary();

  Rng rng(cfg.seed);
  world::SceneState scene = env::sample_scene(cfg, env::ScenarioKind::none, rng).scene;
  out << world::render_grid(scene, cfg.world);

  grammar::Utterance instruction;
  grammar::Utterance goal;
  grammar::SemanticGoal meaning;
  std::string line;
  while (true) {
    out << "instruction> " << std::flush;
    if (!std::getline(in, line)) return 1;
    line = trim(line);
    if (line == "quit") return 1;
    try {
      const auto utterance = grammar::Utterance::from_text(line);
      const auto parsed = grammar.parse(utterance);
      if (parsed.correction) throw ParseError("type the instruction first, corrections come later", 0);
      vocab.encode(utterance);
      instruction = goal = utterance;
      meaning = parsed.combined;
      break;
    } catch (const std::exception& e) {
      out << "could not parse: " << e.what() << '\n' << vocabulary_line(vocab) << '\n';
    }
  }
  out << "goal: " << goal.text() << '\n';

  agents::OracleAgent oracle(agents::AgentContext::from(cfg));
  oracle.begin_episode(env::observe(scene, goal, vocab));
  while (scene.step_count < cfg.max_steps) {
    out << "> " << std::flush;
    if (!std::getline(in, line)) return 1;
    line = trim(line);
    if (line == "quit") return 1;

    world::Action action = world::GridAction::up;
    if (line.empty() || line == "step") {
      action = oracle.act(env::observe(scene, goal, vocab));
    } else if (auto move = parse_move(line)) {
      action = *move;
    } else {
      try {
        const auto extended = grammar::extend_goal(instruction, grammar::Utterance::from_text(line));
        const auto parsed = grammar.parse(extended);
        if (!parsed.correction) throw ParseError("expected a correction such as 'actually the green cube'", 0);
        vocab.encode(extended);
        goal = extended;
        meaning = parsed.combined;
        out << "goal: " << goal.text() << '\n';
      } catch (const std::exception& e) {
        out << "could not parse: " << e.what() << '\n' << vocabulary_line(vocab) << '\n';
      }
      continue;
    }

    scene = world::apply_action(scene, action, cfg.world);
    out << world::render_grid(scene, cfg.world);
    if (satisfied(scene, meaning, cfg)) {
      out << "reward 0, success after " << scene.step_count << " steps\n";
      return 0;
    }
    out << "reward -1\n";
  }
  out << "out of steps\n";
  return 1;
}

}  // namespace repairbench::harness
