#include "repairbench/env.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "repairbench/errors.hpp"
#include "repairbench/rng.hpp"

namespace repairbench::env {

using nlohmann::json;
using world::ObjectState;
using world::SceneState;

namespace {

constexpr int kMaxDraws = 1000;
// Objects are placed this far inside the reachable area so the gripper can
// get behind every object when pushing.
constexpr double kPlacementMargin = 0.055;
constexpr double kMinSeparation = 0.10;
constexpr Vec3 kGripperStart{0.0, 0.0, 0.15};

struct Attributes {
  Color color;
  Shape shape;
  friend bool operator==(const Attributes&, const Attributes&) = default;
};

int shared(const Attributes& a, const Attributes& b) {
  return (a.color == b.color ? 1 : 0) + (a.shape == b.shape ? 1 : 0);
}

Attributes draw_attributes(Rng& rng) {
  return {kAllColors[rng.index(kNumColors)], kAllShapes[rng.index(kNumShapes)]};
}

Color other_color(Color c, Rng& rng) {
  auto i = rng.index(kNumColors - 1);
  if (i >= index_of(c)) ++i;
  return kAllColors[i];
}

Shape other_shape(Shape s, Rng& rng) {
  auto i = rng.index(kNumShapes - 1);
  if (i >= index_of(s)) ++i;
  return kAllShapes[i];
}

std::vector<Attributes> draw_object_attributes(int n, ScenarioKind kind, Rng& rng) {
  const Attributes goal = draw_attributes(rng);
  std::vector<Attributes> out{goal};
  // Extra constraint on the remaining distractors, so the planned
  // underspecified instruction still matches exactly two objects.
  bool keep_shape_unique = false;
  bool keep_color_unique = false;
  if (kind == ScenarioKind::ambiguity) {
    if (rng.bernoulli(0.5)) {
      out.push_back({other_color(goal.color, rng), goal.shape});
      keep_shape_unique = true;
    } else {
      out.push_back({goal.color, other_shape(goal.shape, rng)});
      keep_color_unique = true;
    }
  } else if (kind == ScenarioKind::common_ground) {
    out.push_back({other_color(goal.color, rng), goal.shape});
  }
  int draws = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++draws > kMaxDraws) throw SamplingError("could not draw distractor attributes");
    const Attributes cand = draw_attributes(rng);
    if (shared(cand, goal) > 1) continue;
    if (std::find(out.begin(), out.end(), cand) != out.end()) continue;
    if (keep_shape_unique && cand.shape == goal.shape) continue;
    if (keep_color_unique && cand.color == goal.color) continue;
    out.push_back(cand);
  }
  return out;
}

std::vector<Vec3> draw_positions(const EpisodeConfig& cfg, Rng& rng) {
  const auto n = static_cast<std::size_t>(cfg.num_objects);
  std::vector<Vec3> out(n);
  if (cfg.backend == Backend::grid) {
    const auto size = static_cast<std::size_t>(cfg.world.grid_size);
    auto cell = [&] {
      return Vec3{static_cast<double>(rng.index(size)), static_cast<double>(rng.index(size)), 0.0};
    };
    auto manhattan = [](const Vec3& a, const Vec3& b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); };
    for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
      for (auto& p : out) p = cell();
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        for (std::size_t j = i + 1; j < n && ok; ++j) ok = manhattan(out[i], out[j]) >= 3.0;
      }
      if (ok) return out;
    }
    throw SamplingError("could not place objects on the grid");
  }
  const double lim = cfg.world.center_limit() - kPlacementMargin;
  const double h = cfg.world.object_half_extent;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    for (auto& p : out) {
      p.x = rng.uniform(-lim, lim);
      p.y = rng.uniform(-lim, lim);
      p.z = h;
    }
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = i + 1; j < n && ok; ++j) {
        ok = horizontal_distance(out[i], out[j]) >= kMinSeparation;
      }
    }
    if (ok) return out;
  }
  throw SamplingError("could not place objects without overlap");
}

Vec3 draw_agent_cell(const EpisodeConfig& cfg, const std::vector<Vec3>& objects, Rng& rng) {
  const auto size = static_cast<std::size_t>(cfg.world.grid_size);
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    const Vec3 p{static_cast<double>(rng.index(size)), static_cast<double>(rng.index(size)), 0.0};
    const bool clear = std::all_of(objects.begin(), objects.end(), [&](const Vec3& o) {
      return std::abs(o.x - p.x) + std::abs(o.y - p.y) >= 2.0;
    });
    if (clear) return p;
  }
  throw SamplingError("could not place the agent");
}

ScenarioKind draw_kind(const EpisodeConfig& cfg, Rng& rng) {
  if (!rng.bernoulli(cfg.correction_probability) || cfg.kinds.empty()) return ScenarioKind::none;
  if (cfg.kind_weights.empty()) return cfg.kinds[rng.index(cfg.kinds.size())];
  const double total = std::accumulate(cfg.kind_weights.begin(), cfg.kind_weights.end(), 0.0);
  double r = rng.uniform() * total;
  for (std::size_t i = 0; i < cfg.kinds.size(); ++i) {
    r -= cfg.kind_weights[i];
    if (r < 0.0) return cfg.kinds[i];
  }
  // Rounding left r at zero: take the last kind with positive weight.
  for (std::size_t i = cfg.kinds.size(); i-- > 0;) {
    if (cfg.kind_weights[i] > 0.0) return cfg.kinds[i];
  }
  return cfg.kinds.back();
}

}  // namespace

Observation observe(const SceneState& scene, const grammar::Utterance& goal,
                    const grammar::Vocabulary& vocab) {
  if (scene.objects.size() > kMaxObjects) throw ContractViolation("too many objects to observe");
  Observation obs;
  obs.features.assign(kFeatureDim, 0.0);
  const auto& g = scene.gripper;
  obs.features[0] = g.position.x;
  obs.features[1] = g.position.y;
  obs.features[2] = g.position.z;
  obs.features[3] = g.finger_opening;
  for (const auto& o : scene.objects) {
    double* slot = obs.features.data() + kGripperFeatures + static_cast<std::size_t>(o.id) * kSlotFeatures;
    slot[0] = o.position.x;
    slot[1] = o.position.y;
    slot[2] = o.position.z;
    slot[3 + index_of(o.color)] = 1.0;
    slot[3 + kNumColors + index_of(o.shape)] = 1.0;
    slot[kSlotFeatures - 1] = 1.0;
  }
  obs.goal_ids = vocab.encode(goal, grammar::kMaxGoalTokens);
  return obs;
}

ObservedObject observed_object(const Observation& obs, std::size_t slot) {
  if (slot >= kMaxObjects || obs.features.size() != kFeatureDim) {
    throw ContractViolation("bad observation slot");
  }
  const double* s = obs.features.data() + kGripperFeatures + slot * kSlotFeatures;
  ObservedObject out;
  out.valid = s[kSlotFeatures - 1] != 0.0;
  if (!out.valid) return out;
  out.position = {s[0], s[1], s[2]};
  for (std::size_t i = 0; i < kNumColors; ++i) {
    if (s[3 + i] != 0.0) out.color = kAllColors[i];
  }
  for (std::size_t i = 0; i < kNumShapes; ++i) {
    if (s[3 + kNumColors + i] != 0.0) out.shape = kAllShapes[i];
  }
  return out;
}

Vec3 observed_gripper(const Observation& obs) {
  return {obs.features.at(0), obs.features.at(1), obs.features.at(2)};
}

double observed_finger(const Observation& obs) { return obs.features.at(3); }

SampledScene sample_scene(const EpisodeConfig& cfg, ScenarioKind kind, Rng& rng) {
  const auto attrs = draw_object_attributes(cfg.num_objects, kind, rng);
  const auto positions = draw_positions(cfg, rng);

  // attrs[0] is the intended object; shuffle which id it gets.
  std::vector<std::size_t> order(attrs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  SampledScene out;
  SceneState& scene = out.scene;
  scene.backend = cfg.backend;
  for (std::size_t id = 0; id < order.size(); ++id) {
    ObjectState o;
    o.id = static_cast<int>(id);
    o.color = attrs[order[id]].color;
    o.shape = attrs[order[id]].shape;
    o.position = positions[id];
    o.start_position = positions[id];
    o.half_extent = cfg.backend == Backend::grid ? 0.0 : cfg.world.object_half_extent;
    if (order[id] == 0) out.intended = o.id;
    scene.objects.push_back(o);
  }
  if (cfg.backend == Backend::grid) {
    scene.gripper.position = draw_agent_cell(cfg, positions, rng);
    scene.gripper.finger_opening = 0.0;
  } else {
    scene.gripper.position = kGripperStart;
    scene.gripper.finger_opening = 1.0;
  }
  return out;
}

Environment::Environment(EpisodeConfig cfg, const grammar::Grammar& grammar,
                         const grammar::Vocabulary& vocab)
    : cfg_(std::move(cfg)), grammar_(&grammar), vocab_(&vocab) {
  cfg_.validate();
}

Observation Environment::reset(std::uint64_t seed) {
  Rng rng(seed);
  const ScenarioKind kind = draw_kind(cfg_, rng);
  instructor::ScenarioOptions options;
  options.mode = cfg_.mode;
  options.timing = cfg_.timing;
  options.delay_steps = cfg_.delay_steps;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    SampledScene sampled = sample_scene(cfg_, kind, rng);
    try {
      spec_ = instructor::build_scenario(sampled.scene, sampled.intended, cfg_.task, kind, options, rng,
                                         *grammar_);
    } catch (const ScenarioError&) {
      continue;
    }
    scene_ = std::move(sampled.scene);
    return start(seed);
  }
  throw SamplingError("no scene could host a " + std::string(instructor::to_string(kind)) + " scenario");
}

Observation Environment::reset_to(SceneState scene, instructor::ScenarioSpec spec) {
  if (scene.backend != cfg_.backend) throw ContractViolation("scene backend differs from the config");
  if (scene.objects.size() > kMaxObjects) throw ContractViolation("too many objects");
  scene_ = std::move(scene);
  spec_ = std::move(spec);
  return start(std::nullopt);
}

Observation Environment::start(std::optional<std::uint64_t> seed) {
  scene_.step_count = 0;
  done_ = false;
  summary_ = {};
  summary_.kind = spec_.kind;
  summary_.correction_issued = spec_.correction_issued;
  if (recording_) {
    json rec = {{"type", "episode"},
                {"config", to_json(cfg_)},
                {"kind", std::string(instructor::to_string(spec_.kind))},
                {"intended", spec_.intended_target},
                {"goal_text", spec_.current_goal.text()}};
    rec["seed"] = seed ? json(*seed) : json(nullptr);
    log_.push_back(rec.dump());
  }
  return observe(scene_, spec_.current_goal, *vocab_);
}

StepResult Environment::step(const world::Action& action) {
  if (done_) throw ContractViolation("step called on a finished episode");
  SceneState next = world::apply_action(scene_, action, cfg_.world);
  const auto event = instructor::tick(spec_, next, cfg_.task, cfg_.world);
  const auto touched = world::detect_interaction(next, cfg_.task, cfg_.world);

  StepResult result;
  result.reward = instructor::reward(next, spec_, cfg_.task, cfg_.world);
  scene_ = std::move(next);
  result.info.success = result.reward == 0;
  result.info.correction_issued_this_step = event.has_value();
  result.info.wrong_interaction = touched && *touched != spec_.intended_target;
  result.info.goal_text = spec_.current_goal.text();
  result.done = result.info.success || scene_.step_count >= cfg_.max_steps;
  done_ = result.done;

  summary_.length = scene_.step_count;
  summary_.total_reward += result.reward;
  summary_.success = result.info.success;
  summary_.correction_issued = spec_.correction_issued;

  result.observation = observe(scene_, spec_.current_goal, *vocab_);
  if (recording_) {
    json events = json::array();
    if (result.info.wrong_interaction) events.push_back("wrong_interaction");
    if (event) events.push_back("correction");
    if (result.info.success) events.push_back("success");
    else if (result.done) events.push_back("timeout");
    json rec = {{"type", "step"},
                {"step", scene_.step_count},
                {"action", action_to_json(action)},
                {"reward", result.reward},
                {"done", result.done},
                {"goal_text", result.info.goal_text},
                {"events", events}};
    log_.push_back(rec.dump());
  }
  return result;
}

namespace {

constexpr std::array<std::string_view, 5> kGridActionNames = {"up", "down", "left", "right", "interact"};

}  // namespace

json action_to_json(const world::Action& action) {
  if (const auto* g = std::get_if<world::GridAction>(&action)) {
    return std::string(kGridActionNames[static_cast<std::size_t>(*g)]);
  }
  const auto& a = std::get<world::ContinuousAction>(action);
  return json::array({a.dx, a.dy, a.dz, a.finger});
}

world::Action action_from_json(const json& j, Backend backend) {
  if (backend == Backend::grid) {
    const json* v = &j;
    if (j.is_array()) {
      if (j.size() != 1) throw ContractViolation("grid action must have exactly one element");
      v = &j[0];
    }
    if (v->is_string()) {
      const auto name = v->get<std::string>();
      for (std::size_t i = 0; i < kGridActionNames.size(); ++i) {
        if (kGridActionNames[i] == name) return static_cast<world::GridAction>(i);
      }
      throw ContractViolation("unknown grid action '" + name + "'");
    }
    if (v->is_number_integer()) {
      const auto k = v->get<long long>();
      if (k < 0 || k >= static_cast<long long>(kGridActionNames.size())) {
        throw ContractViolation("grid action index out of range");
      }
      return static_cast<world::GridAction>(k);
    }
    throw ContractViolation("grid action must be a name or an index 0..4");
  }
  if (!j.is_array() || j.size() != 4) throw ContractViolation("continuous action must be [dx, dy, dz, df]");
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw ContractViolation("continuous action entries must be numbers");
    v[i] = j[i].get<double>();
  }
  return world::ContinuousAction{v[0], v[1], v[2], v[3]};
}

std::optional<std::size_t> verify_replay(std::span<const std::string> lines) {
  std::optional<Environment> env;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json rec;
    try {
      rec = json::parse(lines[i]);
    } catch (const json::parse_error&) {
      return i;
    }
    const auto type = rec.value("type", std::string());
    try {
      if (type == "episode") {
        if (!rec.contains("seed") || !rec["seed"].is_number_unsigned()) return i;
        env.emplace(episode_config_from_json(rec.at("config")));
        env->set_recording(true);
        env->reset(rec["seed"].get<std::uint64_t>());
      } else if (type == "step") {
        if (!env || env->done()) return i;
        env->step(action_from_json(rec.at("action"), env->config().backend));
      } else {
        return i;
      }
    } catch (const std::exception&) {
      return i;
    }
    if (env->log_lines().back() != lines[i]) return i;
  }
  return std::nullopt;
}

}  // namespace repairbench::env
