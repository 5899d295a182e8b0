#include "repairbench/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "repairbench/errors.hpp"

namespace repairbench::agents {

using env::Observation;
using world::Action;
using world::ContinuousAction;
using world::GridAction;

namespace {

constexpr double kCruiseHeight = 0.12;
constexpr double kCarryHeight = 0.15;
constexpr double kPushHeight = 0.02;
constexpr double kReachHover = 0.015;  // above the object center
constexpr double kArrived = 1e-4;
// Push geometry: start this far behind the object and plan for this much
// travel so the path check covers any overshoot.
constexpr double kApproachGap = 0.06;
constexpr double kPlannedTravel = 0.11;
constexpr double kPushSlack = 0.002;
constexpr int kPushDirections = 16;

double clamp_move(double v, double limit) { return std::clamp(v, -limit, limit); }

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

std::optional<int> held_object(const Observation& obs, const world::WorldConfig& cfg) {
  if (env::observed_finger(obs) >= cfg.closed_below) return std::nullopt;
  const Vec3 g = env::observed_gripper(obs);
  for (std::size_t i = 0; i < env::kMaxObjects; ++i) {
    const auto o = env::observed_object(obs, i);
    if (!o.valid) continue;
    if (horizontal_distance(g, o.position) < cfg.grasp_radius &&
        std::abs(g.z - o.position.z) < cfg.grasp_height_tolerance) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

}  // namespace

void ScriptedController::begin_episode(const Observation& obs) {
  for (std::size_t i = 0; i < env::kMaxObjects; ++i) start_[i] = env::observed_object(obs, i).position;
  pushing_ = false;
}

Action ScriptedController::idle() const {
  if (ctx_.backend == world::Backend::grid) return GridAction::up;
  return ContinuousAction{};
}

Action ScriptedController::act(const Observation& obs, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= env::kMaxObjects ||
      !env::observed_object(obs, static_cast<std::size_t>(target)).valid) {
    return idle();
  }
  if (ctx_.backend == world::Backend::grid) return act_grid(obs, target);
  return act_continuous(obs, target);
}

Action ScriptedController::act_grid(const Observation& obs, int target) const {
  const Vec3 g = env::observed_gripper(obs);
  const Vec3 o = env::observed_object(obs, static_cast<std::size_t>(target)).position;
  const double dx = o.x - g.x;
  const double dy = o.y - g.y;
  if (std::abs(dx) + std::abs(dy) <= 1.0) return GridAction::interact;
  if (dx != 0.0) return dx > 0.0 ? GridAction::right : GridAction::left;
  return dy > 0.0 ? GridAction::up : GridAction::down;
}

// Rise to cruise height, cross over at that height, then head for `goal`.
Action ScriptedController::travel(const Vec3& g, const Vec3& goal, double finger) const {
  const double step = ctx_.world.max_move;
  if (horizontal_distance(g, goal) > kArrived) {
    if (g.z < kCruiseHeight - kArrived) {
      return ContinuousAction{0.0, 0.0, clamp_move(kCruiseHeight - g.z, step), finger};
    }
    return ContinuousAction{clamp_move(goal.x - g.x, step), clamp_move(goal.y - g.y, step),
                            clamp_move(kCruiseHeight - g.z, step), finger};
  }
  return ContinuousAction{0.0, 0.0, clamp_move(goal.z - g.z, step), finger};
}

Vec3 ScriptedController::plan_push(const Observation& obs, int target) const {
  const Vec3 o = env::observed_object(obs, static_cast<std::size_t>(target)).position;
  const auto& cfg = ctx_.world;
  const double lim = cfg.center_limit();
  const double object_clear = 2.0 * cfg.object_half_extent + 0.01;
  const double gripper_clear = cfg.contact_separation() + 0.01;

  Vec3 best{1.0, 0.0, 0.0};
  double best_margin = -std::numeric_limits<double>::infinity();
  bool best_in_bounds = false;
  for (int k = 0; k < kPushDirections; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / kPushDirections;
    const Vec3 u{std::cos(angle), std::sin(angle), 0.0};
    const Vec3 approach = o - u * kApproachGap;
    const Vec3 end = o + u * kPlannedTravel;
    const Vec3 gripper_end = o + u * (kPlannedTravel - cfg.contact_separation());
    const bool in_bounds = std::abs(approach.x) <= lim - 1e-3 && std::abs(approach.y) <= lim - 1e-3 &&
                           std::abs(end.x) <= lim - 5e-3 && std::abs(end.y) <= lim - 5e-3;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < env::kMaxObjects; ++i) {
      if (static_cast<int>(i) == target) continue;
      const auto other = env::observed_object(obs, i);
      if (!other.valid) continue;
      margin = std::min(margin, point_segment_distance(other.position, o, end) - object_clear);
      margin = std::min(margin, point_segment_distance(other.position, approach, gripper_end) - gripper_clear);
    }
    const bool better = in_bounds != best_in_bounds ? in_bounds : margin > best_margin;
    if (better) {
      best = u;
      best_margin = margin;
      best_in_bounds = in_bounds;
    }
  }
  return best;
}

Action ScriptedController::act_continuous(const Observation& obs, int target) {
  const auto& cfg = ctx_.world;
  const Vec3 g = env::observed_gripper(obs);
  const double finger = env::observed_finger(obs);
  const Vec3 o = env::observed_object(obs, static_cast<std::size_t>(target)).position;
  const double step = cfg.max_move;

  switch (ctx_.task) {
    case Task::reach:
      return travel(g, {o.x, o.y, o.z + kReachHover}, 0.0);

    case Task::grasp:
    case Task::lift: {
      const auto held = held_object(obs, cfg);
      if (held && *held != target) return ContinuousAction{0.0, 0.0, 0.0, 1.0};
      if (held) {
        if (ctx_.task == Task::grasp) return ContinuousAction{0.0, 0.0, 0.0, -1.0};
        return ContinuousAction{0.0, 0.0, clamp_move(kCarryHeight - g.z, step), -1.0};
      }
      if (finger < cfg.closed_below) return ContinuousAction{0.0, 0.0, 0.0, 1.0};
      if (horizontal_distance(g, o) > kArrived || std::abs(g.z - o.z) > kArrived) {
        return travel(g, o, 0.0);
      }
      return ContinuousAction{0.0, 0.0, 0.0, -1.0};
    }

    case Task::push: {
      const double displaced = horizontal_distance(o, start_[static_cast<std::size_t>(target)]);
      if (displaced >= cfg.push_threshold) {
        pushing_ = false;
        return ContinuousAction{};
      }
      if (pushing_) {
        const double vx = o.x - g.x;
        const double vy = o.y - g.y;
        const double d = std::hypot(vx, vy);
        const bool low = g.z < o.z + cfg.object_half_extent;
        const bool aligned = d > 0.0 && d <= kApproachGap + 0.02 &&
                             (vx * push_dir_.x + vy * push_dir_.y) / d >= std::cos(25.0 * std::numbers::pi / 180.0);
        if (low && aligned) {
          const double remaining = cfg.push_threshold + kPushSlack - displaced;
          const double s = std::min(step, std::max(0.0, d - cfg.contact_separation()) + remaining);
          return ContinuousAction{vx / d * s, vy / d * s, 0.0, 0.0};
        }
        pushing_ = false;
      }
      const Vec3 u = plan_push(obs, target);
      const Vec3 approach = o - u * kApproachGap;
      if (horizontal_distance(g, approach) > kArrived || g.z > kPushHeight + kArrived) {
        return travel(g, {approach.x, approach.y, kPushHeight}, 0.0);
      }
      pushing_ = true;
      push_dir_ = u;
      return act_continuous(obs, target);
    }
  }
  return ContinuousAction{};
}

OracleAgent::OracleAgent(AgentContext ctx, bool blind, const grammar::Grammar& grammar,
                         const grammar::Vocabulary& vocab)
    : controller_(ctx), blind_(blind), grammar_(&grammar), vocab_(&vocab) {}

void OracleAgent::begin_episode(const Observation& obs) {
  controller_.begin_episode(obs);
  resolve(obs);
}

void OracleAgent::resolve(const Observation& obs) {
  goal_ids_ = obs.goal_ids;
  target_.reset();
  grammar::ObjectDescription wanted;
  try {
    const auto parsed = grammar_->parse(vocab_->decode(obs.goal_ids));
    wanted = blind_ ? parsed.instruction.object : parsed.combined.object;
  } catch (const ParseError&) {
    return;
  }
  for (std::size_t i = 0; i < env::kMaxObjects; ++i) {
    const auto o = env::observed_object(obs, i);
    if (o.valid && wanted.matches(o.color, o.shape)) {
      target_ = static_cast<int>(i);
      return;
    }
  }
}

Action OracleAgent::act(const Observation& obs) {
  if (!blind_ && obs.goal_ids != goal_ids_) resolve(obs);
  if (!target_) return controller_.idle();
  return controller_.act(obs, *target_);
}

Action RandomAgent::act(const Observation&) {
  if (ctx_.backend == world::Backend::grid) return static_cast<GridAction>(rng_.index(5));
  const double m = ctx_.world.max_move;
  ContinuousAction a;
  a.dx = rng_.uniform(-m, m);
  a.dy = rng_.uniform(-m, m);
  a.dz = rng_.uniform(-m, m);
  a.finger = rng_.uniform(-1.0, 1.0);
  return a;
}

LinearGroundingParams LinearGroundingParams::zeros(std::size_t vocab_size) {
  LinearGroundingParams p;
  p.vocab_size = vocab_size;
  p.w.assign(vocab_size * kAttributeFeatures, 0.0);
  return p;
}

Bow bag_of_words(std::span<const int> goal_ids) {
  Bow bow;
  for (int id : goal_ids) {
    if (id != 0) bow.push_back(id);
  }
  std::sort(bow.begin(), bow.end());
  bow.erase(std::unique(bow.begin(), bow.end()), bow.end());
  return bow;
}

std::array<double, kAttributeFeatures> attribute_features(Color c, Shape s) {
  std::array<double, kAttributeFeatures> a{};
  a[index_of(c)] = 1.0;
  a[kNumColors + index_of(s)] = 1.0;
  a[kAttributeFeatures - 1] = 1.0;
  return a;
}

double score(const LinearGroundingParams& p, const Bow& bow, const std::array<double, kAttributeFeatures>& a) {
  double total = 0.0;
  for (int word : bow) {
    for (std::size_t j = 0; j < kAttributeFeatures; ++j) {
      if (a[j] != 0.0) total += p.w[p.index(static_cast<std::size_t>(word), j)] * a[j];
    }
  }
  return total;
}

std::vector<double> target_distribution(const LinearGroundingParams& p, const Bow& bow,
                                        std::span<const std::array<double, kAttributeFeatures>> candidates) {
  if (!(p.tau > 0.0)) throw ContractViolation("tau must be positive");
  std::vector<double> out(candidates.size());
  if (out.empty()) return out;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out[i] = score(p, bow, candidates[i]) / p.tau;
    top = std::max(top, out[i]);
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

LearnerAgent::LearnerAgent(AgentContext ctx, const LinearGroundingParams& params, std::uint64_t seed)
    : controller_(ctx), params_(&params), rng_(seed) {}

void LearnerAgent::begin_episode(const Observation& obs) {
  controller_.begin_episode(obs);
  trace_ = {};
  steps_ = 0;
  choose(obs);
}

void LearnerAgent::choose(const Observation& obs) {
  goal_ids_ = obs.goal_ids;
  Decision d;
  d.step = steps_;
  d.bow = bag_of_words(obs.goal_ids);
  for (std::size_t i = 0; i < env::kMaxObjects; ++i) {
    const auto o = env::observed_object(obs, i);
    if (!o.valid) continue;
    d.slots.push_back(static_cast<int>(i));
    d.candidates.push_back(attribute_features(o.color, o.shape));
  }
  d.probs = target_distribution(*params_, d.bow, d.candidates);
  const double r = rng_.uniform();
  double acc = 0.0;
  d.chosen = d.probs.size() - 1;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    acc += d.probs[i];
    if (r < acc) {
      d.chosen = i;
      break;
    }
  }
  target_ = d.slots[d.chosen];
  trace_.decisions.push_back(std::move(d));
}

Action LearnerAgent::act(const Observation& obs) {
  if (obs.goal_ids != goal_ids_) choose(obs);
  ++steps_;
  return controller_.act(obs, target_);
}

void learner_update(LinearGroundingParams& p, const LearnerTrace& trace, int max_steps) {
  if (max_steps <= 0) throw ContractViolation("max_steps must be positive");
  std::vector<double> to_go(trace.rewards.size() + 1, 0.0);
  for (std::size_t t = trace.rewards.size(); t-- > 0;) to_go[t] = to_go[t + 1] + trace.rewards[t];

  for (std::size_t k = 0; k < trace.decisions.size(); ++k) {
    const Decision& d = trace.decisions[k];
    const auto at = std::min(static_cast<std::size_t>(std::max(d.step, 0)), trace.rewards.size());
    const double ret = to_go[at] / max_steps;
    if (p.baselines.size() <= k) p.baselines.resize(k + 1, ret);
    const double advantage = ret - p.baselines[k];
    p.baselines[k] += p.baseline_rate * (ret - p.baselines[k]);
    if (advantage == 0.0) continue;
    for (std::size_t c = 0; c < d.candidates.size(); ++c) {
      const double coef = p.alpha * advantage / p.tau * ((c == d.chosen ? 1.0 : 0.0) - d.probs[c]);
      if (coef == 0.0) continue;
      for (int word : d.bow) {
        for (std::size_t j = 0; j < kAttributeFeatures; ++j) {
          if (d.candidates[c][j] != 0.0) p.w[p.index(static_cast<std::size_t>(word), j)] += coef * d.candidates[c][j];
        }
      }
    }
  }
}

std::string params_to_text(const LinearGroundingParams& p) {
  std::ostringstream out;
  out << "linear-grounding 1\n";
  out << "vocab_size " << p.vocab_size << "\n";
  out << "attributes " << kAttributeFeatures << "\n";
  out << "alpha " << format_double(p.alpha) << "\n";
  out << "tau " << format_double(p.tau) << "\n";
  out << "baseline_rate " << format_double(p.baseline_rate) << "\n";
  out << "baselines " << p.baselines.size();
  for (double b : p.baselines) out << ' ' << format_double(b);
  out << "\nweights " << p.w.size() << "\n";
  for (std::size_t i = 0; i < p.w.size(); ++i) out << i << ' ' << format_double(p.w[i]) << "\n";
  return out.str();
}

LinearGroundingParams params_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto fail = [](const std::string& what) -> LinearGroundingParams {
    throw ConfigError("snapshot", what);
  };
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) fail(std::string("expected '") + key + "'");
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "linear-grounding" || version != 1) {
    return fail("not a version 1 linear-grounding snapshot");
  }
  LinearGroundingParams p;
  std::size_t attrs = 0;
  expect("vocab_size");
  in >> p.vocab_size;
  expect("attributes");
  in >> attrs;
  if (!in || attrs != kAttributeFeatures) return fail("attribute count mismatch");
  expect("alpha");
  in >> p.alpha;
  expect("tau");
  in >> p.tau;
  expect("baseline_rate");
  in >> p.baseline_rate;
  expect("baselines");
  std::size_t nb = 0;
  in >> nb;
  p.baselines.resize(nb);
  for (auto& b : p.baselines) in >> b;
  expect("weights");
  std::size_t nw = 0;
  in >> nw;
  if (!in || nw != p.vocab_size * kAttributeFeatures) return fail("weight count mismatch");
  p.w.assign(nw, 0.0);
  for (std::size_t i = 0; i < nw; ++i) {
    std::size_t idx = 0;
    double v = 0.0;
    if (!(in >> idx >> v) || idx >= nw || !std::isfinite(v)) return fail("bad weight entry " + std::to_string(i));
    p.w[idx] = v;
  }
  if (!in) return fail("truncated snapshot");
  return p;
}

void save_params(const LinearGroundingParams& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << params_to_text(p);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

LinearGroundingParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return params_from_text(buf.str());
}

}  // namespace repairbench::agents
