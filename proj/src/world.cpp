#include "repairbench/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "repairbench/errors.hpp"

namespace repairbench::world {

namespace {

constexpr double kEps = 1e-9;

bool at_contact_height(const Vec3& gripper, const ObjectState& o) {
  // The gripper occupies everything above its tip.
  return gripper.z < o.position.z + o.half_extent;
}

Vec3 clamp_to_workspace(Vec3 p, const WorldConfig& cfg) {
  const double lim = cfg.center_limit();
  p.x = std::clamp(p.x, -lim, lim);
  p.y = std::clamp(p.y, -lim, lim);
  p.z = std::clamp(p.z, 0.0, cfg.workspace_height);
  return p;
}

bool in_bounds(const Vec3& p, const WorldConfig& cfg) {
  const double lim = cfg.center_limit() + kEps;
  return std::abs(p.x) <= lim && std::abs(p.y) <= lim;
}

bool consistent(const GripperState& g, const std::vector<ObjectState>& objects,
                const WorldConfig& cfg) {
  const double sep = cfg.contact_separation();
  for (const auto& o : objects) {
    if (!in_bounds(o.position, cfg)) return false;
    if (o.attached) continue;
    if (!at_contact_height(g.position, o)) continue;
    const double d = horizontal_distance(g.position, o.position);
    if (d < sep - kEps && d >= cfg.grasp_radius) return false;
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      const auto& a = objects[i];
      const auto& b = objects[j];
      const double reach = a.half_extent + b.half_extent;
      if (std::abs(a.position.z - b.position.z) >= reach - kEps) continue;
      if (horizontal_distance(a.position, b.position) < reach - kEps) return false;
    }
  }
  return true;
}

// Moves the gripper to `to`, pushing or carrying objects. Returns false and
// leaves the scene untouched if the result would be inconsistent.
bool try_move(SceneState& scene, const Vec3& to, const WorldConfig& cfg) {
  const Vec3 from = scene.gripper.position;
  const double sep = cfg.contact_separation();
  std::vector<ObjectState> objects = scene.objects;
  for (auto& o : objects) {
    if (o.attached) {
      o.position = to + o.attach_offset;
      o.position.z = std::max(o.position.z, o.half_extent);
      continue;
    }
    if (!at_contact_height(to, o)) continue;
    const double d = horizontal_distance(to, o.position);
    if (d >= sep - kEps || d < cfg.grasp_radius) continue;
    // Overlap from above, or dragging an object out from between the
    // fingers, is blocked rather than resolved.
    if (!at_contact_height(from, o)) return false;
    if (horizontal_distance(from, o.position) < cfg.grasp_radius) return false;
    const double ux = (o.position.x - to.x) / d;
    const double uy = (o.position.y - to.y) / d;
    if (!std::isfinite(ux) || !std::isfinite(uy)) return false;
    o.position.x = to.x + ux * sep;
    o.position.y = to.y + uy * sep;
  }
  GripperState g = scene.gripper;
  g.position = to;
  if (!consistent(g, objects, cfg)) return false;
  scene.gripper = g;
  scene.objects = std::move(objects);
  return true;
}

void move_continuous(SceneState& scene, const Vec3& delta, const WorldConfig& cfg) {
  if (delta.x == 0.0 && delta.y == 0.0 && delta.z == 0.0) return;
  const int n = std::max(1, cfg.substeps);
  const Vec3 start = scene.gripper.position;
  // While every substep succeeds the gripper follows the exact straight
  // path, so unobstructed motion lands on start + delta bit-for-bit.
  bool on_path = true;
  for (int k = 1; k <= n; ++k) {
    const Vec3 cur = scene.gripper.position;
    const Vec3 target = on_path ? start + delta * (static_cast<double>(k) / n)
                                : cur + delta * (1.0 / n);
    const std::array<Vec3, 3> candidates = {target, Vec3{target.x, target.y, cur.z},
                                            Vec3{cur.x, cur.y, target.z}};
    bool moved = false;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const Vec3 to = clamp_to_workspace(candidates[c], cfg);
      if (to == cur) continue;
      if (try_move(scene, to, cfg)) {
        moved = true;
        if (c != 0) on_path = false;
        break;
      }
    }
    if (!moved) on_path = false;
  }
}

void update_fingers(SceneState& scene, double finger_delta, const WorldConfig& cfg) {
  const double previous = scene.gripper.finger_opening;
  scene.gripper.finger_opening = std::clamp(previous + finger_delta, 0.0, 1.0);
  const bool closed = scene.gripper.finger_opening < cfg.closed_below;

  if (auto held = scene.attached_object()) {
    if (closed) return;
    auto& o = scene.objects[static_cast<std::size_t>(*held)];
    const ObjectState before = o;
    o.attached = false;
    o.position.z = o.half_extent;
    o.attach_offset = {};
    if (!consistent(scene.gripper, scene.objects, cfg)) {
      // Nowhere to put it down: the fingers stay shut.
      o = before;
      scene.gripper.finger_opening = previous;
    }
    return;
  }
  if (!closed) return;
  const Vec3& g = scene.gripper.position;
  for (auto& o : scene.objects) {
    if (horizontal_distance(g, o.position) < cfg.grasp_radius &&
        std::abs(g.z - o.position.z) < cfg.grasp_height_tolerance) {
      o.attached = true;
      o.attach_offset = o.position - g;
      return;
    }
  }
}

void apply_grid(SceneState& scene, GridAction action, const WorldConfig& cfg) {
  auto& p = scene.gripper.position;
  const double hi = cfg.grid_size - 1;
  switch (action) {
    case GridAction::up: p.y = std::min(p.y + 1.0, hi); break;
    case GridAction::down: p.y = std::max(p.y - 1.0, 0.0); break;
    case GridAction::left: p.x = std::max(p.x - 1.0, 0.0); break;
    case GridAction::right: p.x = std::min(p.x + 1.0, hi); break;
    case GridAction::interact: scene.interacted = true; break;
  }
}

int manhattan(const Vec3& a, const Vec3& b) {
  return static_cast<int>(std::lround(std::abs(a.x - b.x) + std::abs(a.y - b.y)));
}

}  // namespace

std::string_view to_string(Backend b) { return b == Backend::grid ? "grid" : "continuous"; }

std::optional<Backend> backend_from_string(std::string_view name) {
  if (name == "grid") return Backend::grid;
  if (name == "continuous") return Backend::continuous;
  return std::nullopt;
}

std::optional<int> SceneState::attached_object() const {
  for (const auto& o : objects) {
    if (o.attached) return o.id;
  }
  return std::nullopt;
}

SceneState apply_action(const SceneState& scene, const Action& action, const WorldConfig& cfg) {
  SceneState next = scene;
  next.step_count += 1;
  next.interacted = false;
  if (scene.backend == Backend::grid) {
    const auto* move = std::get_if<GridAction>(&action);
    if (!move) throw ContractViolation("grid backend expects a grid action");
    apply_grid(next, *move, cfg);
    return next;
  }
  const auto* a = std::get_if<ContinuousAction>(&action);
  if (!a) throw ContractViolation("continuous backend expects a continuous action");
  auto clip = [&](double v) { return std::isfinite(v) ? std::clamp(v, -cfg.max_move, cfg.max_move) : 0.0; };
  const Vec3 delta{clip(a->dx), clip(a->dy), clip(a->dz)};
  const double finger = std::isfinite(a->finger) ? std::clamp(a->finger, -1.0, 1.0) : 0.0;
  move_continuous(next, delta, cfg);
  update_fingers(next, finger, cfg);
  return next;
}

bool evaluate_condition(const SceneState& scene, int target, Task task, const WorldConfig& cfg) {
  if (target < 0 || static_cast<std::size_t>(target) >= scene.objects.size()) {
    throw ContractViolation("unknown object id " + std::to_string(target));
  }
  const auto& o = scene.objects[static_cast<std::size_t>(target)];
  const auto& g = scene.gripper;
  if (scene.backend == Backend::grid) {
    return scene.interacted && manhattan(g.position, o.position) <= 1;
  }
  switch (task) {
    case Task::reach:
      return distance(g.position, o.position) < cfg.reach_threshold;
    case Task::push:
      return !o.attached && o.position.z == o.half_extent &&
             horizontal_distance(o.position, o.start_position) >= cfg.push_threshold;
    case Task::grasp:
      return o.attached && g.finger_opening < cfg.closed_below;
    case Task::lift:
      return o.attached && o.position.z >= cfg.lift_height;
  }
  return false;
}

std::optional<int> detect_interaction(const SceneState& scene, Task task, const WorldConfig& cfg) {
  for (const auto& o : scene.objects) {
    if (evaluate_condition(scene, o.id, task, cfg)) return o.id;
  }
  return std::nullopt;
}

bool is_consistent(const SceneState& scene, const WorldConfig& cfg) {
  if (scene.backend == Backend::grid) return true;
  return consistent(scene.gripper, scene.objects, cfg);
}

std::string render_grid(const SceneState& scene, const WorldConfig& cfg) {
  const int n = cfg.grid_size;
  std::vector<std::string> rows(static_cast<std::size_t>(n), std::string(static_cast<std::size_t>(n), '.'));
  auto cell = [&](const Vec3& p) -> char& {
    const auto x = static_cast<std::size_t>(std::lround(p.x));
    const auto y = static_cast<std::size_t>(std::lround(p.y));
    return rows[static_cast<std::size_t>(n - 1) - y][x];
  };
  for (const auto& o : scene.objects) cell(o.position) = static_cast<char>('0' + o.id);
  char& agent = cell(scene.gripper.position);
  agent = agent == '.' ? '@' : '*';
  std::ostringstream out;
  for (const auto& r : rows) out << r << '\n';
  for (const auto& o : scene.objects) {
    out << o.id << ": " << to_string(o.color) << ' ' << to_string(o.shape) << '\n';
  }
  return out.str();
}

}  // namespace repairbench::world
