#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "repairbench/types.hpp"

namespace repairbench::world {

enum class Backend { continuous, grid };

std::string_view to_string(Backend b);
std::optional<Backend> backend_from_string(std::string_view name);

/// Geometry and task thresholds, all in meters. The table surface is the
/// plane z = 0 and spans [-table_half_size, table_half_size] on x and y.
struct WorldConfig {
  double table_half_size = 0.25;
  double object_half_extent = 0.025;
  double gripper_radius = 0.02;
  double workspace_height = 0.30;
  double max_move = 0.05;
  double reach_threshold = 0.05;
  double push_threshold = 0.10;
  double grasp_radius = 0.03;
  double grasp_height_tolerance = 0.03;
  double closed_below = 0.2;
  double lift_height = 0.10;
  int substeps = 10;
  int grid_size = 8;

  /// Largest |x| or |y| an object center (and the gripper) may take.
  double center_limit() const { return table_half_size - object_half_extent; }
  /// Horizontal center distance at which the gripper touches an object.
  double contact_separation() const { return gripper_radius + object_half_extent; }
};

struct ObjectState {
  int id = 0;
  Shape shape = Shape::cube;
  Color color = Color::red;
  Vec3 position;
  Vec3 start_position;
  double half_extent = 0.025;
  bool attached = false;
  Vec3 attach_offset;  // object minus gripper at the moment of attachment

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct GripperState {
  Vec3 position;
  double finger_opening = 1.0;

  friend bool operator==(const GripperState&, const GripperState&) = default;
};

/// Simulator state. On the grid backend positions hold integer cell
/// coordinates (z = 0) and the gripper is the agent's cell.
struct SceneState {
  Backend backend = Backend::continuous;
  GripperState gripper;
  std::vector<ObjectState> objects;
  int step_count = 0;
  bool interacted = false;  // grid: the last action was `interact`

  std::optional<int> attached_object() const;

  friend bool operator==(const SceneState&, const SceneState&) = default;
};

struct ContinuousAction {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double finger = 0.0;

  friend bool operator==(const ContinuousAction&, const ContinuousAction&) = default;
};

enum class GridAction { up, down, left, right, interact };

using Action = std::variant<ContinuousAction, GridAction>;

/// Advance the scene by one action. Kinematic model:
///  - the gripper moves along the commanded displacement in substeps; a
///    substep that would make the scene invalid is retried on its
///    horizontal and vertical parts alone and otherwise skipped;
///  - a gripper overlapping an object at contact height pushes it out to
///    the contact separation; an object centered within the grasp radius
///    sits between the fingers and is not pushed;
///  - closing the fingers below `closed_below` next to an object attaches
///    it; opening them drops it to the table.
/// Throws ContractViolation if the action kind does not match the backend.
SceneState apply_action(const SceneState& scene, const Action& action, const WorldConfig& cfg = {});

/// Task condition for one object. Throws ContractViolation on a bad id.
bool evaluate_condition(const SceneState& scene, int target, Task task, const WorldConfig& cfg = {});

/// Lowest id whose task condition holds.
std::optional<int> detect_interaction(const SceneState& scene, Task task, const WorldConfig& cfg = {});

/// True when bounds and non-penetration hold.
bool is_consistent(const SceneState& scene, const WorldConfig& cfg = {});

/// Text picture of a grid scene (rows top to bottom).
std::string render_grid(const SceneState& scene, const WorldConfig& cfg = {});

}  // namespace repairbench::world
