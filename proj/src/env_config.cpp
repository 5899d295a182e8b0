#include <set>

#include "repairbench/env.hpp"
#include "repairbench/errors.hpp"

namespace repairbench::env {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

template <typename T>
T read_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (j.is_number_unsigned()) return j.get<T>();
      if (j.get<long long>() < 0) throw ConfigError(path, "expected a non-negative integer");
    }
  }
  return j.get<T>();
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

template <typename Fn>
auto read_enum(const json& j, const std::string& path, Fn parse) {
  auto v = parse(read_string(j, path));
  if (!v) throw ConfigError(path, "unknown value '" + j.get<std::string>() + "'");
  return *v;
}

world::WorldConfig world_config_from_json(const json& j, const std::string& prefix) {
  if (!j.is_object()) throw ConfigError(prefix, "expected an object");
  world::WorldConfig w;
  for (const auto& [key, value] : j.items()) {
    const std::string path = join(prefix, key);
    if (key == "table_half_size") w.table_half_size = read_number<double>(value, path);
    else if (key == "object_half_extent") w.object_half_extent = read_number<double>(value, path);
    else if (key == "gripper_radius") w.gripper_radius = read_number<double>(value, path);
    else if (key == "workspace_height") w.workspace_height = read_number<double>(value, path);
    else if (key == "max_move") w.max_move = read_number<double>(value, path);
    else if (key == "reach_threshold") w.reach_threshold = read_number<double>(value, path);
    else if (key == "push_threshold") w.push_threshold = read_number<double>(value, path);
    else if (key == "grasp_radius") w.grasp_radius = read_number<double>(value, path);
    else if (key == "grasp_height_tolerance") w.grasp_height_tolerance = read_number<double>(value, path);
    else if (key == "closed_below") w.closed_below = read_number<double>(value, path);
    else if (key == "lift_height") w.lift_height = read_number<double>(value, path);
    else if (key == "substeps") w.substeps = read_number<int>(value, path);
    else if (key == "grid_size") w.grid_size = read_number<int>(value, path);
    else throw ConfigError(path, "unknown key");
  }
  return w;
}

json world_to_json(const world::WorldConfig& w) {
  return {{"table_half_size", w.table_half_size},
          {"object_half_extent", w.object_half_extent},
          {"gripper_radius", w.gripper_radius},
          {"workspace_height", w.workspace_height},
          {"max_move", w.max_move},
          {"reach_threshold", w.reach_threshold},
          {"push_threshold", w.push_threshold},
          {"grasp_radius", w.grasp_radius},
          {"grasp_height_tolerance", w.grasp_height_tolerance},
          {"closed_below", w.closed_below},
          {"lift_height", w.lift_height},
          {"substeps", w.substeps},
          {"grid_size", w.grid_size}};
}

}  // namespace

void EpisodeConfig::validate(const std::string& prefix) const {
  if (num_objects != 2 && num_objects != 3) {
    throw ConfigError(join(prefix, "num_objects"), "must be 2 or 3");
  }
  if (!(correction_probability >= 0.0 && correction_probability <= 1.0)) {
    throw ConfigError(join(prefix, "correction_probability"), "must lie in [0, 1]");
  }
  if (max_steps < 1) throw ConfigError(join(prefix, "max_steps"), "must be positive");
  if (delay_steps < 0 || delay_steps > 10) {
    throw ConfigError(join(prefix, "delay_steps"), "must lie in [0, 10]");
  }
  std::set<ScenarioKind> seen;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const std::string path = join(prefix, "kinds[" + std::to_string(i) + "]");
    if (kinds[i] == ScenarioKind::none) throw ConfigError(path, "'none' is not a correction kind");
    if (!seen.insert(kinds[i]).second) throw ConfigError(path, "listed twice");
  }
  if (kinds.empty() && correction_probability > 0.0) {
    throw ConfigError(join(prefix, "kinds"), "needs at least one kind when corrections are enabled");
  }
  if (!kind_weights.empty()) {
    if (kind_weights.size() != kinds.size()) {
      throw ConfigError(join(prefix, "kind_weights"), "needs one weight per kind");
    }
    double total = 0.0;
    for (double w : kind_weights) {
      if (!(w >= 0.0)) throw ConfigError(join(prefix, "kind_weights"), "weights must be non-negative");
      total += w;
    }
    if (total <= 0.0) throw ConfigError(join(prefix, "kind_weights"), "weights must not all be zero");
  }
  const std::string wp = join(prefix, "world");
  if (world.table_half_size <= 0.15) throw ConfigError(wp + ".table_half_size", "table too small");
  if (world.object_half_extent <= 0.0 || world.gripper_radius <= 0.0) {
    throw ConfigError(wp, "sizes must be positive");
  }
  if (world.grasp_radius >= world.contact_separation()) {
    throw ConfigError(wp + ".grasp_radius", "must be smaller than the contact separation");
  }
  if (world.substeps < 1) throw ConfigError(wp + ".substeps", "must be positive");
  if (world.grid_size < 6) throw ConfigError(wp + ".grid_size", "must be at least 6");
}

EpisodeConfig episode_config_from_json(const json& j, const std::string& prefix) {
  if (!j.is_object()) throw ConfigError(prefix.empty() ? "config" : prefix, "expected an object");
  EpisodeConfig cfg;
  for (const auto& [key, value] : j.items()) {
    const std::string path = join(prefix, key);
    if (key == "task") {
      cfg.task = read_enum(value, path, task_from_string);
    } else if (key == "num_objects") {
      cfg.num_objects = read_number<int>(value, path);
    } else if (key == "backend") {
      cfg.backend = read_enum(value, path, world::backend_from_string);
    } else if (key == "correction_probability") {
      cfg.correction_probability = read_number<double>(value, path);
    } else if (key == "max_steps") {
      cfg.max_steps = read_number<int>(value, path);
    } else if (key == "mode") {
      cfg.mode = read_enum(value, path, instructor::correction_mode_from_string);
    } else if (key == "kinds") {
      if (!value.is_array()) throw ConfigError(path, "expected an array");
      cfg.kinds.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        cfg.kinds.push_back(read_enum(value[i], path + "[" + std::to_string(i) + "]",
                                      instructor::scenario_kind_from_string));
      }
    } else if (key == "kind_weights") {
      if (!value.is_array()) throw ConfigError(path, "expected an array");
      cfg.kind_weights.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        cfg.kind_weights.push_back(read_number<double>(value[i], path + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "timing") {
      cfg.timing = read_enum(value, path, instructor::timing_from_string);
    } else if (key == "delay_steps") {
      cfg.delay_steps = read_number<int>(value, path);
    } else if (key == "seed") {
      cfg.seed = read_number<std::uint64_t>(value, path);
    } else if (key == "world") {
      cfg.world = world_config_from_json(value, path);
    } else {
      throw ConfigError(path, "unknown key");
    }
  }
  cfg.validate(prefix);
  return cfg;
}

json to_json(const EpisodeConfig& cfg) {
  json kinds = json::array();
  for (auto k : cfg.kinds) kinds.push_back(std::string(instructor::to_string(k)));
  json j = {{"task", std::string(to_string(cfg.task))},
            {"num_objects", cfg.num_objects},
            {"backend", std::string(world::to_string(cfg.backend))},
            {"correction_probability", cfg.correction_probability},
            {"max_steps", cfg.max_steps},
            {"mode", std::string(instructor::to_string(cfg.mode))},
            {"kinds", kinds},
            {"timing", std::string(instructor::to_string(cfg.timing))},
            {"delay_steps", cfg.delay_steps},
            {"seed", cfg.seed},
            {"world", world_to_json(cfg.world)}};
  if (!cfg.kind_weights.empty()) j["kind_weights"] = cfg.kind_weights;
  return j;
}

}  // namespace repairbench::env
