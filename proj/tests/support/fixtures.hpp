#pragma once

#include <string>
#include <utility>
#include <vector>

#include "repairbench/env.hpp"
#include "repairbench/world.hpp"

namespace fixtures {

using namespace repairbench;

struct Obj {
  Color color;
  Shape shape;
  double x;
  double y;
};

inline world::SceneState continuous_scene(const std::vector<Obj>& objs, Vec3 gripper = {0.0, 0.0, 0.15}) {
  world::SceneState s;
  s.backend = world::Backend::continuous;
  s.gripper.position = gripper;
  s.gripper.finger_opening = 1.0;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    world::ObjectState o;
    o.id = static_cast<int>(i);
    o.color = objs[i].color;
    o.shape = objs[i].shape;
    o.position = {objs[i].x, objs[i].y, 0.025};
    o.start_position = o.position;
    s.objects.push_back(o);
  }
  return s;
}

inline world::SceneState grid_scene(const std::vector<Obj>& objs, Vec3 agent = {0.0, 0.0, 0.0}) {
  world::SceneState s;
  s.backend = world::Backend::grid;
  s.gripper.position = agent;
  s.gripper.finger_opening = 0.0;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    world::ObjectState o;
    o.id = static_cast<int>(i);
    o.color = objs[i].color;
    o.shape = objs[i].shape;
    o.position = {objs[i].x, objs[i].y, 0.0};
    o.start_position = o.position;
    o.half_extent = 0.0;
    s.objects.push_back(o);
  }
  return s;
}

inline grammar::Utterance utt(const std::string& text) { return grammar::Utterance::from_text(text); }

}  // namespace fixtures
