#include <cmath>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/reference.hpp"
#include "doctest.h"
#include "repairbench/errors.hpp"
#include "repairbench/world.hpp"

using namespace repairbench;
using namespace repairbench::world;
using fixtures::Obj;

namespace {

SceneState two_objects() {
  return fixtures::continuous_scene({{Color::red, Shape::cube, -0.15, -0.15}, {Color::blue, Shape::cuboid, 0.15, 0.15}});
}

}  // namespace

TEST_CASE("free-space motion is exact") {
  const auto s = two_objects();
  const auto n = apply_action(s, ContinuousAction{0.05, 0, 0, 0});
  CHECK(n.gripper.position.x == 0.05);
  CHECK(n.gripper.position.y == 0.0);
  CHECK(n.gripper.position.z == 0.15);
  CHECK(n.objects == s.objects);
  CHECK(n.step_count == 1);
}

TEST_CASE("zero action only advances the step count") {
  auto s = two_objects();
  auto n = apply_action(s, ContinuousAction{});
  CHECK(n.step_count == 1);
  n.step_count = 0;
  CHECK(n == s);
}

TEST_CASE("actions are clipped to the move bound") {
  const auto n = apply_action(two_objects(), ContinuousAction{1.0, -1.0, 0.0, 0.0});
  CHECK(n.gripper.position.x == doctest::Approx(0.05));
  CHECK(n.gripper.position.y == doctest::Approx(-0.05));
  const auto nan = apply_action(two_objects(), ContinuousAction{std::nan(""), 0, 0, 0});
  CHECK(nan.gripper.position.x == 0.0);
}

TEST_CASE("driving into an object pushes it without overlap") {
  auto s = fixtures::continuous_scene({{Color::red, Shape::cube, 0.0, 0.0}, {Color::blue, Shape::cube, -0.15, 0.15}},
                                      {-0.12, 0.0, 0.02});
  for (int k = 0; k < 8; ++k) {
    s = apply_action(s, ContinuousAction{0.05, 0, 0, 0});
    CHECK(ref::physically_valid(s));
    const double gap = std::hypot(s.gripper.position.x - s.objects[0].position.x,
                                  s.gripper.position.y - s.objects[0].position.y);
    CHECK(gap >= 0.045 - 1e-9);
  }
  CHECK(s.objects[0].position.x > 0.2);
  CHECK(s.objects[0].position.x <= 0.225 + 1e-9);
  CHECK(s.objects[0].position.z == 0.025);
}

TEST_CASE("an object pushed into another object is blocked") {
  auto s = fixtures::continuous_scene({{Color::red, Shape::cube, 0.0, 0.0}, {Color::blue, Shape::cube, 0.06, 0.0}},
                                      {-0.10, 0.0, 0.02});
  for (int k = 0; k < 6; ++k) {
    s = apply_action(s, ContinuousAction{0.05, 0, 0, 0});
    CHECK(ref::physically_valid(s));
  }
  CHECK(s.objects[1].position.x == 0.06);
}

TEST_CASE("random actions keep the scene physical and deterministic") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> d(-0.06, 0.06);
  std::uniform_real_distribution<double> f(-1.2, 1.2);
  for (int episode = 0; episode < 20; ++episode) {
    auto a = fixtures::continuous_scene({{Color::red, Shape::cube, -0.05, 0.0},
                                         {Color::blue, Shape::cuboid, 0.06, 0.02},
                                         {Color::green, Shape::cylinder, 0.0, 0.1}},
                                        {0.0, -0.05, 0.04});
    auto b = a;
    for (int step = 0; step < 200; ++step) {
      const ContinuousAction act{d(gen), d(gen), d(gen), f(gen)};
      a = apply_action(a, act);
      b = apply_action(b, act);
      REQUIRE(ref::physically_valid(a));
      REQUIRE(is_consistent(a));
      REQUIRE(a == b);
      int held = 0;
      for (const auto& o : a.objects) held += o.attached;
      REQUIRE(held <= 1);
    }
  }
}

TEST_CASE("closing the fingers over an object grasps it and opening drops it") {
  auto s = fixtures::continuous_scene({{Color::red, Shape::cube, 0.0, 0.0}, {Color::blue, Shape::cube, 0.15, 0.15}},
                                      {0.0, 0.0, 0.06});
  s = apply_action(s, ContinuousAction{0, 0, -0.035, 0});
  CHECK(s.gripper.position.z == doctest::Approx(0.025));
  s = apply_action(s, ContinuousAction{0, 0, 0, -1.0});
  CHECK(s.objects[0].attached);
  CHECK(evaluate_condition(s, 0, Task::grasp));
  CHECK_FALSE(evaluate_condition(s, 1, Task::grasp));
  s = apply_action(s, ContinuousAction{0.02, 0, 0.05, 0});
  CHECK(s.objects[0].position.z == doctest::Approx(0.075));
  CHECK(s.objects[0].position.x == doctest::Approx(0.02));
  s = apply_action(s, ContinuousAction{0, 0, 0, 1.0});
  CHECK_FALSE(s.objects[0].attached);
  CHECK(s.objects[0].position.z == 0.025);
}

TEST_CASE("condition examples") {
  auto s = fixtures::continuous_scene({{Color::red, Shape::cube, 0.0, 0.0}, {Color::blue, Shape::cube, 0.15, 0.15}},
                                      {0.03, 0.0, 0.025});
  CHECK(evaluate_condition(s, 0, Task::reach));
  CHECK(ref::condition(s, 0, Task::reach));
  CHECK_FALSE(evaluate_condition(s, 0, Task::push));
  CHECK_FALSE(evaluate_condition(s, 1, Task::reach));
  s.objects[0].position.x = 0.10;
  CHECK(evaluate_condition(s, 0, Task::push));
  s.objects[0].position.x = 0.0999;
  CHECK_FALSE(evaluate_condition(s, 0, Task::push));
  CHECK_THROWS_AS(evaluate_condition(s, 2, Task::reach), ContractViolation);
  CHECK_THROWS_AS(evaluate_condition(s, -1, Task::reach), ContractViolation);
}

TEST_CASE("lift flips exactly when the object crosses the lift height") {
  auto s = fixtures::continuous_scene({{Color::red, Shape::cube, 0.0, 0.0}, {Color::blue, Shape::cube, 0.15, 0.15}},
                                      {0.0, 0.0, 0.025});
  s = apply_action(s, ContinuousAction{0, 0, 0, -1.0});
  REQUIRE(s.objects[0].attached);
  int flips = 0;
  bool before = evaluate_condition(s, 0, Task::lift);
  for (int k = 0; k < 20; ++k) {
    s = apply_action(s, ContinuousAction{0, 0, 0.007, 0});
    const bool now = evaluate_condition(s, 0, Task::lift);
    CHECK(now == (s.objects[0].position.z >= 0.10));
    CHECK(now == ref::condition(s, 0, Task::lift));
    flips += now != before;
    before = now;
  }
  CHECK(flips == 1);
  CHECK(before);
}

TEST_CASE("reach flips once along a straight approach") {
  auto s = fixtures::continuous_scene({{Color::red, Shape::cube, 0.0, 0.0}, {Color::blue, Shape::cube, -0.15, 0.15}},
                                      {0.10, 0.10, 0.15});
  const Vec3 goal = s.objects[0].position;
  const Vec3 step = (goal - s.gripper.position) * (1.0 / 40.0);
  int flips = 0;
  bool before = evaluate_condition(s, 0, Task::reach);
  for (int k = 0; k < 40; ++k) {
    s = apply_action(s, ContinuousAction{step.x, step.y, step.z, 0});
    const bool now = evaluate_condition(s, 0, Task::reach);
    flips += now != before;
    before = now;
  }
  CHECK(flips == 1);
  CHECK(before);
}

TEST_CASE("detect_interaction") {
  auto s = fixtures::continuous_scene({{Color::red, Shape::cube, -0.03, 0.0}, {Color::blue, Shape::cube, 0.03, 0.0}},
                                      {0.15, 0.15, 0.15});
  CHECK_FALSE(detect_interaction(s, Task::reach).has_value());
  s.gripper.position = {0.03, 0.02, 0.025};
  CHECK(detect_interaction(s, Task::reach) == 1);
  s.gripper.position = {0.0, 0.0, 0.06};
  CHECK(evaluate_condition(s, 0, Task::reach));
  CHECK(evaluate_condition(s, 1, Task::reach));
  CHECK(detect_interaction(s, Task::reach) == 0);
}

TEST_CASE("grid moves, clamps and interacts") {
  auto s = fixtures::grid_scene({{Color::red, Shape::cube, 2, 0}, {Color::blue, Shape::cube, 5, 5}});
  s = apply_action(s, GridAction::left);
  CHECK(s.gripper.position.x == 0);
  s = apply_action(s, GridAction::right);
  CHECK(s.gripper.position.x == 1);
  CHECK_FALSE(detect_interaction(s, Task::reach).has_value());
  s = apply_action(s, GridAction::interact);
  CHECK(s.interacted);
  CHECK(detect_interaction(s, Task::push) == 0);
  CHECK(ref::condition(s, 0, Task::push));
  s = apply_action(s, GridAction::up);
  CHECK_FALSE(s.interacted);
  CHECK_FALSE(detect_interaction(s, Task::push).has_value());
  for (int k = 0; k < 10; ++k) s = apply_action(s, GridAction::up);
  CHECK(s.gripper.position.y == 7);
  CHECK_THROWS_AS(apply_action(s, ContinuousAction{}), ContractViolation);
  CHECK_THROWS_AS(apply_action(two_objects(), GridAction::up), ContractViolation);
}

TEST_CASE("grid render shows objects and agent") {
  const auto s = fixtures::grid_scene({{Color::red, Shape::cube, 2, 0}, {Color::blue, Shape::cuboid, 5, 5}});
  const auto text = render_grid(s);
  CHECK(text.find("@.0") != std::string::npos);
  CHECK(text.find("1: blue cuboid") != std::string::npos);
}
