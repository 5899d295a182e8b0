#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace repairbench {

enum class Color : std::uint8_t { red, green, blue, yellow, purple, orange, pink, cyan, brown };
enum class Shape : std::uint8_t { cube, cuboid, cylinder };
enum class Task : std::uint8_t { reach, push, grasp, lift };

inline constexpr std::size_t kNumColors = 9;
inline constexpr std::size_t kNumShapes = 3;
inline constexpr std::size_t kNumTasks = 4;

inline constexpr std::array<Color, kNumColors> kAllColors = {
    Color::red,    Color::green,  Color::blue, Color::yellow, Color::purple,
    Color::orange, Color::pink,   Color::cyan, Color::brown};
inline constexpr std::array<Shape, kNumShapes> kAllShapes = {Shape::cube, Shape::cuboid,
                                                             Shape::cylinder};
inline constexpr std::array<Task, kNumTasks> kAllTasks = {Task::reach, Task::push, Task::grasp,
                                                          Task::lift};

using ColorSet = std::bitset<kNumColors>;
using ShapeSet = std::bitset<kNumShapes>;

constexpr std::size_t index_of(Color c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index_of(Shape s) { return static_cast<std::size_t>(s); }
constexpr std::size_t index_of(Task t) { return static_cast<std::size_t>(t); }

// Canonical identifiers used in config files and logs. These are not the
// surface words of the grammar; those live in the lexicon.
std::string_view to_string(Color c);
std::string_view to_string(Shape s);
std::string_view to_string(Task t);
std::optional<Color> color_from_string(std::string_view name);
std::optional<Shape> shape_from_string(std::string_view name);
std::optional<Task> task_from_string(std::string_view name);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(const Vec3& a, double k) { return {a.x * k, a.y * k, a.z * k}; }

double horizontal_distance(const Vec3& a, const Vec3& b);
double distance(const Vec3& a, const Vec3& b);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace repairbench
