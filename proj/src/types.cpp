#include "repairbench/types.hpp"

#include <charconv>
#include <cmath>

#include "repairbench/rng.hpp"

namespace repairbench {

namespace {

constexpr std::array<std::string_view, kNumColors> kColorNames = {
    "red", "green", "blue", "yellow", "purple", "orange", "pink", "cyan", "brown"};
constexpr std::array<std::string_view, kNumShapes> kShapeNames = {"cube", "cuboid", "cylinder"};
constexpr std::array<std::string_view, kNumTasks> kTaskNames = {"reach", "push", "grasp", "lift"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Color c) { return kColorNames[index_of(c)]; }
std::string_view to_string(Shape s) { return kShapeNames[index_of(s)]; }
std::string_view to_string(Task t) { return kTaskNames[index_of(t)]; }

std::optional<Color> color_from_string(std::string_view name) {
  return lookup<Color>(kColorNames, name);
}
std::optional<Shape> shape_from_string(std::string_view name) {
  return lookup<Shape>(kShapeNames, name);
}
std::optional<Task> task_from_string(std::string_view name) {
  return lookup<Task>(kTaskNames, name);
}

double horizontal_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::size_t Rng::index(std::size_t n) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return static_cast<std::size_t>(r % bound);
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace repairbench
