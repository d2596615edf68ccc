#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vlgen {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
  std::uint32_t packed() const { return (std::uint32_t(r) << 16) | (std::uint32_t(g) << 8) | b; }
};

struct PaletteEntry {
  std::string_view name;
  Rgb color;
};

// Fixed semantic palette: the 40 simulator object categories followed by the
// six path/navigability markers. Immutable and bijective.
class Palette {
 public:
  static constexpr std::string_view kPoint = "[POINT]";
  static constexpr std::string_view kStart = "[START]";
  static constexpr std::string_view kEnd = "[END]";
  static constexpr std::string_view kLine = "[LINE]";
  static constexpr std::string_view kNonNavigable = "[NONNAVIGABLE]";
  static constexpr std::string_view kNavigable = "[NAVIGABLE]";

  static std::span<const PaletteEntry> entries();

  // Object categories only (no markers), in table order.
  static std::vector<std::string> categories();

  static std::optional<Rgb> color_of(std::string_view name);
  static Rgb color_or_throw(std::string_view name);
  static std::optional<std::string_view> name_of(Rgb color);
  static bool contains(Rgb color);
  static bool is_category(std::string_view name);

  static Rgb point() { return color_or_throw(kPoint); }
  static Rgb start() { return color_or_throw(kStart); }
  static Rgb end() { return color_or_throw(kEnd); }
  static Rgb line() { return color_or_throw(kLine); }
  static Rgb non_navigable() { return color_or_throw(kNonNavigable); }
  static Rgb navigable() { return color_or_throw(kNavigable); }
};

// Categories dropped before rasterization: seldom mentioned, large footprint.
inline constexpr std::array<std::string_view, 7> kExcludedCategories = {
    "misc", "ceiling", "curtain", "objects", "floor", "wall", "void"};

bool is_excluded_category(std::string_view category);

// A category a SceneObject may carry: a palette category or an excluded one
// ("misc" has no palette color but is a simulator label).
bool is_known_category(std::string_view category);

}  // namespace vlgen
