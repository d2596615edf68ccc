#include "vlgen/palette.hpp"

#include <algorithm>
#include <unordered_map>

#include "vlgen/error.hpp"

namespace vlgen {
namespace {

constexpr std::array<PaletteEntry, 46> kEntries = {{
    {"void", {31, 119, 180}},
    {"wall", {174, 199, 232}},
    {"floor", {255, 127, 14}},
    {"chair", {255, 187, 120}},
    {"door", {44, 160, 44}},
    {"table", {152, 223, 138}},
    {"picture", {214, 39, 40}},
    {"cabinet", {255, 152, 150}},
    {"cushion", {148, 103, 189}},
    {"window", {197, 176, 213}},
    {"sofa", {140, 86, 75}},
    {"bed", {196, 156, 148}},
    {"curtain", {227, 119, 194}},
    {"chest_of_drawers", {247, 182, 210}},
    {"plant", {127, 127, 127}},
    {"sink", {199, 199, 199}},
    {"stairs", {188, 189, 34}},
    {"ceiling", {219, 219, 141}},
    {"toilet", {23, 190, 207}},
    {"stool", {158, 218, 229}},
    {"towel", {57, 59, 121}},
    {"mirror", {82, 84, 163}},
    {"tv_monitor", {107, 110, 207}},
    {"shower", {156, 158, 222}},
    {"column", {99, 121, 57}},
    {"bathtub", {140, 162, 82}},
    {"counter", {181, 207, 107}},
    {"fireplace", {206, 219, 156}},
    {"lighting", {140, 109, 49}},
    {"beam", {189, 158, 57}},
    {"railing", {231, 186, 82}},
    {"shelving", {231, 203, 148}},
    {"blinds", {132, 60, 57}},
    {"gym_equipment", {173, 73, 74}},
    {"seating", {214, 97, 107}},
    {"board_panel", {231, 150, 156}},
    {"furniture", {123, 65, 115}},
    {"appliances", {165, 81, 148}},
    {"clothes", {206, 109, 189}},
    {"objects", {222, 158, 214}},
    {"[POINT]", {255, 255, 102}},
    {"[START]", {255, 255, 0}},
    {"[END]", {255, 255, 204}},
    {"[LINE]", {255, 255, 255}},
    {"[NONNAVIGABLE]", {0, 0, 0}},
    {"[NAVIGABLE]", {150, 0, 0}},
}};

constexpr std::size_t kCategoryCount = 40;

const std::unordered_map<std::uint32_t, std::size_t>& by_color() {
  static const auto table = [] {
    std::unordered_map<std::uint32_t, std::size_t> m;
    for (std::size_t i = 0; i < kEntries.size(); ++i) m.emplace(kEntries[i].color.packed(), i);
    return m;
  }();
  return table;
}

}  // namespace

std::span<const PaletteEntry> Palette::entries() { return kEntries; }

std::vector<std::string> Palette::categories() {
  std::vector<std::string> out;
  out.reserve(kCategoryCount);
  for (std::size_t i = 0; i < kCategoryCount; ++i) out.emplace_back(kEntries[i].name);
  return out;
}

std::optional<Rgb> Palette::color_of(std::string_view name) {
  for (const auto& e : kEntries)
    if (e.name == name) return e.color;
  return std::nullopt;
}

Rgb Palette::color_or_throw(std::string_view name) {
  if (auto c = color_of(name)) return *c;
  throw InvalidArgument("no palette color for '" + std::string(name) + "'");
}

std::optional<std::string_view> Palette::name_of(Rgb color) {
  auto it = by_color().find(color.packed());
  if (it == by_color().end()) return std::nullopt;
  return kEntries[it->second].name;
}

bool Palette::contains(Rgb color) { return by_color().contains(color.packed()); }

bool Palette::is_category(std::string_view name) {
  return std::any_of(kEntries.begin(), kEntries.begin() + kCategoryCount,
                     [&](const PaletteEntry& e) { return e.name == name; });
}

bool is_excluded_category(std::string_view category) {
  return std::find(kExcludedCategories.begin(), kExcludedCategories.end(), category) !=
         kExcludedCategories.end();
}

bool is_known_category(std::string_view category) {
  return Palette::is_category(category) || is_excluded_category(category);
}

}  // namespace vlgen
