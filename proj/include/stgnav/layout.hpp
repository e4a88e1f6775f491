#pragma once

// Deterministic vertical-flow layout of a state's component tree in abstract
// screen coordinates, so hint overlays have bounds without a real device.

#include "stgnav/capture.hpp"
#include "stgnav/stg.hpp"

#include <string>
#include <vector>

namespace stgnav {

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(const Rect& other) const {
    return other.x >= x && other.y >= y && other.x + other.width <= x + width &&
           other.y + other.height <= y + height;
  }
  bool operator==(const Rect&) const = default;
};

inline constexpr int kScreenWidth = 360;
inline constexpr int kMinScreenHeight = 640;
inline constexpr int kRowHeight = 48;
inline constexpr int kRowGap = 8;
inline constexpr int kIndent = 12;
inline constexpr int kTopMargin = 24;
inline constexpr int kBackKeyHeight = 56;

struct PlacedComponent {
  std::string local_id;
  ComponentKind kind;
  std::optional<std::string> resource_id;
  std::optional<std::string> content;
  int depth = 0;
  Rect bounds;
};

struct ScreenLayout {
  std::string state_id;
  std::string activity;
  Rect viewport;
  /// System back key strip at the bottom of the viewport.
  Rect back_key;
  std::vector<PlacedComponent> components;  // pre-order

  const PlacedComponent* find(std::string_view local_id) const;
};

/// One row per component in pre-order; a container spans the rows of its
/// subtree and is indented by depth.
ScreenLayout layout_state(const StateNode& state);

Json to_json(const Rect& rect);
Json to_json(const ScreenLayout& layout);

}  // namespace stgnav
