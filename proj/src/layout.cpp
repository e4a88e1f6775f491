#include "stgnav/layout.hpp"

#include <algorithm>

namespace stgnav {
namespace {

// Returns the number of rows used by `node`'s subtree.
int place(const ComponentNode& node, int depth, int row, std::vector<PlacedComponent>& out) {
  const std::size_t slot = out.size();
  out.push_back({node.local_id, node.kind, node.resource_id, node.content, depth, {}});
  int rows = 1;
  for (const auto& child : node.children) rows += place(child, depth + 1, row + rows, out);
  const int x = std::min(depth * kIndent, kScreenWidth / 2);
  out[slot].bounds = {x, kTopMargin + row * kRowHeight, kScreenWidth - 2 * x, rows * kRowHeight - kRowGap};
  return rows;
}

}  // namespace

const PlacedComponent* ScreenLayout::find(std::string_view local_id) const {
  for (const auto& component : components) {
    if (component.local_id == local_id) return &component;
  }
  return nullptr;
}

ScreenLayout layout_state(const StateNode& state) {
  ScreenLayout layout;
  layout.state_id = state.state_id;
  layout.activity = state.activity;
  const int rows = place(state.root, 0, 0, layout.components);
  const int height = std::max(kMinScreenHeight, kTopMargin + rows * kRowHeight + kBackKeyHeight);
  layout.viewport = {0, 0, kScreenWidth, height};
  layout.back_key = {0, height - kBackKeyHeight, kScreenWidth, kBackKeyHeight};
  return layout;
}

Json to_json(const Rect& rect) {
  return {{"x", rect.x}, {"y", rect.y}, {"width", rect.width}, {"height", rect.height}};
}

Json to_json(const ScreenLayout& layout) {
  Json components = Json::array();
  for (const auto& c : layout.components) {
    Json item = {{"local_id", c.local_id},
                 {"kind", std::string(to_string(c.kind))},
                 {"depth", c.depth},
                 {"bounds", to_json(c.bounds)}};
    if (c.resource_id) item["resource_id"] = *c.resource_id;
    if (c.content) item["content"] = *c.content;
    components.push_back(std::move(item));
  }
  return {{"state_id", layout.state_id},
          {"activity", layout.activity},
          {"viewport", to_json(layout.viewport)},
          {"back_key", to_json(layout.back_key)},
          {"components", std::move(components)}};
}

}  // namespace stgnav
