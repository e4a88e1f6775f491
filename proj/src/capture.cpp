#include "stgnav/capture.hpp"

#include "stgnav/error.hpp"

#include <algorithm>
#include <set>

namespace stgnav {
namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

std::string escape_pointer_token(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

void throw_field_error(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::parse, message + " at " + (path.empty() ? "/" : path), path);
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::parse, "malformed document (line " + std::to_string(line) + "): " + e.what(),
                "line " + std::to_string(line));
  }
}

FieldReader::FieldReader(const Json& object, std::string path,
                         std::initializer_list<std::string_view> allowed)
    : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) throw_field_error(path_, "expected an object");
  for (const auto& [key, _] : object_.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw_field_error(path_of(key), "unknown field \"" + key + "\"");
    }
  }
}

std::string FieldReader::path_of(std::string_view key) const {
  return path_ + "/" + escape_pointer_token(key);
}

const Json& FieldReader::required(std::string_view key) const {
  auto it = object_.find(key);
  if (it == object_.end()) throw_field_error(path_of(key), "missing field \"" + std::string(key) + "\"");
  return *it;
}

const Json* FieldReader::optional(std::string_view key) const {
  auto it = object_.find(key);
  if (it == object_.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string FieldReader::string(std::string_view key) const {
  const auto& value = required(key);
  if (!value.is_string()) throw_field_error(path_of(key), "expected a string");
  return value.get<std::string>();
}

std::optional<std::string> FieldReader::optional_string(std::string_view key) const {
  const auto* value = optional(key);
  if (value == nullptr) return std::nullopt;
  if (!value->is_string()) throw_field_error(path_of(key), "expected a string");
  return value->get<std::string>();
}

std::uint64_t FieldReader::unsigned_integer(std::string_view key) const {
  const auto& value = required(key);
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
    throw_field_error(path_of(key), "expected a non-negative integer");
  }
  return value.get<std::uint64_t>();
}

double FieldReader::number(std::string_view key) const {
  const auto& value = required(key);
  if (!value.is_number()) throw_field_error(path_of(key), "expected a number");
  return value.get<double>();
}

void check_envelope(const Json& doc, std::initializer_list<std::string_view> allowed_keys) {
  if (!doc.is_object()) throw_field_error("", "expected an object document");
  auto version = doc.find("version");
  if (version == doc.end()) throw_field_error("/version", "missing field \"version\"");
  if (!version->is_string()) throw_field_error("/version", "expected a string");
  if (version->get<std::string>() != kDocumentVersion) {
    throw Error(ErrorCode::version, "unsupported document version \"" + version->get<std::string>() + "\"",
                "/version");
  }
  for (const auto& [key, _] : doc.items()) {
    if (key == "version") continue;
    if (std::find(allowed_keys.begin(), allowed_keys.end(), key) == allowed_keys.end()) {
      throw_field_error("/" + escape_pointer_token(key), "unknown field \"" + key + "\"");
    }
  }
}

Json to_json(const ComponentNode& node) {
  Json children = Json::array();
  for (const auto& child : node.children) children.push_back(to_json(child));
  Json out = {{"local_id", node.local_id}, {"kind", std::string(to_string(node.kind))}};
  if (node.resource_id) out["resource_id"] = *node.resource_id;
  if (node.content) out["content"] = *node.content;
  out["children"] = std::move(children);
  return out;
}

Json to_json(const StateNode& state) {
  return {{"state_id", state.state_id},
          {"activity", state.activity},
          {"root", to_json(state.root)},
          {"visit_count", state.visit_count}};
}

Json to_json(const ActionEdge& edge) {
  return {{"action_id", edge.action_id},
          {"source", edge.source},
          {"target", edge.target},
          {"trigger", std::string(to_string(edge.trigger))},
          {"component_ref", edge.component_ref},
          {"provenance", std::string(to_string(edge.provenance))}};
}

ComponentNode component_from_json(const Json& json, const std::string& path) {
  FieldReader reader(json, path, {"local_id", "kind", "resource_id", "content", "children"});
  ComponentNode node;
  node.local_id = reader.string("local_id");
  const auto kind = parse_component_kind(reader.string("kind"));
  if (!kind) throw_field_error(reader.path_of("kind"), "unknown component kind");
  node.kind = *kind;
  node.resource_id = reader.optional_string("resource_id");
  node.content = reader.optional_string("content");
  if (const auto* children = reader.optional("children")) {
    if (!children->is_array()) throw_field_error(reader.path_of("children"), "expected an array");
    for (std::size_t i = 0; i < children->size(); ++i) {
      node.children.push_back(
          component_from_json((*children)[i], reader.path_of("children") + "/" + std::to_string(i)));
    }
  }
  return node;
}

StateNode state_from_json(const Json& json, const std::string& path) {
  FieldReader reader(json, path, {"state_id", "activity", "root", "visit_count"});
  StateNode state;
  state.state_id = reader.string("state_id");
  state.activity = reader.string("activity");
  state.root = component_from_json(reader.required("root"), reader.path_of("root"));
  state.visit_count = reader.optional("visit_count") ? reader.unsigned_integer("visit_count") : 0;
  return state;
}

ActionEdge action_from_json(const Json& json, const std::string& path) {
  FieldReader reader(json, path,
                     {"action_id", "source", "target", "trigger", "component_ref", "provenance"});
  ActionEdge edge;
  edge.action_id = reader.string("action_id");
  edge.source = reader.string("source");
  edge.target = reader.string("target");
  const auto trigger = parse_trigger(reader.string("trigger"));
  if (!trigger) throw_field_error(reader.path_of("trigger"), "unknown trigger");
  edge.trigger = *trigger;
  edge.component_ref = reader.string("component_ref");
  const auto provenance = parse_provenance(reader.string("provenance"));
  if (!provenance) throw_field_error(reader.path_of("provenance"), "unknown provenance");
  edge.provenance = *provenance;
  return edge;
}

Json graph_body(const StgGraph& graph) {
  Json states = Json::array();
  for (const auto& state : graph.states) states.push_back(to_json(state));
  Json actions = Json::array();
  for (const auto& action : graph.actions) actions.push_back(to_json(action));
  return {{"start_state", graph.start_state}, {"states", std::move(states)}, {"actions", std::move(actions)}};
}

StgGraph graph_from_body(const Json& json, const std::string& path) {
  FieldReader reader(json, path, {"version", "start_state", "states", "actions"});
  StgGraph graph;
  graph.start_state = reader.string("start_state");
  const auto& states = reader.required("states");
  if (!states.is_array()) throw_field_error(reader.path_of("states"), "expected an array");
  for (std::size_t i = 0; i < states.size(); ++i) {
    graph.states.push_back(state_from_json(states[i], reader.path_of("states") + "/" + std::to_string(i)));
  }
  const auto& actions = reader.required("actions");
  if (!actions.is_array()) throw_field_error(reader.path_of("actions"), "expected an array");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    graph.actions.push_back(
        action_from_json(actions[i], reader.path_of("actions") + "/" + std::to_string(i)));
  }
  return graph;
}

Json graph_document(const StgGraph& graph) {
  Json doc = graph_body(graph);
  doc["version"] = kDocumentVersion;
  return doc;
}

StgGraph graph_from_document(const Json& doc) {
  check_envelope(doc, {"start_state", "states", "actions"});
  return graph_from_body(doc, "");
}

std::string save_graph(const StgGraph& graph) { return graph_document(graph).dump(2) + "\n"; }

StgGraph load_graph(std::string_view bytes) { return graph_from_document(parse_json(bytes)); }

Json violations_to_json(const std::vector<Violation>& violations) {
  Json out = Json::array();
  for (const auto& v : violations) {
    out.push_back({{"invariant", v.invariant}, {"id", v.id}, {"detail", v.detail}});
  }
  return out;
}

}  // namespace stgnav
