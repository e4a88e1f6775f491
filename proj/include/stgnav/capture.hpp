#pragma once

// Versioned JSON documents. Every top-level document carries `version: "1"`;
// unknown fields are rejected and errors name the JSON pointer of the
// offending field.

#include "stgnav/stg.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>
#include <string_view>

namespace stgnav {

using Json = nlohmann::json;

inline constexpr std::string_view kDocumentVersion = "1";

/// Parses text into JSON, mapping syntax errors to ErrorCode::parse with the
/// line number in the message.
Json parse_json(std::string_view text);

/// Checks `version` and the allowed key set of a top-level document.
void check_envelope(const Json& doc, std::initializer_list<std::string_view> allowed_keys);

/// Strict field access for nested objects.
class FieldReader {
 public:
  FieldReader(const Json& object, std::string path, std::initializer_list<std::string_view> allowed);

  const Json& required(std::string_view key) const;
  const Json* optional(std::string_view key) const;

  std::string string(std::string_view key) const;
  std::optional<std::string> optional_string(std::string_view key) const;
  std::uint64_t unsigned_integer(std::string_view key) const;
  double number(std::string_view key) const;

  std::string path_of(std::string_view key) const;
  const std::string& path() const { return path_; }

 private:
  const Json& object_;
  std::string path_;
};

[[noreturn]] void throw_field_error(const std::string& path, const std::string& message);

Json to_json(const ComponentNode& node);
Json to_json(const StateNode& state);
Json to_json(const ActionEdge& edge);

ComponentNode component_from_json(const Json& json, const std::string& path);
StateNode state_from_json(const Json& json, const std::string& path);
ActionEdge action_from_json(const Json& json, const std::string& path);

/// Graph body without the version envelope.
Json graph_body(const StgGraph& graph);
StgGraph graph_from_body(const Json& json, const std::string& path);

Json graph_document(const StgGraph& graph);
StgGraph graph_from_document(const Json& doc);

std::string save_graph(const StgGraph& graph);
StgGraph load_graph(std::string_view bytes);

Json violations_to_json(const std::vector<Violation>& violations);

}  // namespace stgnav
