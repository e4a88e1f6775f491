#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stgnav {

enum class ErrorCode {
  parse,
  version,
  validation,
  parameter,
  capacity,
  conflict,
  not_found,
  unknown_state,
  precondition,
  internal,
};

std::string_view to_string(ErrorCode code);

/// Base of every error raised by the library. `path` locates the offending
/// field or id (a JSON pointer for documents, an id otherwise); may be empty.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string path = {})
      : std::runtime_error(std::move(message)), code_(code), path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorCode code_;
  std::string path_;
};

}  // namespace stgnav
