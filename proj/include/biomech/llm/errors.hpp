#pragma once

#include "biomech/core/error.hpp"

#include <string>

namespace biomech::llm {

class UnboundPlaceholderError : public Error {
 public:
  explicit UnboundPlaceholderError(std::string name)
      : Error("unbound placeholder '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class GatewayError : public Error {
 public:
  enum class Kind { retries_exhausted, http_error, replay_miss, mock_miss, bad_response, empty_completion };

  GatewayError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Model reply that could not be turned into the structure we asked for.
/// Keeps the raw text so callers can log it.
class ReplyParseError : public ParseError {
 public:
  ReplyParseError(const std::string& message, std::string raw)
      : ParseError(message), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

}  // namespace biomech::llm
