#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace veriflow {

// Base of every error the engine raises. Subclasses carry the failure
// category; the message is meant for humans and logs.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(const std::string &message, std::string location)
      : Error(location.empty() ? message : message + " (at " + location + ")"),
        location_(std::move(location)) {}

  // Byte offset ("byte 17") or JSON field path ("nodes[0].id").
  const std::string &location() const noexcept { return location_; }

private:
  std::string location_;
};

class CycleError : public Error {
public:
  using Error::Error;
};

class MissingUpstreamValue : public Error {
public:
  MissingUpstreamValue(const std::string &node, const std::string &var)
      : Error("missing upstream value <" + node + "." + var + ">"),
        node_(node), var_(var) {}
  const std::string &node() const noexcept { return node_; }
  const std::string &var() const noexcept { return var_; }

private:
  std::string node_;
  std::string var_;
};

class NameCollision : public Error {
public:
  using Error::Error;
};

class UnknownNode : public Error {
public:
  using Error::Error;
};

// llm gateway
class GatewayError : public Error {
public:
  using Error::Error;
};
class TransportError : public GatewayError {
public:
  using GatewayError::GatewayError;
};
class AuthError : public GatewayError {
public:
  using GatewayError::GatewayError;
};
class ScriptExhausted : public GatewayError {
public:
  using GatewayError::GatewayError;
};
class WrongBackendKind : public GatewayError {
public:
  using GatewayError::GatewayError;
};
class UnknownModel : public Error {
public:
  using Error::Error;
};

class PlanGenerationFailed : public Error {
public:
  PlanGenerationFailed(const std::string &message,
                       std::vector<std::string> violations)
      : Error(message), violations_(std::move(violations)) {}
  const std::vector<std::string> &violations() const noexcept {
    return violations_;
  }

private:
  std::vector<std::string> violations_;
};

// tooling
class DuplicateTool : public Error {
public:
  using Error::Error;
};
class EvalError : public Error {
public:
  EvalError(const std::string &message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};
class BadFilterField : public Error {
public:
  using Error::Error;
};
class HarnessUnavailable : public Error {
public:
  using Error::Error;
};

class StructuredOutputError : public Error {
public:
  StructuredOutputError(const std::string &message,
                        std::vector<std::string> missing = {})
      : Error(message), missing_(std::move(missing)) {}
  const std::vector<std::string> &missing() const noexcept { return missing_; }

private:
  std::vector<std::string> missing_;
};

// trace-metrics
class StoreIoError : public Error {
public:
  using Error::Error;
};
class EmptyInput : public Error {
public:
  using Error::Error;
};
class SchemaMismatch : public Error {
public:
  using Error::Error;
};

} // namespace veriflow
