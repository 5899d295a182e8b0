#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace repairbench {

// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t token_index)
      : std::runtime_error(what), token_index_(token_index) {}

  /// Index of the first token that could not be derived.
  std::size_t token_index() const noexcept { return token_index_; }

 private:
  std::size_t token_index_;
};

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key_path, const std::string& message)
      : std::runtime_error(key_path + ": " + message), key_path_(key_path) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace repairbench
