#pragma once

#include <stdexcept>
#include <string>

namespace mimq {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SizeError : std::length_error {
  using std::length_error::length_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class BudgetError : public std::runtime_error {
 public:
  BudgetError(std::string kind, std::string stage, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)), stage_(std::move(stage)) {}

  const std::string& kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string kind_;
  std::string stage_;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : std::runtime_error(key_path + ": " + message), key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace mimq
