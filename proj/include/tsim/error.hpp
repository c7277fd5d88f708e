#pragma once

#include <stdexcept>
#include <string>

namespace tsim {

/// Invalid configuration value; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// API misuse (stepping a finished episode, shape mismatch, ...).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace tsim
