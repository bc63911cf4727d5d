#pragma once

#include <stdexcept>
#include <string>

namespace ksgan {

/// Raised when a caller violates an operation's precondition
/// (shape mismatch, empty batch, unknown name, bad config field, ...).
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a file cannot be read back (bad magic, checksum, truncation).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ksgan
