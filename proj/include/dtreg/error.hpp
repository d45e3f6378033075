#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dtreg {

// Rejected user input: malformed files, invariant violations, bad options.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what,
                      std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), index_(index) {}

  // Zero-based record index (or one-based file line, for parse errors).
  std::optional<std::size_t> index() const { return index_; }

 private:
  std::optional<std::size_t> index_;
};

// A minimization could not produce a usable answer.
class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dtreg
