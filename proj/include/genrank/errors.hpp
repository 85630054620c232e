#pragma once

#include <stdexcept>
#include <string>

namespace genrank {

// Shapes or settings that do not fit together.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-provided data: files, text, ids.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A referential check over loaded data failed (dangling ids, duplicates).
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

// API called out of contract (empty batch, non-scalar backward, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN or Inf produced somewhere in the graph.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace genrank
