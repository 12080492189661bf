#pragma once

#include <stdexcept>
#include <string>

namespace probcast {

// Thrown when an iterative routine fails to converge or a computation
// produces a non-finite value it cannot recover from.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on tensor shape mismatches; the message names the op and both shapes.
class shape_error : public std::runtime_error {
 public:
  explicit shape_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on malformed input files; the message carries line-level context.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on invalid run configuration (empty validation split, bad flags, ...).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace probcast
