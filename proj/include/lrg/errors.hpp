#pragma once

#include <stdexcept>
#include <string>

namespace lrg {

// Bad caller input: malformed matrices, dimension mismatches, invalid config.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: singular systems, failed factorizations, non-finite results.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// File open/read/write failures and unparseable file content at the byte level.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lrg
