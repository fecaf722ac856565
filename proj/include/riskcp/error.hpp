#pragma once

#include <stdexcept>
#include <string>

namespace rcp {

/// Raised for problems the caller can fix: bad files, bad flags, violated
/// preconditions. The CLI maps these to exit code 2; anything else is an
/// internal error (exit code 1).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rcp
