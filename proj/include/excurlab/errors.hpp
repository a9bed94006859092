#pragma once

#include <stdexcept>

namespace excurlab {

// Filesystem-level failure (open/create/write), as opposed to content or
// argument errors; lets API layers map it to a distinct status code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace excurlab
