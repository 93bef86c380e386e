#pragma once

#include <stdexcept>
#include <string>

namespace combarw {

/// Raised when an operation is asked about a sink or an out-of-range site.
class InvalidSite : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A hard resource guard tripped (instruction budget, cell cap, index search depth).
class GuardExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace combarw
