#pragma once

#include <stdexcept>
#include <string>

namespace ptp {

// Thrown on contract violations (dimension mismatch, empty geometry, malformed files).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace ptp
