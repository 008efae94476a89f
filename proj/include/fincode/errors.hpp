#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fincode {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or usage; maps to CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A lazy query did not resolve inside its window/level cap. Carries the
// radius that had been explored when it gave up.
class UnresolvedError : public Error {
 public:
  UnresolvedError(const std::string& what, std::int64_t radius)
      : Error(what + " (explored radius " + std::to_string(radius) + ")"), radius_(radius) {}
  std::int64_t radius() const { return radius_; }

 private:
  std::int64_t radius_;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ZeroProbabilityError : public Error {
 public:
  using Error::Error;
};

class OutOfWindowError : public Error {
 public:
  using Error::Error;
};

// Hard engine assertion (bit over-read, reader collision, conservation).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace fincode
