#pragma once

#include <stdexcept>
#include <string>

namespace logpen {

/// Invalid or inconsistent configuration (bad grid, bad parameters, unreadable file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A standing hypothesis on the potential or the constants does not hold.
class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The field has no positive part inside the rescaled well, so the fiber
/// map has no interior maximum.
class ConeViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A monotone root bracket could not be established.
class BracketFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientRows : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace logpen
