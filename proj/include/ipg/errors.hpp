#pragma once

#include <stdexcept>
#include <string>

namespace ipg {

// Precondition or shape violation; message names expected vs actual.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Problem data that breaks a construction invariant (odd block dim, beta rule, ...).
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense fallback asked for something beyond desk scale.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A span-model schedule referenced an oracle term the model does not provide,
// or a tracked run broke a support-expansion bound.
class SpanRuleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ipg
