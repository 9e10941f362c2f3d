#pragma once

#include <stdexcept>
#include <string>

namespace concal {

// Precondition failure on a documented operation contract.
struct ContractViolation : std::invalid_argument {
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// Not enough data to produce a statistically meaningful result
// (e.g. empty calibration set, empty trace).
struct InsufficientData : std::runtime_error {
  explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace concal

#define CONCAL_REQUIRE(cond, msg)                  \
  do {                                             \
    if (!(cond)) throw ::concal::ContractViolation(msg); \
  } while (0)
