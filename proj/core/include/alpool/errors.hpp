#pragma once

#include <stdexcept>
#include <string>

namespace alpool {

/// Malformed text input (dataset files, config files). Message carries the
/// offending line number.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally valid input that violates a data invariant (duplicate uid,
/// unknown uid, missing artifact files).
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised by the AL iteration ops when asked to iterate on an empty pool.
/// The outer loop treats this as normal early termination.
struct PoolExhausted : std::runtime_error {
  PoolExhausted() : std::runtime_error("pool set is empty") {}
};

/// z-test cannot be computed: both variances are zero and the EERs differ.
struct DegenerateVariance : std::runtime_error {
  explicit DegenerateVariance(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace alpool
