#pragma once

#include <stdexcept>
#include <string>

namespace ivm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Arity or variable mismatch between a tuple/operation and a schema.
struct SchemaError : Error {
  using Error::Error;
};

/// Ring arithmetic left the representable range; wrapping is never allowed.
struct OverflowError : Error {
  using Error::Error;
};

/// Malformed query, relation, or stream text.
struct ParseError : Error {
  using Error::Error;
};

/// Invalid update stream content (unknown relation, bad multiplicity, ...).
struct StreamError : Error {
  using Error::Error;
};

/// Classifier preconditions violated (e.g. repeated relation symbols).
struct ClassifyError : Error {
  using Error::Error;
};

/// Data contradicts a declared functional dependency.
struct FdViolation : Error {
  using Error::Error;
};

/// Query shape outside what an engine maintains.
struct NotQHierarchical : Error {
  using Error::Error;
};

struct UnsupportedAccessPattern : Error {
  using Error::Error;
};

struct EngineError : Error {
  using Error::Error;
};

}  // namespace ivm
