#pragma once

#include <stdexcept>
#include <string>

namespace exact {

// Base class for all domain errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A required text field was blank.
struct EmptyFieldError : Error {
  using Error::Error;
};

// Preferred and dispreferred responses are identical; the pair carries no
// ranking signal and is rejected at ingestion.
struct DegeneratePairError : Error {
  using Error::Error;
};

struct EmptyLibraryError : Error {
  using Error::Error;
};

// Requested subset enumeration exceeds the configured cap.
struct EnumerationTooLargeError : Error {
  using Error::Error;
};

// Remote endpoint unreachable after the configured retries.
struct BackendUnavailableError : Error {
  using Error::Error;
};

// Remote endpoint reachable but the response lacks required fields
// (for example no echoed log-probs).
struct BackendProtocolError : Error {
  using Error::Error;
};

struct EmptyMemoryError : Error {
  using Error::Error;
};

struct DimensionMismatchError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Persisted index failed validation. `line` is the 1-based line number of
// the offending record, or 0 when the file as a whole is malformed.
struct CorruptIndexError : Error {
  CorruptIndexError(const std::string& what, int line_no)
      : Error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
  int line = 0;
};

struct EmptyTopicError : Error {
  using Error::Error;
};

struct EmptyTestSetError : Error {
  using Error::Error;
};

struct InfeasibleGeometryError : Error {
  using Error::Error;
};

}  // namespace exact
