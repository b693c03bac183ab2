#pragma once

#include <stdexcept>
#include <string>

namespace qrepair {

// Base class for every error the library raises.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller handed us something unusable (empty question, bad arguments).
struct InvalidInputError : Error {
  using Error::Error;
};

// A backend could not be reached even after the retry budget.
struct TransportError : Error {
  using Error::Error;
};

// Retrieval backend unreachable; caller decides the fallback.
struct RetrievalUnavailableError : TransportError {
  using TransportError::TransportError;
};

// Every drafting rung that needed the model hit a transport failure.
struct DraftUnavailableError : TransportError {
  using TransportError::TransportError;
};

// Refinement call failed at transport level; pipeline keeps the draft.
struct RefineUnavailableError : TransportError {
  using TransportError::TransportError;
};

// External grader unreachable for one item.
struct GradingUnavailableError : TransportError {
  using TransportError::TransportError;
};

// Backend answered but the payload does not match the expected shape.
struct PayloadError : Error {
  using Error::Error;
};

// Bad configuration (missing file, unknown mode, absent env var...).
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem-level failure (unwritable output, unreadable input).
struct IoError : Error {
  using Error::Error;
};

}  // namespace qrepair
