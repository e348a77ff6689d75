#pragma once

#include <stdexcept>
#include <string>

namespace fedecg {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/extent violations: bad tensor shapes, mismatched operands.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid argument values (fan_in = 0, bad labels, bad sample rates, ...).
struct ValueError : Error {
    using Error::Error;
};

// Two ParamSets that must be name/shape-aligned are not.
struct AlignmentError : Error {
    using Error::Error;
};

// A cache handed to a backward pass does not belong to the matching forward.
struct ContractError : Error {
    using Error::Error;
};

// Configuration file / CLI problems; message names the offending key.
struct ConfigError : Error {
    using Error::Error;
};

// Dataset ingestion problems; message names the offending record id.
struct IngestError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Envelope encoding failures (e.g. tensor name longer than 65535 bytes).
struct EncodeError : Error {
    using Error::Error;
};

enum class DecodeErrorKind {
    BadMagic,
    BadVersion,
    CrcMismatch,
    Truncated,
    Malformed,
};

// Envelope decoding failures carry the corruption class they detected.
struct DecodeError : Error {
    DecodeErrorKind kind;
    DecodeError(DecodeErrorKind k, const std::string& msg) : Error(msg), kind(k) {}
};

// Publisher-side queue overflow.
struct BackpressureError : Error {
    using Error::Error;
};

// Federation protocol violations (duplicate client in a round, missing client
// under full participation, round id mismatch).
struct ProtocolError : Error {
    using Error::Error;
};

// Transport poll deadline expired; the round may be retried.
struct TimeoutError : Error {
    using Error::Error;
};

}  // namespace fedecg
