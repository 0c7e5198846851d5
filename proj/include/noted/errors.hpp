#pragma once

#include <stdexcept>
#include <string>

namespace noted {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A required text field was blank after trimming.
struct EmptyFieldError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Malformed record in a line-delimited file. `line` is 1-based.
struct FormatError : Error {
    FormatError(const std::string& msg, int line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    int line;
};

struct UnparsableActionError : Error {
    explicit UnparsableActionError(std::string raw_text)
        : Error("unparsable action: " + raw_text), raw(std::move(raw_text)) {}
    std::string raw;
};

struct TemplateError : Error {
    using Error::Error;
};

struct BackendError : Error {
    using Error::Error;
};

struct ScriptMissError : BackendError {
    using BackendError::BackendError;
};

struct CassetteMissError : BackendError {
    using BackendError::BackendError;
};

struct IndexOutOfRangeError : Error {
    using Error::Error;
};

struct InvalidVocabularyError : Error {
    using Error::Error;
};

struct EmptyRunError : Error {
    using Error::Error;
};

struct IdMismatchError : Error {
    using Error::Error;
};

struct ZeroCountError : Error {
    using Error::Error;
};

struct NonMonotoneCheckpointsError : Error {
    using Error::Error;
};

}  // namespace noted
