#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lpart {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value lies outside its admissible range (feature outside [0,1], bad label, bad hyperparameter).
class DomainError : public Error {
public:
    using Error::Error;
};

// Vector dimensions disagree.
class StructuralError : public Error {
public:
    using Error::Error;
};

// A caller broke an operation's precondition (e.g. empty winner set).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// The object is not in a state that allows the call (e.g. predicting with an empty model).
class StateError : public Error {
public:
    using Error::Error;
};

// Invalid experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Corrupt, truncated or version-mismatched serialized data.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace lpart
