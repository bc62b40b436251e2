#pragma once

#include <stdexcept>
#include <string>

namespace rallypose {

// Raised for bad inputs: malformed files, invariant violations, unusable
// configurations. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public InputError {
public:
    ValidationError(const std::string& field, const std::string& what)
        : InputError("invalid " + field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class GeometryError : public InputError {
public:
    using InputError::InputError;
};

class DegeneratePoseError : public InputError {
public:
    using InputError::InputError;
};

class DataError : public InputError {
public:
    using InputError::InputError;
};

class DegenerateEmbeddingError : public InputError {
public:
    using InputError::InputError;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class SequencingError : public InputError {
public:
    using InputError::InputError;
};

class ReferenceError : public InputError {
public:
    using InputError::InputError;
};

class AlignmentError : public InputError {
public:
    using InputError::InputError;
};

class ScenarioError : public InputError {
public:
    using InputError::InputError;
};

// Programming errors inside the numeric kernel.
class ShapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace rallypose
