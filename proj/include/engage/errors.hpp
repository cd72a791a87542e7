#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace engage {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DetectorUnavailable : public Error {
public:
    using Error::Error;
};

class ModelLoadError : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    ShapeMismatch(int expected, int actual)
        : Error("patch side " + std::to_string(actual) + " does not match expected " +
                std::to_string(expected)),
          expected_(expected), actual_(actual) {}

    int expected() const noexcept { return expected_; }
    int actual() const noexcept { return actual_; }

private:
    int expected_;
    int actual_;
};

class UnknownEmotion : public Error {
public:
    using Error::Error;
};

class EmptyWindow : public Error {
public:
    using Error::Error;
};

class EmptySession : public Error {
public:
    using Error::Error;
};

class NoQualifyingStudents : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SourceOpenError : public Error {
public:
    using Error::Error;
};

class DatasetError : public Error {
public:
    using Error::Error;
};

/// Strict CSV parse failure; `row` is 1-based and counts the header line.
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::string reason)
        : Error("row " + std::to_string(row) + ": " + reason), row_(row), reason_(std::move(reason)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t row_;
    std::string reason_;
};

}  // namespace engage
