#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace care {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file: non-numeric cell, ragged row. Locations are 1-based
// data coordinates (header row excluded).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t col)
        : Error(what), row_(row), col_(col) {}

    std::size_t row() const { return row_; }
    std::size_t col() const { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

// Structurally parseable but semantically invalid data (NaN/Inf values,
// labels outside {0,1}, degenerate covariance, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// An argument outside a function's contract (k too large, empty input, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// A numeric routine failed to produce a usable result.
class NumericalError : public Error {
public:
    using Error::Error;
};

// No detector flagged any point, so agreement rates over the flagged union
// are undefined. Callers decide how to treat the iteration.
class EmptyUnionError : public Error {
public:
    EmptyUnionError() : Error("no detector flagged any point; flagged union is empty") {}
};

}  // namespace care
