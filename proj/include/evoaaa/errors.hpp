#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evoaaa {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDataset : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SplitError : public Error {
public:
    using Error::Error;
};

class IncompleteTable : public Error {
public:
    using Error::Error;
};

// Raised by forward passes when an intermediate value stops being finite.
class NumericOverflow : public Error {
public:
    NumericOverflow(std::size_t layer, const std::string& what)
        : Error(what), layer_(layer) {}
    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

// Row/column are 1-based as they appear in the file.
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : Error(what), row_(row), column_(column) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

} // namespace evoaaa
