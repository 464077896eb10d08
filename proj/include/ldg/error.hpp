#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ldg {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Error carrying a character offset (expressions) or line number (files).
class ParseError : public Error
{
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " (at " + std::to_string(position) + ")"), detail_(message), position_(position)
    {}

    std::size_t position() const noexcept { return position_; }
    /// Message without the position suffix.
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string detail_;
    std::size_t position_;
};

class ValidationError : public Error
{
public:
    using Error::Error;
};

class MeshError : public Error
{
public:
    using Error::Error;
};

/// Raised when a kernel or residual produces NaN/Inf.
class NonFiniteError : public Error
{
public:
    using Error::Error;
};

class SolverError : public Error
{
public:
    using Error::Error;
};

} // namespace ldg
