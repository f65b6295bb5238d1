// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace softcache {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameterError : public Error {
public:
    using Error::Error;
};

/// A Case-1 operation received a Case-2 graph, or vice versa.
class WrongCaseError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what),
          line_number(line) {}
    std::size_t line_number;
};

class InvalidDatasetError : public Error {
public:
    using Error::Error;
};

class ConstraintViolationError : public Error {
public:
    using Error::Error;
};

class NumericFailureError : public Error {
public:
    using Error::Error;
};

class AssignmentError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

class ReportError : public Error {
public:
    using Error::Error;
};

} // namespace softcache
