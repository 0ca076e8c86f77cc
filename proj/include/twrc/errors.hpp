#ifndef TWRC_ERRORS_HPP
#define TWRC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace twrc {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A probability vector failed validation (negative mass, wrong total, wrong length).
class InvalidPmf : public Error {
public:
    using Error::Error;
};

// Alphabet sizes of the operands do not line up.
class SizeMismatch : public Error {
public:
    using Error::Error;
};

// Malformed channel-spec or CF-input document.
class ParseError : public Error {
public:
    using Error::Error;
};

// An operation that requires a deterministic uplink was given a noisy one.
class NotDeterministic : public Error {
public:
    using Error::Error;
};

// decompose target lies outside the region.
class PointOutsideRegion : public Error {
public:
    using Error::Error;
};

// A search, sweep, or simulation exceeds its configured resource budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

// A CF input violates a cardinality bound.
class CardinalityViolation : public Error {
public:
    using Error::Error;
};

}  // namespace twrc

#endif
