#pragma once

#include <stdexcept>
#include <string>

namespace fcvg {

/// Argument outside the mathematical domain of an operation (u outside [0,1], N < 2, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Shapes, id sets or topologies that do not line up.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input files. The message always carries the offending path.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN / Inf detected during sampling or training.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A valid request that the selected configuration cannot serve (e.g. v_to_x0 on a non-vp schedule).
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace fcvg
