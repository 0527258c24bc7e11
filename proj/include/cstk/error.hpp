#pragma once

#include <stdexcept>
#include <string>

namespace cstk {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Malformed configuration, file or phantom description.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A numerical safeguard tripped (near-singular pivot, vanishing radius, ...).
struct NumericalGuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cstk
