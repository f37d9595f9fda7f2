/*
 * Exception types raised by the library. Every error derives from
 * rieffel::Error so callers can catch the whole family at once.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace rieffel {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define RIEFFEL_ERROR(Name)                       \
    struct Name : Error {                         \
        explicit Name(const std::string& what)    \
            : Error(#Name ": " + what) {}         \
    }

RIEFFEL_ERROR(SingularError);
RIEFFEL_ERROR(NotSelfAdjointError);
RIEFFEL_ERROR(NotHomomorphismError);
RIEFFEL_ERROR(OrderTooHighError);
RIEFFEL_ERROR(DecayViolationError);
RIEFFEL_ERROR(GridMismatchError);
RIEFFEL_ERROR(BoxMismatchError);
RIEFFEL_ERROR(ConvergenceError);
RIEFFEL_ERROR(NoConvergenceError);
RIEFFEL_ERROR(DivideByZeroError);
RIEFFEL_ERROR(UnsupportedOperatorError);
RIEFFEL_ERROR(ParseError);
RIEFFEL_ERROR(InvalidInputError);

#undef RIEFFEL_ERROR

}  // namespace rieffel
