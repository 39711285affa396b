#pragma once

#include <stdexcept>
#include <string>

namespace covertime {

// Error classes map onto the CLI exit-code contract:
// parse/usage -> 2, budget -> 3, precondition -> 4, internal check -> 5.

struct FileFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace covertime
