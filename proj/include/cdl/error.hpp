#pragma once

#include <stdexcept>

namespace cdl {

// Violated call contract: bad shapes, out-of-range arguments, empty inputs.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed or unsatisfiable input data: parse failures, class shortages.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid experiment or CLI configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cdl
