#pragma once

#include <stdexcept>
#include <string>

namespace singletsim {

/// Bad user input: malformed config, invalid index, inconsistent trace file.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (non-Hermitian generator, fit did not converge).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace singletsim
