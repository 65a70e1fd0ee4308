#pragma once

#include <stdexcept>
#include <string>

namespace rilab {

// Exit-code mapping lives in the CLI: ConfigError -> 2, ToleranceError -> 3,
// InvariantError -> 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rilab
