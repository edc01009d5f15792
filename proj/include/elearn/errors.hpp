#pragma once

#include <stdexcept>
#include <string>

namespace elearn {

// Exit-code mapping used by the CLI: config/parameter problems -> 2,
// relevance/identification failures -> 3, numerical failures -> 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidParameter : std::runtime_error {
    explicit InvalidParameter(const std::string& msg) : std::runtime_error(msg) {}
};

struct IdentificationError : std::runtime_error {
    explicit IdentificationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace elearn
