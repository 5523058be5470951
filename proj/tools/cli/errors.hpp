#pragma once

#include <stdexcept>
#include <string>

namespace rgamlss::cli {

/// Input does not match what a command expects: missing columns, bad config
/// fields, artifact/data mismatch or an unsupported artifact version.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

}  // namespace rgamlss::cli
