#pragma once

#include <stdexcept>
#include <string>

namespace catsim {

// Thrown when a requested Fock index or the truncation budget of a
// computation exceeds the configured cutoff.
class CutoffExceeded : public std::runtime_error {
public:
    explicit CutoffExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the experiment-file parser; `key()` names the offending key.
class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& key, const std::string& what)
        : std::runtime_error(what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

}  // namespace catsim
