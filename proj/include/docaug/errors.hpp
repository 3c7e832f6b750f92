#pragma once

#include <stdexcept>
#include <string>

namespace docaug {

/// Bad input: malformed files, violated invariants, invalid configuration.
/// Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An external provider (translator, MT, embedder, scorer) failed after
/// retries. Maps to CLI exit code 2.
class ProviderError : public std::runtime_error {
  public:
    explicit ProviderError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace docaug
