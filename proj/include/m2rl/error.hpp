#pragma once

#include <stdexcept>
#include <string>

namespace m2rl {

// Malformed level files, config files, CSV inputs. The message names the
// offending field/line so the CLI can surface it as a one-line error.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a hard action mask leaves no sampleable action. This is a
// contract, not a crash: callers attach the triggering state and halt.
class MaskedAllActionsError : public std::runtime_error {
public:
    explicit MaskedAllActionsError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite loss or gradient during training.
class NonFiniteError : public std::runtime_error {
public:
    explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace m2rl
