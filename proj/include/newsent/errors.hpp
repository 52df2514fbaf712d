#pragma once

#include <stdexcept>
#include <string>

namespace newsent {

/// Unreadable or unwritable file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration: invalid patterns, malformed lexicon files, bad parameter values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside an operation's domain (too short, zero range, misaligned ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A word that is not in the vocabulary.
class LookupError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Singular or rank-deficient systems in estimation, non-PD covariance.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace newsent
