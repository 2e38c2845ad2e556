#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oddshts {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hierarchy/frame shape problems: missing columns, empty frames, duplicate ids.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Invalid parameter values (probabilities out of range, negative totals, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Bad input data: short or non-finite series, malformed files, length mismatches.
class DataError : public Error {
public:
    using Error::Error;
};

/// Odds of a sibling whose complement sums to zero with no smoothing.
class UndefinedOddsError : public Error {
public:
    explicit UndefinedOddsError(const std::string& what, std::string id = {},
                                std::size_t t = 0)
        : Error(what), id_(std::move(id)), t_(t) {}

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] std::size_t t() const noexcept { return t_; }

private:
    std::string id_;
    std::size_t t_;
};

/// RMSPE with every point excluded by the zero-actual policy.
class UndefinedScoreError : public Error {
public:
    UndefinedScoreError(const std::string& what, std::size_t excluded)
        : Error(what), excluded_(excluded) {}

    [[nodiscard]] std::size_t excluded() const noexcept { return excluded_; }

private:
    std::size_t excluded_;
};

}  // namespace oddshts
